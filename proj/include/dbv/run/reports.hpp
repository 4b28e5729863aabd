#pragma once

// Report runners behind the command-line tool: inverse-temperature sweeps of
// the violation ratios, rate tables, observables, trajectories and
// diagnostics. Every runner returns data tables; writing is separate.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "../dbv.hpp"
#include "config.hpp"

namespace dbv::run {

using Cell = std::variant<std::monostate, double, std::string>; ///< monostate = missing (NA)

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::size_t failed_rows = 0;
};

inline std::string format_double(double x) {
    if (std::isnan(x)) return "NA";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            if (const double* d = std::get_if<double>(&row[i])) out += format_double(*d);
            else if (const std::string* s = std::get_if<std::string>(&row[i])) out += *s;
            else out += "NA";
        }
        out += '\n';
    }
    return out;
}

inline std::string to_json(const Table& t) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json r = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (const double* d = std::get_if<double>(&row[i]))
                r[t.columns[i]] = std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr);
            else if (const std::string* s = std::get_if<std::string>(&row[i])) r[t.columns[i]] = *s;
            else r[t.columns[i]] = nullptr;
        }
        rows.push_back(std::move(r));
    }
    nlohmann::ordered_json doc;
    doc["name"] = t.name;
    doc["columns"] = t.columns;
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
}

/// Writes <dir>/<name>.csv or .json with LF line endings; returns the path.
inline std::string write_table(const Table& t, const std::string& dir, OutputFormat format) {
    std::filesystem::create_directories(dir);
    const std::string path =
        (std::filesystem::path(dir) / (t.name + (format == OutputFormat::csv ? ".csv" : ".json"))).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << (format == OutputFormat::csv ? to_csv(t) : to_json(t));
    if (!f) throw Error("write failed for " + path);
    return path;
}

namespace detail {

/// Runs work(i) for i in [0, n) on up to `jobs` threads. Each index writes
/// only its own slot, so results do not depend on scheduling.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& work) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) work(i);
        });
    for (auto& th : pool) th.join();
}

/// Keeps status text inside one CSV field.
inline std::string status_text(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
    return s;
}

inline std::string failure_status(const RateTable& t) {
    std::string s = "failed:";
    for (const auto& f : t.failures)
        s += " (" + t.channels.label(f.row) + "|" + t.channels.label(f.col) + ") " + f.message;
    return status_text(s);
}

inline Cell maybe(const std::optional<double>& x) { return x ? Cell{*x} : Cell{}; }

constexpr std::size_t minus = 0, zero = 1, plus = 2;

} // namespace detail

// ---------------------------------------------------------------------------
// Violation-ratio sweep

struct SweepRow {
    double beta_delta_e = 0.0;
    std::optional<double> i_0m, i_pm, i_0p;
    std::optional<double> lhs_a, rhs_a, lhs_b, rhs_b;
    std::optional<double> stat_residual;
    std::optional<double> quad_err_max; ///< largest absolute error estimate of the three ratios
    std::string status = "ok";

    bool ok() const { return status.rfind("ok", 0) == 0; }
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t failed() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok(); }));
    }
};

inline SweepRow sweep_row(const RunConfig& cfg, const triangle::TriangleModel& model, double bde) {
    using namespace detail;
    SweepRow row;
    row.beta_delta_e = bde;
    try {
        const RateTable t = rate_matrix(cfg.bath(bde), model.channels, model.coupling, cfg.rate_options());
        auto ratio = [&](std::size_t k, std::size_t l) -> std::optional<double> {
            return t.has_ratio(k, l) ? std::optional<double>(t.ratio_at(k, l)) : std::nullopt;
        };
        row.i_0m = ratio(zero, minus);
        row.i_pm = ratio(plus, minus);
        row.i_0p = ratio(zero, plus);
        if (row.i_0m && row.i_pm && row.i_0p)
            row.quad_err_max = std::max({t.ratio_error(zero, minus), t.ratio_error(plus, minus), t.ratio_error(zero, plus)});
        if (!t.complete()) {
            row.status = failure_status(t);
            return row;
        }
        // Vanishing rates leave the ratios undefined; the row stays valid.
        if (!(row.i_0m && row.i_pm && row.i_0p)) row.status = "ok_undefined_ratio";
        const ThermalizationResiduals th = thermalization_residuals(t);
        row.lhs_a = th.lhs_a;
        row.rhs_a = th.rhs_a;
        row.lhs_b = th.lhs_b;
        row.rhs_b = th.rhs_b;
        const PauliGenerator g = build_generator(t);
        const double scale = g.max_abs();
        const Eigen::VectorXd w_p = g.matrix() * gibbs_state(t.beta, t.channels).p;
        row.stat_residual = scale > 0.0 ? w_p.cwiseAbs().maxCoeff() / scale : 0.0;
    } catch (const Error& e) {
        row.status = status_text(std::string("failed: ") + e.what());
    }
    return row;
}

inline SweepResult run_dbe_sweep(const RunConfig& cfg, unsigned jobs = 1) {
    const auto model = cfg.model();
    SweepResult res;
    res.rows.resize(cfg.beta_delta_e.size());
    detail::parallel_for(res.rows.size(), jobs,
                         [&](std::size_t i) { res.rows[i] = sweep_row(cfg, model, cfg.beta_delta_e[i]); });
    return res;
}

inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{"beta_deltaE", "I_0m",  "I_pm",          "I_0p",         "lhs_30a", "rhs_30a",
                                               "lhs_30b",     "rhs_30b", "stat_residual", "quad_err_max", "status"};
    return cols;
}

inline Table sweep_table(const SweepResult& res) {
    using detail::maybe;
    Table t{"dbe_sweep", sweep_columns(), {}, res.failed()};
    for (const auto& r : res.rows)
        t.rows.push_back({r.beta_delta_e, maybe(r.i_0m), maybe(r.i_pm), maybe(r.i_0p), maybe(r.lhs_a), maybe(r.rhs_a),
                          maybe(r.lhs_b), maybe(r.rhs_b), maybe(r.stat_residual), maybe(r.quad_err_max), r.status});
    return t;
}

// ---------------------------------------------------------------------------
// Rate tables

inline Table run_rates(const RunConfig& cfg, unsigned jobs = 1) {
    const auto model = cfg.model();
    const auto& ch = model.channels;
    const std::size_t n = ch.size();
    std::vector<std::vector<std::vector<Cell>>> blocks(cfg.beta_delta_e.size());
    std::vector<std::size_t> failed(blocks.size(), 0);
    detail::parallel_for(blocks.size(), jobs, [&](std::size_t i) {
        const double bde = cfg.beta_delta_e[i];
        const RateTable t = rate_matrix(cfg.bath(bde), ch, model.coupling, cfg.rate_options());
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) {
                if (k == l) continue;
                const auto r = static_cast<Eigen::Index>(k), c = static_cast<Eigen::Index>(l);
                std::vector<Cell> row{bde, ch.label(k), ch.label(l)};
                if (!t.computed(r, c)) {
                    std::string msg = "failed";
                    for (const auto& f : t.failures)
                        if (f.row == k && f.col == l) msg += ": " + f.message;
                    row.insert(row.end(), 7, Cell{});
                    row.emplace_back(detail::status_text(msg));
                    ++failed[i];
                } else {
                    row.insert(row.end(), {t.A(r, c), t.A_error(r, c), t.B(r, c), t.B_error(r, c), t.rates(r, c)});
                    if (t.ratio(r, c)) {
                        row.insert(row.end(), {t.I(r, c), t.ratio_error(k, l)});
                        row.emplace_back(std::string("ok"));
                    } else {
                        row.insert(row.end(), 2, Cell{});
                        row.emplace_back(std::string("ok_undefined_ratio"));
                    }
                }
                blocks[i].push_back(std::move(row));
            }
    });
    Table out{"rates", {"beta_deltaE", "k", "l", "A", "A_err", "B", "B_err", "rate", "I", "I_err", "status"}, {}, 0};
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        for (auto& row : blocks[i]) out.rows.push_back(std::move(row));
        out.failed_rows += failed[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Equilibrium observables

inline Table run_thermo(const RunConfig& cfg, unsigned jobs = 1) {
    using namespace detail;
    const auto model = cfg.model();
    std::vector<std::vector<Cell>> rows(cfg.beta_delta_e.size());
    std::vector<char> bad(rows.size(), 0);
    detail::parallel_for(rows.size(), jobs, [&](std::size_t i) {
        const double bde = cfg.beta_delta_e[i];
        std::vector<Cell> row{bde};
        try {
            const RateTable t = rate_matrix(cfg.bath(bde), model.channels, model.coupling, cfg.rate_options());
            if (!t.complete()) throw IncompleteTable(failure_status(t));
            const CurrentSet cs = equilibrium_currents(t);
            const SymmetricPairMatrix jc = heat_currents_closed_form_3qd(t);
            const EntropyReport er = entropy_decomposition(gibbs_state(t.beta, t.channels), t);
            const double sum = cs.J(plus, zero) + cs.J(zero, minus) + cs.J(minus, plus);
            row.insert(row.end(), {cs.K(plus, zero), cs.K(zero, minus), cs.K(minus, plus), cs.J(plus, zero),
                                   cs.J(zero, minus), cs.J(minus, plus), jc(plus, zero), jc(zero, minus), jc(minus, plus),
                                   sum, er.schnakenberg, er.deviation, er.sigma});
            row.emplace_back(std::string("ok"));
        } catch (const Error& e) {
            row.resize(1);
            row.insert(row.end(), 13, Cell{});
            row.emplace_back(status_text(std::string("failed: ") + e.what()));
            bad[i] = 1;
        }
        rows[i] = std::move(row);
    });
    Table out{"thermo",
              {"beta_deltaE", "K_p0", "K_0m", "K_mp", "J_p0", "J_0m", "J_mp", "J_p0_closed", "J_0m_closed", "J_mp_closed",
               "J_cyclic_sum", "schnakenberg_eq", "deviation_eq", "sigma_eq", "status"},
              std::move(rows),
              static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1))};
    return out;
}

// ---------------------------------------------------------------------------
// Population trajectories

inline Table run_evolve(const RunConfig& cfg, unsigned jobs = 1) {
    const auto model = cfg.model();
    std::vector<std::vector<std::vector<Cell>>> blocks(cfg.beta_delta_e.size());
    std::vector<char> bad(blocks.size(), 0);
    const Eigen::Vector3d p0(cfg.p0[0], cfg.p0[1], cfg.p0[2]);
    detail::parallel_for(blocks.size(), jobs, [&](std::size_t i) {
        const double bde = cfg.beta_delta_e[i];
        try {
            const RateTable t = rate_matrix(cfg.bath(bde), model.channels, model.coupling, cfg.rate_options());
            if (!t.complete()) throw IncompleteTable(detail::failure_status(t));
            const PauliGenerator g = build_generator(t);
            const PopulationState peq = gibbs_state(t.beta, t.channels);
            const double scale = g.max_abs();
            const double t_end = scale > 0.0 ? cfg.t_scaled / scale : 0.0;
            const Trajectory tr = evolve({p0, 0.0}, g, t_end, cfg.steps);
            for (const auto& s : tr.states) {
                std::vector<Cell> row{bde, s.time, s.time * scale, s.p(0), s.p(1), s.p(2)};
                try {
                    const double sigma = entropy_production(s, g, peq);
                    row.emplace_back(sigma);
                    row.emplace_back(sigma >= -1e-10 ? 1.0 : 0.0);
                } catch (const DomainError&) {
                    // Infinite entropy production from an empty level being filled.
                    row.emplace_back(std::numeric_limits<double>::infinity());
                    row.emplace_back(1.0);
                }
                row.emplace_back(trace_distance(s.p, peq.p));
                row.emplace_back(std::string("ok"));
                blocks[i].push_back(std::move(row));
            }
        } catch (const Error& e) {
            std::vector<Cell> row{bde};
            row.insert(row.end(), 8, Cell{});
            row.emplace_back(detail::status_text(std::string("failed: ") + e.what()));
            blocks[i].push_back(std::move(row));
            bad[i] = 1;
        }
    });
    Table out{"evolve",
              {"beta_deltaE", "time", "time_scaled", "p_m", "p_0", "p_p", "sigma", "sigma_nonneg", "trace_dist_gibbs", "status"},
              {},
              static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1))};
    for (auto& b : blocks)
        for (auto& row : b) out.rows.push_back(std::move(row));
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct CheckReport {
    Table defects;
    Table summary;
};

inline CheckReport run_check(const RunConfig& cfg, unsigned jobs = 1) {
    using namespace detail;
    const auto model = cfg.model();
    const auto& ch = model.channels;
    CheckReport rep;

    rep.defects = Table{"check_defects", {"energy", "j_out", "j_in", "hermiticity_abs", "symmetry_abs", "time_reversal", "status"}, {}, 0};
    const std::vector<std::pair<std::size_t, std::size_t>> pairs{{plus, zero}, {zero, minus}, {plus, minus}};
    for (double e : cfg.check_grid.values(ch))
        for (auto [jo, ji] : pairs) {
            std::vector<Cell> row{e, ch.label(jo), ch.label(ji)};
            try {
                const TDefects d = t_defects(e, jo, ji, model.coupling, ch);
                row.insert(row.end(), {std::abs(d.hermiticity), std::abs(d.symmetry), d.time_reversal});
                row.emplace_back(std::string("ok"));
            } catch (const Error& ex) {
                row.insert(row.end(), 3, Cell{});
                row.emplace_back(status_text(std::string("failed: ") + ex.what()));
                ++rep.defects.failed_rows;
            }
            rep.defects.rows.push_back(std::move(row));
        }

    std::vector<std::vector<Cell>> rows(cfg.beta_delta_e.size());
    std::vector<char> bad(rows.size(), 0);
    const PopulationState probe{Eigen::Vector3d(0.5, 0.3, 0.2), 0.0};
    parallel_for(rows.size(), jobs, [&](std::size_t i) {
        const double bde = cfg.beta_delta_e[i];
        std::vector<Cell> row{bde};
        try {
            const RateTable t = rate_matrix(cfg.bath(bde), ch, model.coupling, cfg.rate_options());
            if (!t.complete()) throw IncompleteTable(failure_status(t));
            const IdentityResiduals id = identity_residuals(t);
            const DbeResidualReport dbe = dbe_identity_check(t);
            const PauliGenerator g = build_generator(t);
            const PopulationState peq = gibbs_state(t.beta, t.channels);
            const double scale = g.max_abs();
            const double stat = scale > 0.0 ? (g.matrix() * peq.p).cwiseAbs().maxCoeff() / scale : 0.0;
            const double s25 = entropy_production(probe, g, peq);
            std::optional<double> closure;
            try {
                const double s26 = entropy_decomposition(probe, t).sigma;
                closure = std::abs(s25 - s26) / std::max({std::abs(s25), std::abs(s26), residual_floor});
            } catch (const UndefinedRatio&) {
            }
            row.insert(row.end(), {id.reciprocal, id.relabeling});
            row.push_back(dbe.empty ? Cell{} : Cell{dbe.max_residual});
            row.insert(row.end(), {stat, s25});
            row.push_back(maybe(closure));
            row.push_back(t.max_relative_error());
            row.emplace_back(std::string(dbe.empty ? "ok_empty" : "ok"));
        } catch (const Error& e) {
            row.resize(1);
            row.insert(row.end(), 7, Cell{});
            row.emplace_back(status_text(std::string("failed: ") + e.what()));
            bad[i] = 1;
        }
        rows[i] = std::move(row);
    });
    rep.summary = Table{"check_summary",
                        {"beta_deltaE", "reciprocal_residual", "relabel_residual", "dbe_residual_max", "stat_residual",
                         "sigma_probe", "entropy_closure", "quad_rel_err_max", "status"},
                        std::move(rows),
                        static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1))};
    return rep;
}

} // namespace dbv::run
