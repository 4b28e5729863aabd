#pragma once

// Run configuration loaded from YAML. See README for the schema.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "../errors.hpp"
#include "../model_3qd.hpp"
#include "../thermal_rates.hpp"

namespace dbv::run {

/// Malformed file or wrongly typed field.
class ParseError : public Error {
public:
    ParseError(const std::string& field, int line, const std::string& what)
        : Error(format(field, line, what)), field_(field), line_(line) {}

    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; } ///< 1-based, 0 if unknown

private:
    static std::string format(const std::string& field, int line, const std::string& what) {
        std::string s = "parse error";
        if (line > 0) s += " at line " + std::to_string(line);
        if (!field.empty()) s += " in '" + field + "'";
        return s + ": " + what;
    }

    std::string field_;
    int line_;
};

/// Well-formed file whose values violate the schema; lists every violation.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& x : v) s += "\n  - " + x;
        return s;
    }

    std::vector<std::string> violations_;
};

enum class Report { dbe, rates, evolve, thermo, check };
enum class OutputFormat { csv, json };

inline const char* report_name(Report r) {
    switch (r) {
    case Report::dbe: return "dbe";
    case Report::rates: return "rates";
    case Report::evolve: return "evolve";
    case Report::thermo: return "thermo";
    case Report::check: return "check";
    }
    return "";
}

/// Total energies for the defect diagnostics. Unset bounds default to
/// [top + 0.05 spread, top + 4 spread] above the highest threshold.
struct EnergyGrid {
    std::optional<double> from;
    std::optional<double> to;
    std::size_t points = 40;

    std::vector<double> values(const ChannelSet& ch) const {
        const auto e = ch.energies();
        const double top = *std::max_element(e.begin(), e.end());
        const double lo = from.value_or(top + 0.05 * ch.energy_scale());
        const double hi = to.value_or(top + 4.0 * ch.energy_scale());
        std::vector<double> out;
        for (std::size_t i = 0; i < points; ++i)
            out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
        return out;
    }
};

struct RunConfig {
    // model
    std::optional<std::array<double, 3>> energies;
    std::optional<double> tau;
    std::optional<double> phi;
    triangle::SiteStrengths sites{};
    Units units{};

    // bath
    std::vector<double> beta_delta_e; ///< expanded grid
    double density = 1.0;
    bool physical_prefactor = false;
    double prefactor = 1.0;

    QuadratureOptions quad{};

    std::string output_dir = ".";
    OutputFormat format = OutputFormat::csv;
    std::vector<Report> reports;

    // evolve
    std::array<double, 3> p0{1.0, 0.0, 0.0};
    double t_scaled = 50.0; ///< final time in units of 1 / max|W|
    std::size_t steps = 50;

    EnergyGrid check_grid{};

    bool wants(Report r) const { return std::find(reports.begin(), reports.end(), r) != reports.end(); }

    triangle::TriangleModel model() const {
        if (energies) return triangle::TriangleModel::from_energies(*energies, sites, units);
        return triangle::TriangleModel::from_flux(*tau, *phi, sites, units);
    }

    /// Gap eps_0 - eps_- that normalizes the inverse temperature.
    double delta_e() const {
        const auto m = model();
        return m.channels.energy(1) - m.channels.energy(0);
    }

    ThermalBath bath(double bde) const {
        const double beta = bde / delta_e();
        const double c = physical_prefactor ? ThermalBath::physical_prefactor(beta, density, units.mass) : prefactor;
        return ThermalBath{beta, density, c};
    }

    RateOptions rate_options() const {
        RateOptions o;
        o.quad = quad;
        return o;
    }
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <class T>
T scalar(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) throw ParseError(field, line_of(n), "expected a scalar value");
    try {
        return n.as<T>();
    } catch (const YAML::Exception& e) {
        throw ParseError(field, line_of(n), "wrong type: " + n.Scalar());
    }
}

inline std::vector<double> number_list(const YAML::Node& n, const std::string& field) {
    if (!n.IsSequence()) throw ParseError(field, line_of(n), "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i)
        out.push_back(scalar<double>(n[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline void check_keys(const YAML::Node& n, const std::string& where, std::initializer_list<const char*> allowed,
                       std::vector<std::string>& bad) {
    if (!n.IsMap()) return;
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            bad.push_back((where.empty() ? "" : where + ".") + key + ": unknown key (line " +
                          std::to_string(line_of(kv.first)) + ")");
    }
}

inline std::vector<double> expand_sweep(double from, double to, std::size_t points, const std::string& spacing) {
    std::vector<double> out;
    if (points == 1) return {from};
    for (std::size_t i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(points - 1);
        out.push_back(spacing == "log" ? from * std::pow(to / from, f) : from + (to - from) * f);
    }
    out.front() = from;
    out.back() = to;
    return out;
}

} // namespace detail

/// Builds a RunConfig from a parsed YAML document. Throws ParseError for
/// structural problems and ValidationError listing every value violation.
inline RunConfig config_from_yaml(const YAML::Node& root) {
    using detail::scalar;
    if (!root.IsMap()) throw ParseError("", detail::line_of(root), "top level must be a mapping");

    RunConfig c;
    std::vector<std::string> bad;
    detail::check_keys(root, "", {"model", "units", "bath", "quadrature", "output", "reports", "evolve", "check"}, bad);

    const YAML::Node model = root["model"];
    if (!model) {
        bad.push_back("model: missing section");
    } else {
        detail::check_keys(model, "model", {"energies", "tau", "phi", "sites"}, bad);
        if (model["energies"]) {
            const auto e = detail::number_list(model["energies"], "model.energies");
            if (e.size() != 3) bad.push_back("model.energies: exactly 3 levels required");
            else c.energies = std::array<double, 3>{e[0], e[1], e[2]};
        }
        if (model["tau"]) c.tau = scalar<double>(model["tau"], "model.tau");
        if (model["phi"]) c.phi = scalar<double>(model["phi"], "model.phi");
        const bool flux = c.tau || c.phi;
        if (c.energies && flux) bad.push_back("model: give either energies or tau/phi, not both");
        if (!model["energies"] && !flux) bad.push_back("model.energies: missing (or give tau and phi)");
        if (flux && !(c.tau && c.phi)) bad.push_back("model: tau and phi must be given together");
        if (!model["sites"]) {
            bad.push_back("model.sites: missing site strengths");
        } else {
            const auto s = detail::number_list(model["sites"], "model.sites");
            if (s.size() != 3) bad.push_back("model.sites: exactly 3 site strengths required");
            else c.sites = {s[0], s[1], s[2]};
            for (double x : s)
                if (!std::isfinite(x)) bad.push_back("model.sites: values must be finite");
        }
    }

    if (const YAML::Node u = root["units"]) {
        detail::check_keys(u, "units", {"mass", "hbar"}, bad);
        if (u["mass"]) c.units.mass = scalar<double>(u["mass"], "units.mass");
        if (u["hbar"]) c.units.hbar = scalar<double>(u["hbar"], "units.hbar");
        if (!(c.units.mass > 0.0) || !std::isfinite(c.units.mass)) bad.push_back("units.mass: must be positive");
        if (!(c.units.hbar > 0.0) || !std::isfinite(c.units.hbar)) bad.push_back("units.hbar: must be positive");
    }

    const YAML::Node bath = root["bath"];
    if (!bath) {
        bad.push_back("bath: missing section");
    } else {
        detail::check_keys(bath, "bath", {"beta_delta_e", "sweep", "density", "prefactor"}, bad);
        if (bath["beta_delta_e"] && bath["sweep"]) bad.push_back("bath: give either beta_delta_e or sweep, not both");
        if (bath["beta_delta_e"]) {
            const YAML::Node b = bath["beta_delta_e"];
            c.beta_delta_e = b.IsSequence() ? detail::number_list(b, "bath.beta_delta_e")
                                            : std::vector<double>{scalar<double>(b, "bath.beta_delta_e")};
        } else if (const YAML::Node s = bath["sweep"]) {
            detail::check_keys(s, "bath.sweep", {"from", "to", "points", "spacing"}, bad);
            if (!s["from"] || !s["to"] || !s["points"]) {
                bad.push_back("bath.sweep: from, to and points are required");
            } else {
                const double from = scalar<double>(s["from"], "bath.sweep.from");
                const double to = scalar<double>(s["to"], "bath.sweep.to");
                const long points = scalar<long>(s["points"], "bath.sweep.points");
                const std::string spacing = s["spacing"] ? scalar<std::string>(s["spacing"], "bath.sweep.spacing") : "log";
                if (points < 1) bad.push_back("bath.sweep.points: must be at least 1");
                if (spacing != "log" && spacing != "linear") bad.push_back("bath.sweep.spacing: must be log or linear");
                if (!(from > 0.0) || !(to > 0.0) || !std::isfinite(from) || !std::isfinite(to))
                    bad.push_back("bath.sweep: from and to must be positive and finite");
                else if (points >= 1 && (spacing == "log" || spacing == "linear"))
                    c.beta_delta_e = detail::expand_sweep(from, to, static_cast<std::size_t>(points), spacing);
            }
        } else {
            bad.push_back("bath: beta_delta_e or sweep required");
        }
        for (double b : c.beta_delta_e)
            if (!(b > 0.0) || !std::isfinite(b)) {
                bad.push_back("bath.beta_delta_e: values must be positive and finite (got " + std::to_string(b) + ")");
                break;
            }
        if (bath["density"]) c.density = scalar<double>(bath["density"], "bath.density");
        if (!(c.density > 0.0) || !std::isfinite(c.density)) bad.push_back("bath.density: must be positive");
        if (const YAML::Node p = bath["prefactor"]) {
            if (p.IsScalar() && p.Scalar() == "physical") {
                c.physical_prefactor = true;
            } else {
                c.prefactor = scalar<double>(p, "bath.prefactor");
                if (!(c.prefactor > 0.0) || !std::isfinite(c.prefactor))
                    bad.push_back("bath.prefactor: must be positive or 'physical'");
            }
        }
    }

    if (const YAML::Node q = root["quadrature"]) {
        detail::check_keys(q, "quadrature", {"rel_tol", "max_intervals"}, bad);
        if (q["rel_tol"]) c.quad.rel_tol = scalar<double>(q["rel_tol"], "quadrature.rel_tol");
        if (q["max_intervals"]) {
            const long m = scalar<long>(q["max_intervals"], "quadrature.max_intervals");
            if (m < 1) bad.push_back("quadrature.max_intervals: must be positive");
            else c.quad.max_intervals = static_cast<std::size_t>(m);
        }
        if (!(c.quad.rel_tol > 0.0) || !(c.quad.rel_tol < 1.0)) bad.push_back("quadrature.rel_tol: must be in (0, 1)");
    }

    if (const YAML::Node o = root["output"]) {
        detail::check_keys(o, "output", {"dir", "format"}, bad);
        if (o["dir"]) c.output_dir = scalar<std::string>(o["dir"], "output.dir");
        if (o["format"]) {
            const auto f = scalar<std::string>(o["format"], "output.format");
            if (f == "csv") c.format = OutputFormat::csv;
            else if (f == "json") c.format = OutputFormat::json;
            else bad.push_back("output.format: must be csv or json");
        }
    }

    if (const YAML::Node r = root["reports"]) {
        if (!r.IsSequence()) throw ParseError("reports", detail::line_of(r), "expected a list");
        for (std::size_t i = 0; i < r.size(); ++i) {
            const auto name = scalar<std::string>(r[i], "reports[" + std::to_string(i) + "]");
            if (name == "dbe") c.reports.push_back(Report::dbe);
            else if (name == "rates") c.reports.push_back(Report::rates);
            else if (name == "evolve") c.reports.push_back(Report::evolve);
            else if (name == "thermo") c.reports.push_back(Report::thermo);
            else if (name == "check") c.reports.push_back(Report::check);
            else bad.push_back("reports: unknown report '" + name + "'");
        }
    }
    if (c.reports.empty()) bad.push_back("reports: at least one of dbe, rates, evolve, thermo, check required");

    if (const YAML::Node e = root["evolve"]) {
        detail::check_keys(e, "evolve", {"p0", "t_scaled", "steps"}, bad);
        if (e["p0"]) {
            const auto p = detail::number_list(e["p0"], "evolve.p0");
            if (p.size() != 3) {
                bad.push_back("evolve.p0: exactly 3 populations required");
            } else {
                c.p0 = {p[0], p[1], p[2]};
                double sum = 0.0;
                for (double x : p) {
                    if (!(x >= 0.0)) bad.push_back("evolve.p0: populations must be nonnegative");
                    sum += x;
                }
                if (std::abs(sum - 1.0) > 1e-12) bad.push_back("evolve.p0: populations must sum to 1");
            }
        }
        if (e["t_scaled"]) c.t_scaled = scalar<double>(e["t_scaled"], "evolve.t_scaled");
        if (!(c.t_scaled >= 0.0) || !std::isfinite(c.t_scaled)) bad.push_back("evolve.t_scaled: must be nonnegative");
        if (e["steps"]) {
            const long s = scalar<long>(e["steps"], "evolve.steps");
            if (s < 1) bad.push_back("evolve.steps: must be positive");
            else c.steps = static_cast<std::size_t>(s);
        }
    }

    if (const YAML::Node k = root["check"]) {
        detail::check_keys(k, "check", {"energy_from", "energy_to", "energy_points"}, bad);
        if (k["energy_from"]) c.check_grid.from = scalar<double>(k["energy_from"], "check.energy_from");
        if (k["energy_to"]) c.check_grid.to = scalar<double>(k["energy_to"], "check.energy_to");
        if (k["energy_points"]) {
            const long n = scalar<long>(k["energy_points"], "check.energy_points");
            if (n < 2) bad.push_back("check.energy_points: must be at least 2");
            else c.check_grid.points = static_cast<std::size_t>(n);
        }
        if (c.check_grid.from && c.check_grid.to && !(*c.check_grid.to > *c.check_grid.from))
            bad.push_back("check: energy_to must exceed energy_from");
    }

    // Model-level checks once the fields themselves are sound.
    if (bad.empty()) {
        try {
            const auto m = c.model();
            if (!(c.delta_e() > 0.0)) bad.push_back("model: eps_0 - eps_- must be positive to normalize beta");
            const auto grid = c.check_grid.values(m.channels);
            const double top = *std::max_element(m.channels.energies().begin(), m.channels.energies().end());
            if (grid.front() <= top + m.channels.threshold_guard() || grid.back() <= grid.front())
                bad.push_back("check: energy grid must lie above every threshold");
        } catch (const Error& e) {
            bad.push_back(std::string("model: ") + e.what());
        }
    }

    if (!bad.empty()) throw ValidationError(std::move(bad));
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError("", e.mark.line + 1, e.msg);
    }
    return config_from_yaml(root);
}

inline RunConfig load_config(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ParseError("", 0, "cannot open " + path);
    } catch (const YAML::ParserException& e) {
        throw ParseError("", e.mark.line + 1, e.msg);
    }
    return config_from_yaml(root);
}

} // namespace dbv::run
