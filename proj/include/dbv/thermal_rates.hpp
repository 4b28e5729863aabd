#pragma once

// Thermal transition-rate integrals over scattering energies.
//
//   A(j', j) = 2m int dE e^{-beta (E - eps_j)} |<j'|T(E)|j>|^2 / sqrt((E - eps_j)(E - eps_j'))
//   B(j', j) = same weight with the reversed element |<j|T(E)|j'>|^2
//
// integrated from max(eps_j, eps_j'). I(j', j) = A / B measures the violation
// of detailed balance for the pair; a_{kl} = c A(k, l).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "quadrature.hpp"
#include "scattering.hpp"

namespace dbv {

struct ThermalBath {
    double beta = 1.0;
    double density = 1.0;
    double rate_prefactor = 1.0;

    void validate() const {
        if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be positive and finite");
        if (!(density > 0.0) || !std::isfinite(density)) throw InvalidArgument("density must be positive");
        if (!(rate_prefactor > 0.0) || !std::isfinite(rate_prefactor))
            throw InvalidArgument("rate prefactor must be positive");
    }

    /// nu pi 2m / Z with Z = sqrt(2 pi m / beta), the 1D Maxwell normalization.
    /// Sets absolute rate units only; I and rate ratios do not depend on it.
    static double physical_prefactor(double beta, double density, double mass) {
        return density * std::numbers::pi * 2.0 * mass / std::sqrt(2.0 * std::numbers::pi * mass / beta);
    }
};

struct RateOptions {
    QuadratureOptions quad{};
    double tail_epsilon = 1e-16; ///< Boltzmann weight below which the energy tail is cut
};

struct ThermalIntegral {
    double value = 0.0;
    double error = 0.0;            ///< quadrature estimate plus truncation estimate
    double truncation_error = 0.0; ///< tail beyond the energy cut
    double upper_energy = 0.0;
    std::size_t evaluations = 0;
    std::size_t intervals = 0;
    std::size_t shifted_nodes = 0; ///< nodes moved off a threshold guard

    double relative_error() const { return value > 0.0 ? error / value : 0.0; }
};

enum class Ordering {
    forward,  ///< |<j_out| T |j_in>|^2, the A integral
    reversed, ///< |<j_in| T |j_out>|^2, the B integral
};

namespace detail {

struct Piece {
    double anchor;          // channel threshold at u = 0
    double sign;            // E = anchor + sign * u^2
    std::size_t anchor_idx; // channel whose threshold is the anchor, or npos
};

} // namespace detail

/// Thermal integral for one ordered pair. The support is split at every
/// channel threshold; each piece is mapped so that its square-root branch
/// point sits at u = 0 of E = anchor +/- u^2.
inline ThermalIntegral thermal_integral(std::size_t j_out, std::size_t j_in, Ordering ordering,
                                        const ThermalBath& bath, const ChannelSet& channels,
                                        const CouplingMatrix& v, const RateOptions& opts = {}) {
    bath.validate();
    if (j_out == j_in) throw InvalidArgument("thermal integrals are defined for j_out != j_in only");
    if (j_out >= channels.size() || j_in >= channels.size())
        throw InvalidArgument("channel index out of range");
    if (v.size() != channels.size()) throw InvalidArgument("coupling size does not match channel count");

    constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    const std::size_t n = channels.size();
    const double beta = bath.beta;
    const double two_m = 2.0 * channels.units().mass;
    const double eps_in = channels.energy(j_in);
    const double eps_out = channels.energy(j_out);
    const double e_low = std::max(eps_in, eps_out);
    const double e_max = e_low + std::log(1.0 / opts.tail_epsilon) / beta;
    const std::size_t row = ordering == Ordering::forward ? j_out : j_in;
    const std::size_t col = ordering == Ordering::forward ? j_in : j_out;

    std::vector<double> breaks{e_low};
    std::vector<std::size_t> break_idx{eps_in >= eps_out ? j_in : j_out};
    {
        std::vector<std::pair<double, std::size_t>> inner;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = channels.energy(j);
            if (e > e_low && e < e_max) inner.emplace_back(e, j);
        }
        std::sort(inner.begin(), inner.end());
        for (const auto& [e, j] : inner) {
            breaks.push_back(e);
            break_idx.push_back(j);
        }
    }
    breaks.push_back(e_max);
    break_idx.push_back(npos);

    std::vector<detail::Piece> pieces;
    std::vector<Segment> segments;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double x0 = breaks[i];
        const double x1 = breaks[i + 1];
        if (i + 2 == breaks.size()) {
            segments.push_back({pieces.size(), 0.0, std::sqrt(x1 - x0)});
            pieces.push_back({x0, 1.0, break_idx[i]});
        } else {
            const double half = 0.5 * (x1 - x0);
            segments.push_back({pieces.size(), 0.0, std::sqrt(half)});
            pieces.push_back({x0, 1.0, break_idx[i]});
            segments.push_back({pieces.size(), 0.0, std::sqrt(half)});
            pieces.push_back({x1, -1.0, break_idx[i + 1]});
        }
    }

    std::vector<double> offsets(n);
    // Integrand in E at the given threshold offsets.
    auto weight = [&](double energy) {
        const OnShellTMatrix t = t_matrix_from_offsets(energy, offsets, v, channels);
        const double d_in = offsets[j_in];
        const double d_out = offsets[j_out];
        return two_m * std::exp(-beta * d_in) * std::norm(t(row, col)) / std::sqrt(d_in * d_out);
    };

    const double guard = channels.threshold_guard();
    std::size_t shifted = 0;
    auto integrand = [&](std::size_t piece_idx, double u) {
        const detail::Piece& p = pieces[piece_idx];
        if (p.anchor_idx != npos && u * u <= guard) {
            u = std::sqrt(2.0 * guard);
            ++shifted;
        }
        const double du2 = p.sign * u * u;
        for (std::size_t j = 0; j < n; ++j)
            offsets[j] = j == p.anchor_idx ? du2 : (p.anchor - channels.energy(j)) + du2;
        return 2.0 * u * weight(p.anchor + du2);
    };

    const QuadratureResult q = integrate_segments(integrand, segments, opts.quad);

    for (std::size_t j = 0; j < n; ++j) offsets[j] = e_max - channels.energy(j);
    const double tail = weight(e_max) / beta;

    ThermalIntegral out;
    out.value = q.value;
    out.truncation_error = tail;
    out.error = q.error + tail;
    out.upper_energy = e_max;
    out.evaluations = q.evaluations + 1;
    out.intervals = q.intervals;
    out.shifted_nodes = shifted;
    if (!q.converged)
        throw QuadratureFailure("thermal integral (" + channels.label(j_out) + "," + channels.label(j_in) +
                                    ") did not reach tolerance",
                                q.value, q.error);
    return out;
}

inline ThermalIntegral thermal_integral_A(std::size_t j_out, std::size_t j_in, const ThermalBath& bath,
                                          const ChannelSet& channels, const CouplingMatrix& v,
                                          const RateOptions& opts = {}) {
    return thermal_integral(j_out, j_in, Ordering::forward, bath, channels, v, opts);
}

inline ThermalIntegral thermal_integral_B(std::size_t j_out, std::size_t j_in, const ThermalBath& bath,
                                          const ChannelSet& channels, const CouplingMatrix& v,
                                          const RateOptions& opts = {}) {
    return thermal_integral(j_out, j_in, Ordering::reversed, bath, channels, v, opts);
}

inline constexpr double ratio_underflow_floor = 1e-300;

/// I(j_out, j_in) = A / B. Throws UndefinedRatio if either integral underflows.
inline double i_ratio(std::size_t j_out, std::size_t j_in, const ThermalBath& bath,
                      const ChannelSet& channels, const CouplingMatrix& v, const RateOptions& opts = {}) {
    const double a = thermal_integral_A(j_out, j_in, bath, channels, v, opts).value;
    const double b = thermal_integral_B(j_out, j_in, bath, channels, v, opts).value;
    if (!(a > ratio_underflow_floor) || !(b > ratio_underflow_floor))
        throw UndefinedRatio("I(" + channels.label(j_out) + "," + channels.label(j_in) +
                             ") undefined: thermal integral underflow");
    return a / b;
}

struct EntryFailure {
    std::size_t row;
    std::size_t col;
    std::string message;
};

/// Rates and detailed-balance ratios at one inverse temperature.
/// Off-diagonal entries only; diagonals are stored as 0.
struct RateTable {
    double beta = 0.0;
    ChannelSet channels;
    Eigen::MatrixXd A, B, rates, I;
    Eigen::MatrixXd A_error, B_error;               ///< absolute error estimates
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> computed; ///< A and B available
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> ratio;    ///< I available
    std::vector<EntryFailure> failures;
    std::size_t evaluations = 0;

    explicit RateTable(ChannelSet ch, double beta_)
        : beta(beta_), channels(std::move(ch)) {
        const auto n = static_cast<Eigen::Index>(channels.size());
        A = B = rates = I = A_error = B_error = Eigen::MatrixXd::Zero(n, n);
        computed.setConstant(n, n, false);
        ratio.setConstant(n, n, false);
    }

    std::size_t size() const { return channels.size(); }

    double rate(std::size_t k, std::size_t l) const {
        return rates(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
    }
    double ratio_at(std::size_t k, std::size_t l) const {
        return I(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
    }
    bool has_ratio(std::size_t k, std::size_t l) const {
        return ratio(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
    }

    bool complete() const {
        for (Eigen::Index k = 0; k < computed.rows(); ++k)
            for (Eigen::Index l = 0; l < computed.cols(); ++l)
                if (k != l && !computed(k, l)) return false;
        return true;
    }

    /// Absolute error estimate of I(k, l) from the relative errors of A and B.
    double ratio_error(std::size_t k, std::size_t l) const {
        const auto r = static_cast<Eigen::Index>(k), c = static_cast<Eigen::Index>(l);
        if (!ratio(r, c)) return std::numeric_limits<double>::infinity();
        return I(r, c) * (A_error(r, c) / A(r, c) + B_error(r, c) / B(r, c));
    }

    /// Largest relative error estimate over all computed A and B entries.
    double max_relative_error() const {
        double worst = 0.0;
        for (Eigen::Index k = 0; k < A.rows(); ++k)
            for (Eigen::Index l = 0; l < A.cols(); ++l) {
                if (k == l || !computed(k, l)) continue;
                if (A(k, l) > 0.0) worst = std::max(worst, A_error(k, l) / A(k, l));
                if (B(k, l) > 0.0) worst = std::max(worst, B_error(k, l) / B(k, l));
            }
        return worst;
    }

    /// Builds a table directly from rates a_{kl} (c = 1): A = a,
    /// B(k,l) = e^{-beta(eps_k - eps_l)} A(l,k), I = A / B.
    static RateTable from_rates(const Eigen::MatrixXd& a, double beta, ChannelSet channels) {
        RateTable t(std::move(channels), beta);
        const auto n = static_cast<Eigen::Index>(t.size());
        if (a.rows() != n || a.cols() != n) throw InvalidArgument("rate matrix size mismatch");
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index l = 0; l < n; ++l) {
                if (k == l) continue;
                if (!(a(k, l) >= 0.0)) throw InvalidArgument("rates must be nonnegative");
                t.A(k, l) = t.rates(k, l) = a(k, l);
                t.computed(k, l) = true;
            }
        t.fill_reversed_from_A();
        t.fill_ratios();
        return t;
    }

    void fill_reversed_from_A() {
        const auto n = static_cast<Eigen::Index>(size());
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index l = 0; l < n; ++l)
                if (k != l)
                    B(k, l) = std::exp(-beta * (channels.energy(static_cast<std::size_t>(k)) -
                                                channels.energy(static_cast<std::size_t>(l)))) *
                              A(l, k);
    }

    void fill_ratios() {
        const auto n = static_cast<Eigen::Index>(size());
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index l = 0; l < n; ++l) {
                ratio(k, l) = false;
                I(k, l) = 0.0;
                if (k == l || !computed(k, l)) continue;
                if (A(k, l) > ratio_underflow_floor && B(k, l) > ratio_underflow_floor) {
                    I(k, l) = A(k, l) / B(k, l);
                    ratio(k, l) = true;
                }
            }
    }
};

/// Computes A, B, rates and I for every ordered pair. Per-entry failures are
/// recorded in the table instead of aborting the whole computation.
inline RateTable rate_matrix(const ThermalBath& bath, const ChannelSet& channels, const CouplingMatrix& v,
                             const RateOptions& opts = {}) {
    bath.validate();
    RateTable t(channels, bath.beta);
    const std::size_t n = channels.size();
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
            if (k == l) continue;
            const auto r = static_cast<Eigen::Index>(k), c = static_cast<Eigen::Index>(l);
            try {
                const ThermalIntegral a = thermal_integral_A(k, l, bath, channels, v, opts);
                const ThermalIntegral b = thermal_integral_B(k, l, bath, channels, v, opts);
                t.A(r, c) = a.value;
                t.A_error(r, c) = a.error;
                t.B(r, c) = b.value;
                t.B_error(r, c) = b.error;
                t.rates(r, c) = bath.rate_prefactor * a.value;
                t.computed(r, c) = true;
                t.evaluations += a.evaluations + b.evaluations;
            } catch (const Error& e) {
                t.failures.push_back({k, l, e.what()});
            }
        }
    t.fill_ratios();
    return t;
}

/// Boltzmann weights e^{-beta (eps_k - eps_min)}, free of overflow.
inline Eigen::VectorXd boltzmann_weights(double beta, const ChannelSet& channels) {
    const auto e = channels.energies();
    const double lo = *std::min_element(e.begin(), e.end());
    Eigen::VectorXd w(static_cast<Eigen::Index>(e.size()));
    for (std::size_t k = 0; k < e.size(); ++k) w(static_cast<Eigen::Index>(k)) = std::exp(-beta * (e[k] - lo));
    return w;
}

struct DbeResidualReport {
    Eigen::MatrixXd residual; ///< r(k,l); 0 where not checked
    double max_residual = 0.0;
    std::size_t checked = 0;
    bool empty = true; ///< no pair had a defined ratio (e.g. all rates zero)
};

/// Residual of a_{kl} e^{-beta eps_l} = a_{lk} e^{-beta eps_k} I(k,l), relative to
/// the larger side, for every pair with a defined ratio.
inline DbeResidualReport dbe_identity_check(const RateTable& table) {
    const auto n = static_cast<Eigen::Index>(table.size());
    const Eigen::VectorXd w = boltzmann_weights(table.beta, table.channels);
    DbeResidualReport rep;
    rep.residual = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) {
            if (k == l || !table.ratio(k, l)) continue;
            const double lhs = table.rates(k, l) * w(l);
            const double rhs = table.rates(l, k) * w(k) * table.I(k, l);
            const double scale = std::max(std::abs(lhs), std::abs(rhs));
            const double r = scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
            rep.residual(k, l) = r;
            rep.max_residual = std::max(rep.max_residual, r);
            ++rep.checked;
        }
    rep.empty = rep.checked == 0;
    return rep;
}

struct IdentityResiduals {
    double reciprocal = 0.0; ///< max |I(k,l) I(l,k) - 1|
    double relabeling = 0.0; ///< max |B(k,l) e^{beta(eps_k - eps_l)} / A(l,k) - 1|
};

inline IdentityResiduals identity_residuals(const RateTable& table) {
    IdentityResiduals out;
    const auto n = static_cast<Eigen::Index>(table.size());
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) {
            if (k == l) continue;
            if (table.ratio(k, l) && table.ratio(l, k))
                out.reciprocal = std::max(out.reciprocal, std::abs(table.I(k, l) * table.I(l, k) - 1.0));
            if (table.computed(k, l) && table.computed(l, k) && table.A(l, k) > ratio_underflow_floor) {
                const double de = table.channels.energy(static_cast<std::size_t>(k)) -
                                  table.channels.energy(static_cast<std::size_t>(l));
                out.relabeling = std::max(
                    out.relabeling, std::abs(table.B(k, l) * std::exp(table.beta * de) / table.A(l, k) - 1.0));
            }
        }
    return out;
}

} // namespace dbv
