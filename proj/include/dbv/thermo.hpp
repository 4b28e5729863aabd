#pragma once

// Entropy production, probability and heat currents between levels, and the
// three-level thermalization conditions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "pauli.hpp"
#include "thermal_rates.hpp"

namespace dbv {

/// N x N matrix with M(j,k) = -M(k,j) by construction; stores the strict upper triangle.
class AntisymmetricMatrix {
public:
    explicit AntisymmetricMatrix(std::size_t n = 0) : n_(n), upper_(n * (n > 0 ? n - 1 : 0) / 2, 0.0) {}

    std::size_t size() const noexcept { return n_; }

    double operator()(std::size_t j, std::size_t k) const {
        if (j == k) return 0.0;
        return j < k ? upper_[index(j, k)] : -upper_[index(k, j)];
    }

    void set(std::size_t j, std::size_t k, double value) {
        if (j == k) throw InvalidArgument("antisymmetric matrix has a fixed zero diagonal");
        if (j < k) upper_[index(j, k)] = value;
        else upper_[index(k, j)] = -value;
    }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t k = 0; k < n_; ++k) m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = (*this)(j, k);
        return m;
    }

private:
    std::size_t index(std::size_t j, std::size_t k) const {
        if (k >= n_) throw InvalidArgument("index out of range");
        return j * n_ - j * (j + 1) / 2 + (k - j - 1);
    }

    std::size_t n_;
    std::vector<double> upper_;
};

/// Per-pair quantity with M(j,k) = M(k,j); zero diagonal.
class SymmetricPairMatrix {
public:
    explicit SymmetricPairMatrix(std::size_t n = 0) : n_(n), upper_(n * (n > 0 ? n - 1 : 0) / 2, 0.0) {}

    std::size_t size() const noexcept { return n_; }

    double operator()(std::size_t j, std::size_t k) const {
        if (j == k) return 0.0;
        return upper_[index(std::min(j, k), std::max(j, k))];
    }

    void set(std::size_t j, std::size_t k, double value) {
        if (j == k) throw InvalidArgument("pair matrix has a fixed zero diagonal");
        upper_[index(std::min(j, k), std::max(j, k))] = value;
    }

private:
    std::size_t index(std::size_t j, std::size_t k) const {
        if (k >= n_) throw InvalidArgument("index out of range");
        return j * n_ - j * (j + 1) / 2 + (k - j - 1);
    }

    std::size_t n_;
    std::vector<double> upper_;
};

struct CurrentSet {
    AntisymmetricMatrix K; ///< K(j,k) = a_jk p_k - a_kj p_j, flow from k to j
    SymmetricPairMatrix J; ///< heat exchanged on the transition pair (m, l)
};

struct EntropyReport {
    double sigma = 0.0;        ///< schnakenberg + deviation
    double schnakenberg = 0.0; ///< sum_{k>j} K_jk ln(p_k a_jk / (p_j a_kj))
    double deviation = 0.0;    ///< sum_{k>j} K_jk ln I(k,j)
};

namespace detail {

inline void require_population(const Eigen::VectorXd& p, std::size_t n) {
    if (static_cast<std::size_t>(p.size()) != n) throw InvalidArgument("population size mismatch");
    if (!p.allFinite() || p.minCoeff() < 0.0) throw InvalidArgument("populations must be finite and nonnegative");
}

} // namespace detail

/// sigma = sum_k (W p)_k (ln p_eq,k - ln p_k). A vanishing p_k contributes
/// nothing when its flow vanishes too and raises DomainError otherwise.
inline double entropy_production(const PopulationState& p, const PauliGenerator& gen, const PopulationState& p_eq) {
    const std::size_t n = gen.size();
    detail::require_population(p.p, n);
    detail::require_population(p_eq.p, n);
    const Eigen::VectorXd flow = gen.matrix() * p.p;
    const double flow_floor = 1e-15 * std::max(gen.max_abs(), std::numeric_limits<double>::min());
    double sigma = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        if (flow(i) == 0.0) continue;
        if (p.p(i) == 0.0 || p_eq.p(i) == 0.0) {
            if (std::abs(flow(i)) <= flow_floor) continue;
            throw DomainError("log of a vanishing population with nonzero flow at level " + std::to_string(k));
        }
        sigma += flow(i) * (std::log(p_eq.p(i)) - std::log(p.p(i)));
    }
    return sigma;
}

inline AntisymmetricMatrix probability_currents(const PopulationState& p, const RateTable& table) {
    const std::size_t n = table.size();
    detail::require_population(p.p, n);
    AntisymmetricMatrix k_mat(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k)
            k_mat.set(j, k, table.rate(j, k) * p.p(static_cast<Eigen::Index>(k)) -
                                table.rate(k, j) * p.p(static_cast<Eigen::Index>(j)));
    return k_mat;
}

/// Entropy production split into the Schnakenberg term and the DBE-violation
/// term, summed over pairs j < k.
inline EntropyReport entropy_decomposition(const PopulationState& p, const RateTable& table) {
    const std::size_t n = table.size();
    const AntisymmetricMatrix K = probability_currents(p, table);
    EntropyReport r;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
            const double kjk = K(j, k);
            if (kjk == 0.0) continue;
            const double pj = p.p(static_cast<Eigen::Index>(j));
            const double pk = p.p(static_cast<Eigen::Index>(k));
            const double ajk = table.rate(j, k);
            const double akj = table.rate(k, j);
            if (pj == 0.0 || pk == 0.0 || ajk == 0.0 || akj == 0.0)
                throw DomainError("entropy term diverges on pair (" + table.channels.label(j) + "," +
                                  table.channels.label(k) + ")");
            if (!table.has_ratio(k, j))
                throw UndefinedRatio("I(" + table.channels.label(k) + "," + table.channels.label(j) +
                                     ") missing from the rate table");
            r.schnakenberg += kjk * (std::log(pk / pj) + std::log(ajk / akj));
            r.deviation += kjk * std::log(table.ratio_at(k, j));
        }
    r.sigma = r.schnakenberg + r.deviation;
    return r;
}

/// K_jk at equilibrium from the violation ratios: a_kj p_eq,j [I(j,k) - 1].
inline AntisymmetricMatrix equilibrium_currents_closed_form(const RateTable& table) {
    const std::size_t n = table.size();
    const Eigen::VectorXd peq = gibbs_state(table.beta, table.channels).p;
    AntisymmetricMatrix k_mat(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
            const double akj = table.rate(k, j);
            if (akj == 0.0) continue;
            k_mat.set(j, k, akj * peq(static_cast<Eigen::Index>(j)) * (table.ratio_at(j, k) - 1.0));
        }
    return k_mat;
}

/// J_ml = -beta^{-1} a_lm p_eq,m [I(m,l) - 1] ln(p_eq,m / p_eq,l)
///      = a_lm p_eq,m [I(m,l) - 1] (eps_m - eps_l), symmetric in (m, l).
inline SymmetricPairMatrix heat_currents(const RateTable& table) {
    const std::size_t n = table.size();
    const Eigen::VectorXd peq = gibbs_state(table.beta, table.channels).p;
    SymmetricPairMatrix j_mat(n);
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t l = m + 1; l < n; ++l) {
            const double alm = table.rate(l, m);
            if (alm == 0.0) continue;
            const double de = table.channels.energy(m) - table.channels.energy(l);
            j_mat.set(m, l, alm * peq(static_cast<Eigen::Index>(m)) * (table.ratio_at(m, l) - 1.0) * de);
        }
    return j_mat;
}

inline CurrentSet equilibrium_currents(const RateTable& table) {
    return {probability_currents(gibbs_state(table.beta, table.channels), table), heat_currents(table)};
}

/// Three-level closed form on the cyclic pairs (+,0), (0,-), (-,+):
/// J_ij = N [1 - I(+,-)] (eps_i - eps_j) with N = a_{-+} p_eq,+.
/// Channels are indexed (-, 0, +) = (0, 1, 2).
inline SymmetricPairMatrix heat_currents_closed_form_3qd(const RateTable& table) {
    if (table.size() != 3) throw InvalidArgument("closed form needs exactly 3 levels");
    constexpr std::size_t minus = 0, zero = 1, plus = 2;
    const Eigen::VectorXd peq = gibbs_state(table.beta, table.channels).p;
    SymmetricPairMatrix j_mat(3);
    const double a = table.rate(minus, plus);
    if (a == 0.0) return j_mat;
    const double loop = a * peq(plus) * (1.0 - table.ratio_at(plus, minus));
    const auto& ch = table.channels;
    j_mat.set(plus, zero, loop * (ch.energy(plus) - ch.energy(zero)));
    j_mat.set(zero, minus, loop * (ch.energy(zero) - ch.energy(minus)));
    j_mat.set(minus, plus, loop * (ch.energy(minus) - ch.energy(plus)));
    return j_mat;
}

inline constexpr double residual_floor = 1e-30;

inline double relative_residual(double lhs, double rhs) {
    return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), residual_floor});
}

struct ThermalizationResiduals {
    double lhs_a = 0.0, rhs_a = 0.0, res_a = 0.0; ///< a_{+0}[1 - I(0,+)] = a_{-0}[I(0,-) - 1]
    double lhs_b = 0.0, rhs_b = 0.0, res_b = 0.0; ///< a_{0+}[1 - 1/I(0,+)] = a_{-+}[I(+,-) - 1]
};

/// Conditions for the Gibbs state to be stationary in a three-level system,
/// channels indexed (-, 0, +) = (0, 1, 2).
inline ThermalizationResiduals thermalization_residuals(const RateTable& table) {
    if (table.size() != 3) throw InvalidArgument("thermalization conditions need exactly 3 levels");
    constexpr std::size_t minus = 0, zero = 1, plus = 2;
    // a * (I - 1) with the all-zero case defined as 0 when the ratio is missing.
    auto term = [&](std::size_t k, std::size_t l, std::size_t ik, std::size_t il, bool inverse) {
        const double a = table.rate(k, l);
        if (a == 0.0) return 0.0;
        if (!table.has_ratio(ik, il)) return std::numeric_limits<double>::quiet_NaN();
        const double i = table.ratio_at(ik, il);
        return a * ((inverse ? 1.0 / i : i) - 1.0);
    };
    ThermalizationResiduals r;
    r.lhs_a = -term(plus, zero, zero, plus, false);
    r.rhs_a = term(minus, zero, zero, minus, false);
    r.lhs_b = -term(zero, plus, zero, plus, true);
    r.rhs_b = term(minus, plus, plus, minus, false);
    r.res_a = relative_residual(r.lhs_a, r.rhs_a);
    r.res_b = relative_residual(r.lhs_b, r.rhs_b);
    return r;
}

} // namespace dbv
