#pragma once

// Pauli master equation dp/dt = W p for the level populations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "errors.hpp"
#include "scattering.hpp"
#include "thermal_rates.hpp"

namespace dbv {

/// W(k,l) = a_{kl} for k != l, W(k,k) = -sum_{l != k} a_{lk}. Columns sum to zero.
class PauliGenerator {
public:
    explicit PauliGenerator(const Eigen::MatrixXd& rates) {
        if (rates.rows() != rates.cols() || rates.rows() < 1)
            throw InvalidArgument("rate matrix must be square");
        const auto n = rates.rows();
        w_ = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index l = 0; l < n; ++l) {
                if (k == l) continue;
                if (!(rates(k, l) >= 0.0) || !std::isfinite(rates(k, l)))
                    throw InvalidArgument("rates must be finite and nonnegative");
                w_(k, l) = rates(k, l);
            }
        for (Eigen::Index l = 0; l < n; ++l) {
            double out = 0.0;
            for (Eigen::Index k = 0; k < n; ++k)
                if (k != l) out += w_(k, l);
            w_(l, l) = -out;
        }
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(w_.rows()); }
    const Eigen::MatrixXd& matrix() const noexcept { return w_; }
    double operator()(std::size_t k, std::size_t l) const {
        return w_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
    }
    double max_abs() const { return w_.cwiseAbs().maxCoeff(); }
    double max_column_sum() const { return w_.colwise().sum().cwiseAbs().maxCoeff(); }

private:
    Eigen::MatrixXd w_;
};

inline PauliGenerator build_generator(const RateTable& table) {
    if (!table.complete()) {
        std::string msg = "rate table incomplete";
        for (const auto& f : table.failures)
            msg += "; (" + table.channels.label(f.row) + "," + table.channels.label(f.col) + "): " + f.message;
        throw IncompleteTable(msg);
    }
    return PauliGenerator(table.rates);
}

struct PopulationState {
    Eigen::VectorXd p;
    double time = 0.0;

    double total() const { return p.sum(); }

    void validate(double tol = 1e-12) const {
        if (p.size() == 0) throw InvalidArgument("empty population vector");
        if (!p.allFinite()) throw InvalidArgument("populations must be finite");
        if (p.minCoeff() < 0.0) throw InvalidArgument("populations must be nonnegative");
        if (std::abs(p.sum() - 1.0) > tol) throw InvalidArgument("populations must sum to 1");
    }
};

/// Gibbs populations e^{-beta eps_k} / Z, shifted by the lowest level.
inline PopulationState gibbs_state(double beta, const ChannelSet& channels) {
    if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
    Eigen::VectorXd w = boltzmann_weights(beta, channels);
    return {w / w.sum(), 0.0};
}

inline double trace_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) throw InvalidArgument("population size mismatch");
    return 0.5 * (p - q).cwiseAbs().sum();
}

/// Closed communicating classes of the jump graph (l -> k when W(k,l) > 0).
inline std::vector<std::vector<std::size_t>> closed_classes(const PauliGenerator& gen) {
    const std::size_t n = gen.size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        reach[i][i] = true;
        for (std::size_t k = 0; k < n; ++k)
            if (k != i && gen(k, i) > 0.0) reach[i][k] = true;
    }
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][m])
                for (std::size_t k = 0; k < n; ++k)
                    if (reach[m][k]) reach[i][k] = true;

    std::vector<std::vector<std::size_t>> out;
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i]) continue;
        std::vector<std::size_t> cls;
        for (std::size_t k = 0; k < n; ++k)
            if (reach[i][k] && reach[k][i]) cls.push_back(k);
        for (std::size_t k : cls) seen[k] = true;
        bool closed = true;
        for (std::size_t k = 0; k < n && closed; ++k)
            if (reach[i][k] && !reach[k][i]) closed = false;
        if (closed) out.push_back(std::move(cls));
    }
    return out;
}

/// Null vector of W from the smallest singular vector, normalized to sum 1.
/// Throws NonErgodic if more than one closed class exists.
inline PopulationState stationary_state(const PauliGenerator& gen) {
    const auto classes = closed_classes(gen);
    if (classes.size() != 1) {
        std::string msg = "generator has " + std::to_string(classes.size()) + " closed classes:";
        for (const auto& c : classes) {
            msg += " {";
            for (std::size_t i = 0; i < c.size(); ++i) msg += (i ? "," : "") + std::to_string(c[i]);
            msg += "}";
        }
        throw NonErgodic(msg, classes);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(gen.matrix(), Eigen::ComputeFullV);
    Eigen::VectorXd p = svd.matrixV().col(gen.matrix().cols() - 1);
    if (p.sum() < 0.0) p = -p;
    p = p.cwiseMax(0.0);
    p /= p.sum();
    return {p, 0.0};
}

struct Trajectory {
    std::vector<PopulationState> states;
    std::size_t clamped = 0;        ///< entries in [-1e-14, 0) set to zero
    double most_negative = 0.0;     ///< smallest raw entry seen
};

inline constexpr double positivity_slack = 1e-14;

/// p(t_i) = exp(W t_i) p0 at t_i = t i / steps, i = 0..steps.
inline Trajectory evolve(const PopulationState& p0, const PauliGenerator& gen, double t, std::size_t steps) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be nonnegative");
    if (steps == 0) throw InvalidArgument("at least one step required");
    if (static_cast<std::size_t>(p0.p.size()) != gen.size())
        throw InvalidArgument("population size does not match generator");
    p0.validate();

    Trajectory tr;
    tr.states.reserve(steps + 1);
    tr.states.push_back({p0.p, p0.time});
    for (std::size_t i = 1; i <= steps; ++i) {
        const double ti = t * static_cast<double>(i) / static_cast<double>(steps);
        const Eigen::MatrixXd prop = (gen.matrix() * ti).exp();
        Eigen::VectorXd p = prop * p0.p;
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            tr.most_negative = std::min(tr.most_negative, p(k));
            if (p(k) < 0.0 && p(k) >= -positivity_slack) {
                p(k) = 0.0;
                ++tr.clamped;
            }
        }
        tr.states.push_back({p, p0.time + ti});
    }
    return tr;
}

} // namespace dbv
