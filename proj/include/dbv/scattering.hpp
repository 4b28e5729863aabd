#pragma once

// Multichannel 1D point-contact scattering.
//
// A gas particle of mass m scatters off an N-level system through a contact
// interaction whose channel couplings are v_{j'j}. At total energy E the
// amplitudes at the contact solve
//
//     (I + i diag(b) v) psi = e_{j_in} / sqrt(2 pi hbar),
//     b_j = sqrt(2m / (E - eps_j + i0)) / (2 hbar),
//
// and the on-shell T-matrix follows from psi. Channel j is open when
// E > eps_j (b_j real positive) and closed otherwise (b_j = -i|b_j|).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace dbv {

using cplx = std::complex<double>;

struct Units {
    double mass = 1.0;
    double hbar = 1.0;
};

/// Nondegenerate system levels, each a scattering threshold for the gas particle.
class ChannelSet {
public:
    explicit ChannelSet(std::vector<double> energies, std::vector<std::string> labels = {},
                        Units units = {})
        : energies_(std::move(energies)), labels_(std::move(labels)), units_(units) {
        if (energies_.size() < 2) throw InvalidArgument("ChannelSet needs at least 2 channels");
        if (!(units_.mass > 0.0) || !(units_.hbar > 0.0) || !std::isfinite(units_.mass) ||
            !std::isfinite(units_.hbar))
            throw InvalidArgument("mass and hbar must be positive and finite");
        for (double e : energies_)
            if (!std::isfinite(e)) throw InvalidArgument("channel energies must be finite");
        if (labels_.empty()) {
            for (std::size_t j = 0; j < energies_.size(); ++j) labels_.push_back(std::to_string(j));
        } else if (labels_.size() != energies_.size()) {
            throw InvalidArgument("one label per channel required");
        }
        const auto [lo, hi] = std::minmax_element(energies_.begin(), energies_.end());
        scale_ = *hi - *lo;
        for (std::size_t i = 0; i < energies_.size(); ++i)
            for (std::size_t k = i + 1; k < energies_.size(); ++k)
                if (std::abs(energies_[i] - energies_[k]) <= threshold_guard())
                    throw InvalidArgument("channel energies must be pairwise distinct");
    }

    std::size_t size() const noexcept { return energies_.size(); }
    double energy(std::size_t j) const { return energies_.at(j); }
    std::span<const double> energies() const noexcept { return energies_; }
    const std::string& label(std::size_t j) const { return labels_.at(j); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const Units& units() const noexcept { return units_; }

    std::size_t index_of(std::string_view label) const {
        for (std::size_t j = 0; j < labels_.size(); ++j)
            if (labels_[j] == label) return j;
        throw InvalidArgument("unknown channel label '" + std::string(label) + "'");
    }

    bool is_open(std::size_t j, double energy) const { return energy > energies_.at(j); }

    /// Spread of the spectrum; sets the scale of the threshold guard.
    double energy_scale() const noexcept { return scale_; }
    double threshold_guard() const noexcept { return 1e-9 * scale_; }

private:
    std::vector<double> energies_;
    std::vector<std::string> labels_;
    Units units_;
    double scale_ = 0.0;
};

/// Hermitian channel-coupling matrix v_{j'j}.
class CouplingMatrix {
public:
    explicit CouplingMatrix(Eigen::MatrixXcd v) : v_(std::move(v)) {
        if (v_.rows() != v_.cols() || v_.rows() == 0)
            throw InvalidArgument("coupling matrix must be square and nonempty");
        const double scale = v_.cwiseAbs().maxCoeff();
        const double defect = (v_ - v_.adjoint()).cwiseAbs().maxCoeff();
        if (!(defect <= 1e-12 * scale) && defect != 0.0)
            throw InvalidArgument("coupling matrix is not Hermitian");
        if (!v_.allFinite()) throw InvalidArgument("coupling matrix has non-finite entries");
    }

    static CouplingMatrix zero(std::size_t n) { return CouplingMatrix(Eigen::MatrixXcd::Zero(n, n)); }

    std::size_t size() const noexcept { return static_cast<std::size_t>(v_.rows()); }
    cplx operator()(std::size_t i, std::size_t j) const {
        return v_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const Eigen::MatrixXcd& matrix() const noexcept { return v_; }

    CouplingMatrix scaled(double lambda) const { return CouplingMatrix(lambda * v_); }

private:
    Eigen::MatrixXcd v_;
};

/// b for a channel at signed distance offset = E - eps_j from its threshold.
inline cplx b_from_offset(double offset, const Units& units) {
    const double mag = std::sqrt(2.0 * units.mass / std::abs(offset)) / (2.0 * units.hbar);
    return offset > 0.0 ? cplx(mag, 0.0) : cplx(0.0, -mag);
}

/// (1/2hbar) sqrt(2m / (E - eps + i0)) on the principal branch.
/// Throws ThresholdProximity when |E - eps| <= guard.
inline cplx b_factor(double energy, double channel_energy, const Units& units = {},
                     double guard = 1e-9) {
    const double offset = energy - channel_energy;
    if (std::abs(offset) <= guard) throw ThresholdProximity(energy, channel_energy);
    return b_from_offset(offset, units);
}

struct BFactors {
    Eigen::VectorXcd b;
    std::vector<bool> open;
};

/// b factors from precomputed signed offsets E - eps_j. The quadrature uses this
/// entry point so that offsets near a threshold keep full relative precision.
inline BFactors b_factors_from_offsets(double energy, std::span<const double> offsets,
                                       const ChannelSet& channels) {
    BFactors out{Eigen::VectorXcd(static_cast<Eigen::Index>(offsets.size())),
                 std::vector<bool>(offsets.size())};
    const double guard = channels.threshold_guard();
    for (std::size_t j = 0; j < offsets.size(); ++j) {
        if (std::abs(offsets[j]) <= guard) throw ThresholdProximity(energy, channels.energy(j));
        out.b(static_cast<Eigen::Index>(j)) = b_from_offset(offsets[j], channels.units());
        out.open[j] = offsets[j] > 0.0;
    }
    return out;
}

inline BFactors b_factors(double energy, const ChannelSet& channels) {
    std::vector<double> offsets(channels.size());
    for (std::size_t j = 0; j < channels.size(); ++j) offsets[j] = energy - channels.energy(j);
    return b_factors_from_offsets(energy, offsets, channels);
}

struct SolveOptions {
    double max_condition = 1e12;
};

/// T-matrix for every incoming channel at one total energy.
struct OnShellTMatrix {
    double energy = 0.0;
    Eigen::MatrixXcd psi; ///< psi(j', j_in): contact amplitudes, units (2 pi hbar)^{-1/2}
    Eigen::MatrixXcd t;   ///< t(j_out, j_in) = <p' j_out| T |p j_in>
    BFactors b;
    double condition = 0.0; ///< 1-norm condition number of I + i diag(b) v

    bool on_shell(std::size_t j_out, std::size_t j_in) const { return b.open.at(j_out) && b.open.at(j_in); }
    cplx operator()(std::size_t j_out, std::size_t j_in) const {
        return t(static_cast<Eigen::Index>(j_out), static_cast<Eigen::Index>(j_in));
    }
};

namespace detail {

inline void check_sizes(const CouplingMatrix& v, const ChannelSet& channels) {
    if (v.size() != channels.size())
        throw InvalidArgument("coupling matrix size does not match the channel count");
}

} // namespace detail

/// Solves the contact Lippmann-Schwinger system for all incoming channels at
/// once. T is formed as B^{-1} M^{-1} B v / (2 pi hbar), which equals the
/// psi-based expression without the cancellation in sqrt(2 pi hbar) psi - 1.
inline OnShellTMatrix t_matrix_from_offsets(double energy, std::span<const double> offsets,
                                            const CouplingMatrix& v, const ChannelSet& channels,
                                            const SolveOptions& opts = {}) {
    detail::check_sizes(v, channels);
    const auto n = static_cast<Eigen::Index>(channels.size());
    const double hbar = channels.units().hbar;
    const double two_pi_hbar = 2.0 * std::numbers::pi * hbar;

    OnShellTMatrix out;
    out.energy = energy;
    out.b = b_factors_from_offsets(energy, offsets, channels);

    const cplx i_unit(0.0, 1.0);
    const Eigen::MatrixXcd m =
        Eigen::MatrixXcd::Identity(n, n) + i_unit * (out.b.b.asDiagonal() * v.matrix());
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    const Eigen::MatrixXcd m_inv = lu.inverse();

    const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
    const double norm_inv = m_inv.cwiseAbs().colwise().sum().maxCoeff();
    out.condition = norm * norm_inv;
    if (!std::isfinite(out.condition) || out.condition > opts.max_condition)
        throw SingularSystem(energy, out.condition);

    out.psi = m_inv / std::sqrt(two_pi_hbar);
    const Eigen::VectorXcd b_inv = out.b.b.cwiseInverse();
    out.t = b_inv.asDiagonal() * m_inv * out.b.b.asDiagonal() * v.matrix() / two_pi_hbar;
    return out;
}

inline OnShellTMatrix t_matrix(double energy, const CouplingMatrix& v, const ChannelSet& channels,
                               const SolveOptions& opts = {}) {
    std::vector<double> offsets(channels.size());
    for (std::size_t j = 0; j < channels.size(); ++j) offsets[j] = energy - channels.energy(j);
    return t_matrix_from_offsets(energy, offsets, v, channels, opts);
}

/// Contact amplitudes and T-row for a single incoming channel.
struct ScatteringSolution {
    double energy = 0.0;
    std::size_t incoming = 0;
    Eigen::VectorXcd psi;
    Eigen::VectorXcd t_row;     ///< t_row(j') = <p' j'| T |p j_in>
    std::vector<bool> on_shell; ///< false for closed outgoing channels
    double condition = 0.0;
    double residual = 0.0; ///< normwise relative residual of the linear solve
};

inline cplx t_element(const ScatteringSolution& solution, std::size_t j_out,
                      const ChannelSet& channels);

/// Solves (I + i diag(b) v) psi = e_{j_in}/sqrt(2 pi hbar) by partial-pivot LU.
inline ScatteringSolution solve_channel_amplitudes(double energy, std::size_t j_in,
                                                   const CouplingMatrix& v,
                                                   const ChannelSet& channels,
                                                   const SolveOptions& opts = {}) {
    detail::check_sizes(v, channels);
    if (j_in >= channels.size()) throw InvalidArgument("incoming channel index out of range");
    if (!channels.is_open(j_in, energy))
        throw InvalidArgument("incoming channel is closed at E=" + std::to_string(energy));

    const auto n = static_cast<Eigen::Index>(channels.size());
    const double two_pi_hbar = 2.0 * std::numbers::pi * channels.units().hbar;
    const BFactors bf = b_factors(energy, channels);

    const cplx i_unit(0.0, 1.0);
    const Eigen::MatrixXcd m =
        Eigen::MatrixXcd::Identity(n, n) + i_unit * (bf.b.asDiagonal() * v.matrix());
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    const Eigen::MatrixXcd m_inv = lu.inverse();
    const double cond = m.cwiseAbs().colwise().sum().maxCoeff() *
                        m_inv.cwiseAbs().colwise().sum().maxCoeff();
    if (!std::isfinite(cond) || cond > opts.max_condition) throw SingularSystem(energy, cond);

    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs(static_cast<Eigen::Index>(j_in)) = 1.0 / std::sqrt(two_pi_hbar);

    ScatteringSolution out;
    out.energy = energy;
    out.incoming = j_in;
    out.psi = lu.solve(rhs);
    out.condition = cond;
    out.on_shell = bf.open;
    const double scale = m.cwiseAbs().rowwise().sum().maxCoeff() * out.psi.cwiseAbs().maxCoeff() +
                         rhs.cwiseAbs().maxCoeff();
    out.residual = (m * out.psi - rhs).cwiseAbs().maxCoeff() / scale;

    out.t_row.resize(n);
    for (std::size_t j = 0; j < channels.size(); ++j)
        out.t_row(static_cast<Eigen::Index>(j)) = t_element(out, j, channels);
    return out;
}

/// <p' j_out| T |p j_in> = (i/pi) sqrt((E - eps_out)/2m) (sqrt(2 pi hbar) psi_out - delta).
/// For a closed outgoing channel the square root is taken on the +i0 branch and
/// the element is off-shell.
inline cplx t_element(const ScatteringSolution& solution, std::size_t j_out,
                      const ChannelSet& channels) {
    if (j_out >= channels.size()) throw InvalidArgument("outgoing channel index out of range");
    const Units& u = channels.units();
    const cplx b_out = b_factor(solution.energy, channels.energy(j_out), u, channels.threshold_guard());
    // sqrt((E - eps)/2m) == 1 / (2 hbar b) on both branches.
    const cplx kinematic = 1.0 / (2.0 * u.hbar * b_out);
    const double delta = j_out == solution.incoming ? 1.0 : 0.0;
    const cplx amp = std::sqrt(2.0 * std::numbers::pi * u.hbar) *
                         solution.psi(static_cast<Eigen::Index>(j_out)) -
                     delta;
    return cplx(0.0, 1.0 / std::numbers::pi) * kinematic * amp;
}

/// Momentum-space T element. The result depends only on |p| through the total
/// energy; the signs of p_in and p_out do not enter.
inline cplx t_matrix_element(double p_out, std::size_t j_out, double p_in, std::size_t j_in,
                             const CouplingMatrix& v, const ChannelSet& channels,
                             double shell_tol = 1e-10) {
    const double m = channels.units().mass;
    const double energy = p_in * p_in / (2.0 * m) + channels.energy(j_in);
    const double out_energy = p_out * p_out / (2.0 * m) + channels.energy(j_out);
    if (std::abs(out_energy - energy) > shell_tol * std::max(1.0, std::abs(energy)))
        throw InvalidArgument("momenta are not on the energy shell");
    return t_element(solve_channel_amplitudes(energy, j_in, v, channels), j_out, channels);
}

/// Differences measuring how far the on-shell T-matrix is from Hermitian,
/// symmetric, and (time reversal with parity) |T|^2-symmetric for one pair.
struct TDefects {
    cplx hermiticity;     ///< T_{j'j} - conj(T_{jj'})
    cplx symmetry;        ///< T_{j'j} - T_{jj'}
    double time_reversal; ///< |T_{j'j}|^2 - |T_{jj'}|^2
};

inline TDefects t_defects(double energy, std::size_t j_out, std::size_t j_in, const CouplingMatrix& v,
                          const ChannelSet& channels) {
    if (!channels.is_open(j_out, energy) || !channels.is_open(j_in, energy))
        throw InvalidArgument("defects are defined only when both channels are open");
    const OnShellTMatrix t = t_matrix(energy, v, channels);
    const cplx fwd = t(j_out, j_in);
    const cplx rev = t(j_in, j_out);
    return {fwd - std::conj(rev), fwd - rev, std::norm(fwd) - std::norm(rev)};
}

inline cplx hermiticity_defect(double energy, std::size_t j_out, std::size_t j_in,
                               const CouplingMatrix& v, const ChannelSet& channels) {
    return t_defects(energy, j_out, j_in, v, channels).hermiticity;
}

inline cplx symmetry_defect(double energy, std::size_t j_out, std::size_t j_in,
                            const CouplingMatrix& v, const ChannelSet& channels) {
    return t_defects(energy, j_out, j_in, v, channels).symmetry;
}

inline double time_reversal_defect(double energy, std::size_t j_out, std::size_t j_in,
                                   const CouplingMatrix& v, const ChannelSet& channels) {
    return t_defects(energy, j_out, j_in, v, channels).time_reversal;
}

// ---------------------------------------------------------------------------
// Closed-form three-channel amplitudes.
//
// Channels are indexed (-, 0, +) = (0, 1, 2) and the coupling must have the
// circulant form of the triangle model: equal diagonal d and
// v_{0,1} = v_{1,2} = v_{2,0} = z. The printed formulas are for incoming
// channel 0 (index 1); other incoming channels follow by cyclic relabelling,
// under which such a coupling matrix is invariant.

namespace detail {

inline void require_circulant_3(const CouplingMatrix& v) {
    if (v.size() != 3) throw InvalidArgument("closed forms need exactly 3 channels");
    const Eigen::MatrixXcd& m = v.matrix();
    const double tol = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
    const bool ok = std::abs(m(0, 0) - m(1, 1)) <= tol && std::abs(m(1, 1) - m(2, 2)) <= tol &&
                    std::abs(m(0, 1) - m(1, 2)) <= tol && std::abs(m(1, 2) - m(2, 0)) <= tol;
    if (!ok) throw InvalidArgument("closed forms need the circulant triangle coupling");
}

struct CyclicView {
    cplx b_minus, b_center, b_plus;
    cplx v_cc, v_pc, v_mc;
};

inline CyclicView cyclic_view(const BFactors& bf, const CouplingMatrix& v, std::size_t center) {
    const std::size_t minus = (center + 2) % 3;
    const std::size_t plus = (center + 1) % 3;
    auto b = [&](std::size_t j) { return bf.b(static_cast<Eigen::Index>(j)); };
    return {b(minus), b(center), b(plus), v(center, center), v(plus, center), v(minus, center)};
}

inline cplx inverse_norm(const CyclicView& c) {
    const cplx i(0.0, 1.0);
    const cplx bm = c.b_minus, b0 = c.b_center, bp = c.b_plus;
    const cplx d = c.v_cc, vp = c.v_pc, vm = c.v_mc;
    return -i * (-i + bm * d) * (-i + bp * d) + i * bm * bp * vm * vp +
           b0 * (-i * (bm + bp) * d * d + bm * bp * d * d * d + bm * bp * vm * vm * vm +
                 i * (bm + bp) * vm * vp + bp * bm * vp * vp * vp - d * (1.0 + 3.0 * bm * bp * vm * vp));
}

} // namespace detail

/// 1/N_Psi of the closed-form amplitudes (equal to i det(I + i diag(b) v)).
inline cplx inverse_normalization_3ch(double energy, const CouplingMatrix& v, const ChannelSet& channels) {
    detail::require_circulant_3(v);
    detail::check_sizes(v, channels);
    return detail::inverse_norm(detail::cyclic_view(b_factors(energy, channels), v, 1));
}

/// Contact amplitudes (psi_-, psi_0, psi_+) from the closed-form solution.
inline std::array<cplx, 3> closed_form_amplitudes_3ch(double energy, std::size_t j_in,
                                                      const CouplingMatrix& v,
                                                      const ChannelSet& channels) {
    detail::require_circulant_3(v);
    detail::check_sizes(v, channels);
    if (j_in > 2) throw InvalidArgument("incoming channel index out of range");

    const BFactors bf = b_factors(energy, channels);
    const detail::CyclicView c = detail::cyclic_view(bf, v, j_in);
    const cplx inv_norm = detail::inverse_norm(c);
    if (std::abs(inv_norm) <= 1e-12) throw ResonancePole(energy);
    const cplx norm = 1.0 / inv_norm;

    const cplx i(0.0, 1.0);
    const cplx bm = c.b_minus, bp = c.b_plus;
    const cplx d = c.v_cc, vp = c.v_pc, vm = c.v_mc;
    const double source = 1.0 / std::sqrt(2.0 * std::numbers::pi * channels.units().hbar);

    const cplx psi_center = norm * (-i * (-i + bm * d) * (-i + bp * d) + i * bm * bp * vm * vp);
    const cplx psi_plus = norm * bp * (vp - i * bm * (vm * vm - d * vp));
    const cplx psi_minus = norm * bm * (vm - i * bp * (vp * vp - d * vm));

    std::array<cplx, 3> out{};
    out[j_in] = source * psi_center;
    out[(j_in + 1) % 3] = source * psi_plus;
    out[(j_in + 2) % 3] = source * psi_minus;
    return out;
}

} // namespace dbv
