#pragma once

// Single electron on three quantum dots in a triangle threaded by a magnetic
// flux. Eigenstates are labelled j = -1, 0, +1 and stored in that order; the
// gas particle couples to dot iota through a contact strength V_iota.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "scattering.hpp"

namespace dbv::triangle {

using SiteStrengths = std::array<double, 3>;

inline constexpr std::array<int, 3> eigen_labels = {-1, 0, 1};

/// Tight-binding Hamiltonian in the localized basis |1>, |2>, |3>.
inline Eigen::Matrix3cd hamiltonian_3qd(double tau, double phi) {
    if (tau == 0.0) throw InvalidArgument("tunneling amplitude must be nonzero");
    const double theta = 2.0 * std::numbers::pi * phi / 3.0;
    const cplx fwd = tau * std::polar(1.0, theta);
    const cplx back = tau * std::polar(1.0, -theta);
    Eigen::Matrix3cd h;
    h << 0.0, back, fwd,
         fwd, 0.0, back,
         back, fwd, 0.0;
    return h;
}

/// Levels in label order (-, 0, +): eps_j = 2 tau cos(2 pi (phi - j) / 3).
/// For tau < 0 this is -2|tau| cos(2 pi (phi + j) / 3) up to relabelling.
inline std::array<double, 3> labeled_eigenenergies(double tau, double phi) {
    if (tau == 0.0) throw InvalidArgument("tunneling amplitude must be nonzero");
    std::array<double, 3> e{};
    for (std::size_t k = 0; k < 3; ++k)
        e[k] = 2.0 * tau * std::cos(2.0 * std::numbers::pi * (phi - eigen_labels[k]) / 3.0);
    return e;
}

/// Sorted spectrum of hamiltonian_3qd. Throws DegenerateSpectrum when two
/// levels are closer than 1e-9 |tau|.
inline std::array<double, 3> eigenenergies(double tau, double phi) {
    auto e = labeled_eigenenergies(tau, phi);
    std::sort(e.begin(), e.end());
    const double gap = std::min(e[1] - e[0], e[2] - e[1]);
    if (gap < 1e-9 * std::abs(tau))
        throw DegenerateSpectrum("flux " + std::to_string(phi) + " gives a degenerate spectrum");
    return e;
}

/// Overlaps W(j, iota) = <j|chi_iota> between eigenstates (rows -, 0, +) and
/// dots (columns 1, 2, 3). Independent of tau and phi.
inline Eigen::Matrix3cd eigenbasis_overlaps() {
    Eigen::Matrix3cd w;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            w(r, c) = std::polar(1.0 / std::sqrt(3.0),
                                 -2.0 * std::numbers::pi * eigen_labels[r] * c / 3.0);
    return w;
}

/// v_{jj'} = sum_iota <j|chi_iota> V_iota <chi_iota|j'> for an arbitrary unitary
/// overlap matrix W(j, iota).
inline CouplingMatrix general_site_coupling(std::span<const double> strengths,
                                            const Eigen::MatrixXcd& overlaps) {
    const auto n = overlaps.rows();
    if (overlaps.cols() != n || static_cast<Eigen::Index>(strengths.size()) != n)
        throw InvalidArgument("overlap matrix must be square with one column per site");
    const double defect =
        (overlaps * overlaps.adjoint() - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!(defect <= 1e-12)) throw NonUnitaryBasis("eigenbasis overlaps are not unitary");
    Eigen::VectorXcd diag(n);
    for (Eigen::Index k = 0; k < n; ++k) diag(k) = strengths[static_cast<std::size_t>(k)];
    Eigen::MatrixXcd v = overlaps * diag.asDiagonal() * overlaps.adjoint();
    // Exact Hermitian symmetrization removes rounding asymmetry.
    v = 0.5 * (v + v.adjoint()).eval();
    return CouplingMatrix(v);
}

/// Channel couplings of the triangle: v_jj = (V1+V2+V3)/3,
/// v_{0+} = v_{+-} = v_{-0} = (V1 + V2 w + V3 conj(w))/3 with w = e^{i 2pi/3},
/// and the conjugate entries below.
inline CouplingMatrix coupling_from_sites(const SiteStrengths& s) {
    const double diag = (s[0] + s[1] + s[2]) / 3.0;
    const double half_sqrt3 = std::sqrt(3.0) / 2.0;
    const cplx z((s[0] - 0.5 * (s[1] + s[2])) / 3.0, half_sqrt3 * (s[1] - s[2]) / 3.0);
    constexpr int minus = 0, zero = 1, plus = 2;
    Eigen::MatrixXcd v(3, 3);
    v.diagonal().setConstant(diag);
    v(zero, plus) = v(plus, minus) = v(minus, zero) = z;
    v(zero, minus) = v(minus, plus) = v(plus, zero) = std::conj(z);
    return CouplingMatrix(v);
}

inline ChannelSet make_channels(const std::array<double, 3>& energies, Units units = {}) {
    return ChannelSet({energies[0], energies[1], energies[2]}, {"-", "0", "+"}, units);
}

struct TriangleModel {
    ChannelSet channels;
    SiteStrengths sites;
    CouplingMatrix coupling;

    /// Levels (eps_-, eps_0, eps_+) given directly; they must sum to zero.
    static TriangleModel from_energies(const std::array<double, 3>& energies,
                                       const SiteStrengths& sites, Units units = {}) {
        const double scale = std::max({std::abs(energies[0]), std::abs(energies[1]),
                                       std::abs(energies[2]), 1e-300});
        if (std::abs(energies[0] + energies[1] + energies[2]) > 1e-12 * std::max(1.0, scale))
            throw InvalidArgument("triangle levels must sum to zero");
        return {make_channels(energies, units), sites, coupling_from_sites(sites)};
    }

    static TriangleModel from_flux(double tau, double phi, const SiteStrengths& sites, Units units = {}) {
        eigenenergies(tau, phi); // degeneracy guard
        return {make_channels(labeled_eigenenergies(tau, phi), units), sites, coupling_from_sites(sites)};
    }
};

} // namespace dbv::triangle
