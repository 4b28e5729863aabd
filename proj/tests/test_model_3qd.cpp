#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include <dbv/model_3qd.hpp>

#include "oracles.hpp"

using namespace dbv;
using namespace dbv::triangle;

TEST(Hamiltonian, ZeroFluxIsRealSymmetric) {
    const auto h = hamiltonian_3qd(0.4, 0.0);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_EQ(h(r, c), r == c ? cplx(0.0) : cplx(0.4));
}

TEST(Hamiltonian, HermitianTracelessAndSpectrum) {
    for (double tau : {0.3, -0.7, 1.2})
        for (double phi : {0.1, 0.37, 0.75, 1.9}) {
            const auto h = hamiltonian_3qd(tau, phi);
            EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-16);
            EXPECT_LT(std::abs(h.trace()), 1e-15);
            const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(h);
            const auto e = eigenenergies(tau, phi);
            for (int k = 0; k < 3; ++k) EXPECT_NEAR(es.eigenvalues()(k), e[static_cast<std::size_t>(k)], 1e-12);
            EXPECT_NEAR(e[0] + e[1] + e[2], 0.0, 1e-12);
            EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
        }
    EXPECT_THROW(hamiltonian_3qd(0.0, 0.2), InvalidArgument);
}

TEST(Eigenenergies, DegenerateAtZeroFlux) {
    EXPECT_THROW(eigenenergies(0.5, 0.0), DegenerateSpectrum);
    // Negative tau gives the printed -1, 0.5, 0.5 pattern.
    const auto e = labeled_eigenenergies(-0.5, 0.0);
    EXPECT_DOUBLE_EQ(e[1], -1.0);
    EXPECT_DOUBLE_EQ(e[0], 0.5);
    EXPECT_THROW(eigenenergies(-0.5, 0.0), DegenerateSpectrum);
    EXPECT_THROW(eigenenergies(0.5, 1.5), DegenerateSpectrum);
}

TEST(Eigenenergies, RootSolveReproducesUnevenLevels) {
    // eps_0 = 2 tau cos(2 pi phi / 3) vanishes at the flux; tau then fixes the scale.
    auto eps0 = [](double phi) { return labeled_eigenenergies(1.0, phi)[1]; };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t it = 100;
    const auto [lo, hi] = boost::math::tools::toms748_solve(eps0, 0.5, 1.0, tol, it);
    const double phi = 0.5 * (lo + hi);
    const double tau = 0.5 / labeled_eigenenergies(1.0, phi)[2];
    const auto e = labeled_eigenenergies(tau, phi);
    EXPECT_NEAR(e[0], -0.5, 1e-10);
    EXPECT_NEAR(e[1], 0.0, 1e-10);
    EXPECT_NEAR(e[2], 0.5, 1e-10);
    EXPECT_NEAR(phi, 0.75, 1e-12);
    EXPECT_NEAR(tau, 1.0 / (2.0 * std::sqrt(3.0)), 1e-12);
}

TEST(Coupling, EqualStrengthsAreDiagonal) {
    const auto v = coupling_from_sites({1, 1, 1});
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            EXPECT_NEAR(std::abs(v(r, c) - (r == c ? cplx(1.0) : cplx(0.0))), 0.0, 1e-16);
}

TEST(Coupling, UnevenArithmetic) {
    const auto v = coupling_from_sites({1, 0.7, 1.5});
    constexpr std::size_t minus = 0, zero = 1, plus = 2;
    EXPECT_NEAR(v(zero, zero).real(), 3.2 / 3.0, 1e-15);
    EXPECT_NEAR(v(zero, plus).real(), -0.1 / 3.0, 1e-15);
    EXPECT_NEAR(v(zero, plus).imag(), -0.8 * std::sqrt(3.0) / 6.0, 1e-15);
    EXPECT_NEAR(v(zero, plus).imag(), -0.23094010767585, 1e-13);
    EXPECT_EQ(v(plus, minus), v(zero, plus));
    EXPECT_EQ(v(minus, zero), v(zero, plus));
    EXPECT_EQ(v(zero, minus), std::conj(v(zero, plus)));
    EXPECT_LT((v.matrix() - v.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Coupling, GeneralFormReproducesTriangle) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> s(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
        const SiteStrengths sites{s(rng), s(rng), s(rng)};
        const auto a = coupling_from_sites(sites);
        const auto b = general_site_coupling(sites, eigenbasis_overlaps());
        EXPECT_LT((a.matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Coupling, OverlapsFromExplicitEigenvectors) {
    // Eigenvectors of the Hamiltonian, phase-fixed to a real positive amplitude on dot 1.
    const double tau = 0.35, phi = 0.2;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(hamiltonian_3qd(tau, phi));
    const auto labeled = labeled_eigenenergies(tau, phi);
    Eigen::MatrixXcd w(3, 3);
    for (int j = 0; j < 3; ++j) {
        int col = 0;
        for (int c = 1; c < 3; ++c)
            if (std::abs(es.eigenvalues()(c) - labeled[static_cast<std::size_t>(j)]) <
                std::abs(es.eigenvalues()(col) - labeled[static_cast<std::size_t>(j)]))
                col = c;
        Eigen::Vector3cd vec = es.eigenvectors().col(col);
        vec *= std::polar(1.0, -std::arg(vec(0)));
        w.row(j) = vec.adjoint(); // <j|chi_iota> = conj(<chi_iota|j>)
    }
    EXPECT_LT((w - eigenbasis_overlaps()).cwiseAbs().maxCoeff(), 1e-12);
    const SiteStrengths sites{1, 0.7, 1.5};
    EXPECT_LT((general_site_coupling(sites, w).matrix() - coupling_from_sites(sites).matrix()).cwiseAbs().maxCoeff(),
              1e-12);
}

TEST(Coupling, IdentityAndRandomUnitaryOverlaps) {
    const std::array<double, 4> s{0.3, -1.0, 2.0, 0.5};
    const auto v = general_site_coupling(s, Eigen::MatrixXcd::Identity(4, 4));
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(v(r, c), r == c ? cplx(s[r]) : cplx(0.0));
    std::mt19937_64 rng(5);
    const auto u = oracle::random_unitary(4, rng);
    const auto vr = general_site_coupling(s, u);
    EXPECT_LT((vr.matrix() - vr.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-14);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(vr.matrix());
    std::array<double, 4> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(es.eigenvalues()(k), sorted[static_cast<std::size_t>(k)], 1e-13);
}

TEST(Coupling, NonUnitaryRejected) {
    Eigen::MatrixXcd w = eigenbasis_overlaps();
    w(0, 0) *= 1.001;
    EXPECT_THROW(general_site_coupling(std::array<double, 3>{1, 1, 1}, w), NonUnitaryBasis);
}

TEST(Coupling, SwappingSitesConjugatesOffDiagonal) {
    const auto a = coupling_from_sites({1, 0.7, 1.5});
    const auto b = coupling_from_sites({1, 1.5, 0.7});
    EXPECT_LT(std::abs(b(1, 2) - a(1, 0)), 1e-16);
    EXPECT_LT(std::abs(b(1, 0) - a(1, 2)), 1e-16);
}

TEST(Model, FromEnergiesAndFlux) {
    EXPECT_THROW(TriangleModel::from_energies({-0.5, 0.0, 0.6}, {1, 1, 1}), InvalidArgument);
    const auto m = TriangleModel::from_energies({-0.5, 0.0, 0.5}, {1, 0.7, 1.5});
    EXPECT_EQ(m.channels.label(0), "-");
    const auto f = TriangleModel::from_flux(1.0 / (2.0 * std::sqrt(3.0)), 0.75, {1, 0.7, 1.5});
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(f.channels.energy(k), m.channels.energy(k), 1e-15);
    EXPECT_THROW(TriangleModel::from_flux(0.5, 0.0, {1, 1, 1}), DegenerateSpectrum);
}
