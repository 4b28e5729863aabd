#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <dbv/model_3qd.hpp>
#include <dbv/thermal_rates.hpp>

#include "oracles.hpp"

using namespace dbv;
using dbv::triangle::TriangleModel;

namespace {

constexpr std::size_t minus = 0, zero = 1, plus = 2;

const TriangleModel& uneven() {
    static const TriangleModel m = TriangleModel::from_energies({-0.5, 0.0, 0.5}, {1, 0.7, 1.5});
    return m;
}

std::vector<double> energies(const ChannelSet& ch) { return {ch.energies().begin(), ch.energies().end()}; }

double max_ratio_deviation(const RateTable& t) {
    double worst = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
        for (std::size_t l = 0; l < t.size(); ++l)
            if (k != l) worst = std::max(worst, std::abs(t.ratio_at(k, l) - 1.0));
    return worst;
}

} // namespace

TEST(ThermalBath, Validation) {
    EXPECT_THROW((ThermalBath{0.0}).validate(), InvalidArgument);
    EXPECT_THROW((ThermalBath{1.0, -1.0}).validate(), InvalidArgument);
    EXPECT_THROW((ThermalBath{1.0, 1.0, 0.0}).validate(), InvalidArgument);
    EXPECT_NO_THROW((ThermalBath{2.0}).validate());
    EXPECT_NEAR(ThermalBath::physical_prefactor(2.0, 1.0, 1.0), 2.0 * std::sqrt(std::numbers::pi), 1e-14);
}

TEST(ThermalIntegral, ZeroCouplingGivesZero) {
    const auto& m = uneven();
    const ThermalBath bath{2.0};
    EXPECT_EQ(thermal_integral_A(plus, zero, bath, m.channels, CouplingMatrix::zero(3)).value, 0.0);
    EXPECT_EQ(thermal_integral_B(plus, zero, bath, m.channels, CouplingMatrix::zero(3)).value, 0.0);
    EXPECT_THROW(i_ratio(plus, zero, bath, m.channels, CouplingMatrix::zero(3)), UndefinedRatio);
    EXPECT_THROW(thermal_integral_A(zero, zero, bath, m.channels, m.coupling), InvalidArgument);
}

TEST(ThermalIntegral, AgreesWithMidpointOracle) {
    const auto& m = uneven();
    const ThermalBath bath{2.0}; // beta Delta E = 1
    const auto eps = energies(m.channels);
    for (auto [jo, ji] : std::vector<std::pair<std::size_t, std::size_t>>{{plus, zero}, {zero, minus}, {minus, plus}}) {
        const auto a = thermal_integral_A(jo, ji, bath, m.channels, m.coupling);
        const auto b = thermal_integral_B(jo, ji, bath, m.channels, m.coupling);
        const double ra = oracle::thermal_integral(eps, m.coupling.matrix(), bath.beta, jo, ji, false);
        const double rb = oracle::thermal_integral(eps, m.coupling.matrix(), bath.beta, jo, ji, true);
        EXPECT_NEAR(a.value / ra, 1.0, 1e-6);
        EXPECT_NEAR(b.value / rb, 1.0, 1e-6);
        EXPECT_LE(a.relative_error(), 1e-9);
        EXPECT_GT(a.evaluations, 0u);
    }
}

TEST(ThermalIntegral, RelabelingIdentityAgainstOracle) {
    // B(k,l) by the library against e^{-beta(eps_k - eps_l)} A(l,k) by the oracle.
    const auto& m = uneven();
    const ThermalBath bath{1.3};
    const auto eps = energies(m.channels);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t l = 0; l < 3; ++l) {
            if (k == l) continue;
            const double b = thermal_integral_B(k, l, bath, m.channels, m.coupling).value;
            const double a = oracle::thermal_integral(eps, m.coupling.matrix(), bath.beta, l, k, false);
            EXPECT_NEAR(b / (std::exp(-bath.beta * (eps[k] - eps[l])) * a), 1.0, 1e-7);
        }
}

TEST(ThermalIntegral, ActivationSuppression) {
    const auto& m = uneven();
    const ThermalBath bath{40.0};
    const double up = thermal_integral_A(plus, minus, bath, m.channels, m.coupling).value;
    const double down = thermal_integral_A(minus, plus, bath, m.channels, m.coupling).value;
    // Same support; the upward rate carries the activation factor e^{-beta (eps_+ - eps_-)}.
    const double ratio = i_ratio(plus, minus, bath, m.channels, m.coupling);
    EXPECT_NEAR(up / down / (std::exp(-bath.beta) * ratio), 1.0, 1e-8);
    EXPECT_GT(ratio, 0.1);
    EXPECT_LT(ratio, 10.0);
}

TEST(ThermalIntegral, InteriorThresholdIsHandled) {
    // Pair (0,-) integrates across the + threshold at E = 0.5.
    const auto& m = uneven();
    const ThermalBath bath{0.2};
    const auto a = thermal_integral_A(zero, minus, bath, m.channels, m.coupling);
    const double ref = oracle::thermal_integral(energies(m.channels), m.coupling.matrix(), bath.beta, zero, minus, false);
    EXPECT_NEAR(a.value / ref, 1.0, 1e-6);
    EXPECT_GE(a.upper_energy, 0.0 + std::log(1e16) / bath.beta);
}

TEST(ThermalIntegral, FailureIsReported) {
    const auto& m = uneven();
    RateOptions opts;
    opts.quad.max_intervals = 4;
    opts.quad.rel_tol = 1e-15;
    EXPECT_THROW(thermal_integral_A(plus, zero, ThermalBath{2.0}, m.channels, m.coupling, opts), QuadratureFailure);
    const RateTable t = rate_matrix(ThermalBath{2.0}, m.channels, m.coupling, opts);
    EXPECT_FALSE(t.complete());
    EXPECT_EQ(t.failures.size(), 6u);
}

TEST(RateTable, ZeroCouplingGivesZeroRatesAndEmptyCheck) {
    const auto& m = uneven();
    const RateTable t = rate_matrix(ThermalBath{1.0}, m.channels, CouplingMatrix::zero(3));
    EXPECT_TRUE(t.complete());
    EXPECT_EQ(t.rates.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(dbe_identity_check(t).empty);
    const RateTable equal =
        rate_matrix(ThermalBath{1.0}, m.channels, triangle::coupling_from_sites({1, 1, 1}));
    EXPECT_TRUE(dbe_identity_check(equal).empty);
}

TEST(RateTable, UnevenInvariants) {
    const auto& m = uneven();
    for (double beta : {0.2, 2.0, 20.0}) {
        const RateTable t = rate_matrix(ThermalBath{beta}, m.channels, m.coupling);
        ASSERT_TRUE(t.complete());
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_EQ(t.rate(k, k), 0.0);
            for (std::size_t l = 0; l < 3; ++l) {
                if (k == l) continue;
                EXPECT_GT(t.rate(k, l), 0.0);
                EXPECT_GT(t.B(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)), 0.0);
                ASSERT_TRUE(t.has_ratio(k, l));
                EXPECT_GT(t.ratio_at(k, l), 0.0);
            }
        }
        const auto id = identity_residuals(t);
        EXPECT_LE(id.reciprocal, 1e-8);
        EXPECT_LE(id.relabeling, 1e-8);
        const auto dbe = dbe_identity_check(t);
        EXPECT_FALSE(dbe.empty);
        EXPECT_EQ(dbe.checked, 6u);
        EXPECT_LE(dbe.max_residual, 1e-8);
        EXPECT_LE(t.max_relative_error(), 1e-9);
    }
}

TEST(RateTable, PrefactorScalesRatesOnly) {
    const auto& m = uneven();
    const RateTable one = rate_matrix(ThermalBath{2.0}, m.channels, m.coupling);
    const RateTable three = rate_matrix(ThermalBath{2.0, 1.0, 3.0}, m.channels, m.coupling);
    EXPECT_LT((three.rates - 3.0 * one.rates).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(three.I, one.I);
}

TEST(RateTable, SmallBetaDetailedBalanceRelation) {
    const auto& m = uneven();
    const double beta = 0.01;
    const RateTable t = rate_matrix(ThermalBath{beta}, m.channels, m.coupling);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t l = 0; l < 3; ++l) {
            if (k == l) continue;
            const double lhs = t.rate(k, l) / t.rate(l, k);
            const double rhs = t.ratio_at(k, l) * std::exp(-beta * (m.channels.energy(k) - m.channels.energy(l)));
            EXPECT_NEAR(lhs / rhs, 1.0, 1e-8);
        }
}

TEST(RateTable, TwoEqualStrengthsRestoreDetailedBalance) {
    const auto m = TriangleModel::from_energies({-0.5, 0.0, 0.5}, {1, 0.7, 0.7});
    for (double beta : {0.2, 2.0, 20.0}) {
        const RateTable t = rate_matrix(ThermalBath{beta}, m.channels, m.coupling);
        EXPECT_LE(max_ratio_deviation(t), 1e-7);
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t l = 0; l < 3; ++l)
                if (k != l) {
                    EXPECT_NEAR(t.B(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) /
                                    t.A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)),
                                1.0, 1e-8);
                }
    }
    for (const triangle::SiteStrengths s : {triangle::SiteStrengths{0.4, 0.4, 1.3}, triangle::SiteStrengths{2.0, 0.5, 2.0}}) {
        const auto mm = TriangleModel::from_energies({-0.5, 0.0, 0.5}, s);
        EXPECT_LE(max_ratio_deviation(rate_matrix(ThermalBath{2.0}, mm.channels, mm.coupling)), 1e-7);
    }
}

TEST(RateTable, UnevenRatiosDeviateAndTrend) {
    const auto& m = uneven();
    const RateTable lo = rate_matrix(ThermalBath{2.0}, m.channels, m.coupling);
    const RateTable hi = rate_matrix(ThermalBath{20.0}, m.channels, m.coupling);
    EXPECT_LT(std::abs(hi.ratio_at(zero, minus) - 1.0), std::abs(lo.ratio_at(zero, minus) - 1.0));
    for (const RateTable* t : {&lo, &hi}) {
        EXPECT_GT(std::abs(t->ratio_at(plus, minus) - 1.0), 1e3 * t->ratio_error(plus, minus));
        EXPECT_GT(std::abs(t->ratio_at(zero, plus) - 1.0), 1e3 * t->ratio_error(zero, plus));
    }
}

TEST(RateTable, BornRestoration) {
    const auto& m = uneven();
    double prev = 1e300;
    for (double lambda : {1.0, 1e-1, 1e-2, 1e-3}) {
        const RateTable t = rate_matrix(ThermalBath{2.0}, m.channels, m.coupling.scaled(lambda));
        const double dev = max_ratio_deviation(t);
        EXPECT_LT(dev, prev);
        prev = dev;
    }
    EXPECT_LE(prev, 1e-3);
}

TEST(RateTable, FromRates) {
    const ChannelSet ch({0.0, 1.0});
    Eigen::MatrixXd a(2, 2);
    a << 0.0, 1.0, std::exp(-1.0), 0.0;
    const RateTable t = RateTable::from_rates(a, 1.0, ch);
    EXPECT_NEAR(t.ratio_at(1, 0), 1.0, 1e-15);
    EXPECT_LE(dbe_identity_check(t).max_residual, 1e-15);
    Eigen::MatrixXd bad = a;
    bad(0, 1) = -1.0;
    EXPECT_THROW(RateTable::from_rates(bad, 1.0, ch), InvalidArgument);
}

TEST(RateTable, Deterministic) {
    const auto& m = uneven();
    const RateTable a = rate_matrix(ThermalBath{3.0}, m.channels, m.coupling);
    const RateTable b = rate_matrix(ThermalBath{3.0}, m.channels, m.coupling);
    EXPECT_EQ(a.A, b.A);
    EXPECT_EQ(a.B, b.B);
    EXPECT_EQ(a.A_error, b.A_error);
}
