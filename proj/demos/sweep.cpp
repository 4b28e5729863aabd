// Violation ratios I(0,-), I(+,-), I(0,+) against beta * DeltaE for the
// triangle with all contact strengths different, plus the two conditions
// that keep the Gibbs state stationary.

#include <cmath>
#include <cstdio>

#include <dbv/dbv.hpp>

int main() {
    using namespace dbv;
    const auto m = triangle::TriangleModel::from_energies({-0.5, 0.0, 0.5}, {1.0, 0.7, 1.5});
    const double delta_e = m.channels.energy(1) - m.channels.energy(0);
    const std::size_t minus = 0, zero = 1, plus = 2;

    std::printf("%10s %12s %12s %12s %12s %12s %12s\n", "beta*dE", "I(0,-)", "I(+,-)", "I(0,+)", "res(a)", "res(b)",
                "|Wp|/|W|");
    for (int k = 0; k <= 10; ++k) {
        const double bde = 0.1 * std::pow(100.0, k / 10.0);
        const RateTable t = rate_matrix(ThermalBath{bde / delta_e}, m.channels, m.coupling);
        const ThermalizationResiduals r = thermalization_residuals(t);
        const PauliGenerator g = build_generator(t);
        const double stat =
            (g.matrix() * gibbs_state(t.beta, t.channels).p).cwiseAbs().maxCoeff() / g.max_abs();
        std::printf("%10.4f %12.8f %12.8f %12.8f %12.2e %12.2e %12.2e\n", bde, t.ratio_at(zero, minus),
                    t.ratio_at(plus, minus), t.ratio_at(zero, plus), r.res_a, r.res_b, stat);
    }
    return 0;
}
