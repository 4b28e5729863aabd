// On-shell T-matrix of the triangle model at a few energies, with the
// hermiticity, symmetry and |T|^2 defects for the pair (+, 0).

#include <cstdio>

#include <dbv/dbv.hpp>

int main() {
    using namespace dbv;
    const auto m = triangle::TriangleModel::from_energies({-0.5, 0.0, 0.5}, {1.0, 0.7, 1.5});
    const std::size_t plus = 2, zero = 1;

    std::printf("%8s  %24s  %12s  %12s  %12s\n", "E", "<+|T|0>", "|herm|", "|sym|", "|T|^2 diff");
    for (double e : {0.6, 1.0, 2.0, 4.0}) {
        const OnShellTMatrix t = t_matrix(e, m.coupling, m.channels);
        const TDefects d = t_defects(e, plus, zero, m.coupling, m.channels);
        std::printf("%8.3f  (%+.4e, %+.4e)  %12.4e  %12.4e  %12.4e\n", e, t(plus, zero).real(), t(plus, zero).imag(),
                    std::abs(d.hermiticity), std::abs(d.symmetry), d.time_reversal);
    }

    // Below the + threshold the element is computed but off-shell.
    const OnShellTMatrix below = t_matrix(0.2, m.coupling, m.channels);
    std::printf("E=0.2: <+|T|0> on shell: %s\n", below.on_shell(plus, zero) ? "yes" : "no");
    return 0;
}
