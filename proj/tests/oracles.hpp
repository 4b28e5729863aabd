#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library's solvers or quadrature.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

namespace oracle {

using cplx = std::complex<double>;

/// T-matrix through the contact amplitudes: full-pivot solve of
/// (I + i diag(b) v) psi = e_j / sqrt(2 pi hbar), then
/// T_{j'j} = (i/pi) sqrt((E - eps_j')/2m) (sqrt(2 pi hbar) psi_j' - delta).
inline Eigen::MatrixXcd t_via_psi(const std::vector<double>& offsets, const Eigen::MatrixXcd& v,
                                  double mass = 1.0, double hbar = 1.0) {
    const auto n = static_cast<Eigen::Index>(offsets.size());
    const double pi = std::numbers::pi;
    Eigen::VectorXcd b(n), kin(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d = offsets[static_cast<std::size_t>(j)];
        const double mag = std::sqrt(2.0 * mass / std::abs(d)) / (2.0 * hbar);
        b(j) = d > 0 ? cplx(mag, 0) : cplx(0, -mag);
        // sqrt((E - eps + i0) / 2m)
        kin(j) = d > 0 ? cplx(std::sqrt(d / (2 * mass)), 0) : cplx(0, std::sqrt(-d / (2 * mass)));
    }
    const Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n, n) + cplx(0, 1) * b.asDiagonal() * v;
    const Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
    Eigen::MatrixXcd t(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
        rhs(j) = 1.0 / std::sqrt(2 * pi * hbar);
        const Eigen::VectorXcd psi = lu.solve(rhs);
        for (Eigen::Index k = 0; k < n; ++k)
            t(k, j) = cplx(0, 1.0 / pi) * kin(k) * (std::sqrt(2 * pi * hbar) * psi(k) - (k == j ? 1.0 : 0.0));
    }
    return t;
}

/// Thermal integral by a uniform-grid midpoint rule with step halving.
/// Between thresholds E = x0 + (x1 - x0) sin^2(theta) removes both square-root
/// endpoints; above the last threshold E = t + u^2 up to E_low + cut / beta.
/// reversed = false gives A(j_out, j_in), true gives B(j_out, j_in).
inline double thermal_integral(const std::vector<double>& eps, const Eigen::MatrixXcd& v, double beta,
                               std::size_t j_out, std::size_t j_in, bool reversed, double rel = 1e-8,
                               double cut = 50.0, double mass = 1.0) {
    const double e_low = std::max(eps[j_in], eps[j_out]);
    std::vector<double> th;
    for (double e : eps)
        if (e > e_low) th.push_back(e);
    std::sort(th.begin(), th.end());
    std::vector<double> edges{e_low};
    edges.insert(edges.end(), th.begin(), th.end());

    auto f = [&](double energy) {
        std::vector<double> d(eps.size());
        for (std::size_t k = 0; k < eps.size(); ++k) d[k] = energy - eps[k];
        const Eigen::MatrixXcd t = t_via_psi(d, v, mass);
        const cplx el = reversed ? t(static_cast<Eigen::Index>(j_in), static_cast<Eigen::Index>(j_out))
                                 : t(static_cast<Eigen::Index>(j_out), static_cast<Eigen::Index>(j_in));
        return 2 * mass * std::exp(-beta * d[j_in]) * std::norm(el) / std::sqrt(d[j_in] * d[j_out]);
    };

    auto sum = [&](int n) {
        double total = 0.0;
        for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
            const double x0 = edges[s], len = edges[s + 1] - edges[s];
            const double h = (std::numbers::pi / 2) / n;
            for (int i = 0; i < n; ++i) {
                const double t = (i + 0.5) * h;
                const double sn = std::sin(t), cs = std::cos(t);
                total += h * f(x0 + len * sn * sn) * 2 * len * sn * cs;
            }
        }
        const double t0 = edges.back();
        const double umax = std::sqrt(e_low + cut / beta - t0);
        const double h = umax / n;
        for (int i = 0; i < n; ++i) {
            const double u = (i + 0.5) * h;
            total += h * f(t0 + u * u) * 2 * u;
        }
        return total;
    };

    int n = 32;
    double prev = sum(n);
    for (int it = 0; it < 14; ++it) {
        n *= 2;
        const double cur = sum(n);
        if (std::abs(cur - prev) <= rel * std::abs(cur)) return cur;
        prev = cur;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Second-order term of T_{j'j} - conj(T_{jj'}): (-i / (pi hbar)) sum_k v_{j'k} Re(b_k) v_{kj}.
inline cplx hermiticity_born(const std::vector<double>& offsets, const Eigen::MatrixXcd& v, std::size_t jo,
                             std::size_t ji, double mass = 1.0, double hbar = 1.0) {
    cplx s = 0;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        if (offsets[k] <= 0) continue;
        const double re_b = std::sqrt(2 * mass / offsets[k]) / (2 * hbar);
        s += v(static_cast<Eigen::Index>(jo), static_cast<Eigen::Index>(k)) * re_b *
             v(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(ji));
    }
    return cplx(0, -1.0 / (std::numbers::pi * hbar)) * s;
}

/// Three-level b factors in (-, 0, +) order.
inline std::array<cplx, 3> b3(const std::array<double, 3>& offsets, double mass = 1.0, double hbar = 1.0) {
    std::array<cplx, 3> b{};
    for (int k = 0; k < 3; ++k) {
        const double mag = std::sqrt(2 * mass / std::abs(offsets[k])) / (2 * hbar);
        b[k] = offsets[k] > 0 ? cplx(mag, 0) : cplx(0, -mag);
    }
    return b;
}

/// 1/N for the triangle coupling written in site strengths.
inline cplx inverse_norm_sites(const std::array<cplx, 3>& b, const std::array<double, 3>& s) {
    const cplx i(0, 1);
    const double sum = s[0] + s[1] + s[2];
    const double pairs = s[0] * s[1] + s[1] * s[2] + s[0] * s[2];
    return i - (b[0] + b[1] + b[2]) * sum / 3.0 - (i / 3.0) * (b[0] * b[2] + b[1] * (b[0] + b[2])) * pairs +
           b[1] * b[0] * b[2] * s[0] * s[1] * s[2];
}

/// T_{+0} - T_{0+} for the triangle model with incoming channel 0.
inline cplx symmetry_defect_sites(const std::array<double, 3>& offsets, const std::array<double, 3>& s,
                                  double hbar = 1.0) {
    const auto b = b3(offsets);
    const cplx n = 1.0 / inverse_norm_sites(b, s);
    return n * (s[1] - s[2]) * (1.0 + cplx(0, 1) * b[0] * s[0]) / (2 * std::sqrt(3.0) * std::numbers::pi * hbar);
}

/// |T_{+0}|^2 - |T_{0+}|^2 for the triangle model.
inline double time_reversal_defect_sites(const std::array<double, 3>& offsets, const std::array<double, 3>& s,
                                         double hbar = 1.0) {
    const auto b = b3(offsets);
    const cplx n = 1.0 / inverse_norm_sites(b, s);
    const double pi = std::numbers::pi;
    return std::norm(n) * b[0].real() * (s[0] - s[1]) * (s[1] - s[2]) * (s[0] - s[2]) /
           (6 * std::sqrt(3.0) * pi * pi * hbar * hbar);
}

/// exp(W t) p0 from the eigendecomposition of W.
inline Eigen::VectorXd propagate_eigen(const Eigen::MatrixXd& w, const Eigen::VectorXd& p0, double t) {
    const Eigen::EigenSolver<Eigen::MatrixXd> es(w);
    const Eigen::MatrixXcd vecs = es.eigenvectors();
    const Eigen::VectorXcd vals = es.eigenvalues();
    Eigen::VectorXcd ex(vals.size());
    for (Eigen::Index k = 0; k < vals.size(); ++k) ex(k) = std::exp(vals(k) * t);
    const Eigen::VectorXcd c = vecs.fullPivLu().solve(p0.cast<cplx>());
    return (vecs * ex.asDiagonal() * c).real();
}

/// dp/dt = W p by adaptive Dormand-Prince 5(4).
inline Eigen::VectorXd propagate_ode(const Eigen::MatrixXd& w, const Eigen::VectorXd& p0, double t,
                                     double tol = 1e-12) {
    using state = std::vector<double>;
    namespace ode = boost::numeric::odeint;
    state x(p0.data(), p0.data() + p0.size());
    auto rhs = [&](const state& y, state& dy, double) {
        const Eigen::Map<const Eigen::VectorXd> ym(y.data(), static_cast<Eigen::Index>(y.size()));
        Eigen::Map<Eigen::VectorXd> dym(dy.data(), static_cast<Eigen::Index>(dy.size()));
        dym = w * ym;
    };
    if (t > 0)
        ode::integrate_adaptive(ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<state>()), rhs, x, 0.0, t,
                                t / 1000);
    return Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

/// Haar-like random unitary from the QR decomposition of a complex Gaussian matrix.
inline Eigen::MatrixXcd random_unitary(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd z(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) z(r, c) = cplx(g(rng), g(rng));
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    return qr.householderQ();
}

} // namespace oracle
