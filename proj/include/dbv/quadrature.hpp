#pragma once

// Globally adaptive Gauss-Kronrod (10/21) quadrature over a set of segments.
//
// Each segment carries a piece index so a caller can integrate one physical
// integral split into several independently substituted pieces while the
// error budget is shared across all of them. Refinement order is fully
// determined by the input, so repeated runs give identical results.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace dbv {

struct QuadratureOptions {
    double rel_tol = 1e-9;
    double abs_tol = 0.0;
    std::size_t max_intervals = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
    std::size_t intervals = 0;
    bool converged = false;
};

struct Segment {
    std::size_t piece = 0;
    double lower = 0.0;
    double upper = 0.0;
};

namespace detail {

// QUADPACK qk21 abscissae and weights.
inline constexpr std::array<double, 11> kronrod21_nodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kronrod21_weights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Weights of the embedded 10-point Gauss rule, on nodes 1, 3, 5, 7, 9.
inline constexpr std::array<double, 5> gauss10_weights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct RuleResult {
    double value;
    double error;
};

template <class F>
RuleResult gauss_kronrod21(F& f, std::size_t piece, double a, double b) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double tiny = std::numeric_limits<double>::min();

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double abs_half = std::abs(half);

    std::array<double, 10> lo{};
    std::array<double, 10> hi{};
    const double fc = f(piece, center);
    double kronrod = kronrod21_weights[10] * fc;
    double gauss = 0.0;
    double abs_sum = std::abs(kronrod);

    for (std::size_t j = 0; j < 10; ++j) {
        const double dx = half * kronrod21_nodes[j];
        lo[j] = f(piece, center - dx);
        hi[j] = f(piece, center + dx);
        const double pair = lo[j] + hi[j];
        kronrod += kronrod21_weights[j] * pair;
        abs_sum += kronrod21_weights[j] * (std::abs(lo[j]) + std::abs(hi[j]));
        if (j % 2 == 1) gauss += gauss10_weights[j / 2] * pair;
    }

    const double mean = 0.5 * kronrod;
    double asc = kronrod21_weights[10] * std::abs(fc - mean);
    for (std::size_t j = 0; j < 10; ++j)
        asc += kronrod21_weights[j] * (std::abs(lo[j] - mean) + std::abs(hi[j] - mean));

    const double value = kronrod * half;
    const double res_abs = abs_sum * abs_half;
    const double res_asc = asc * abs_half;
    double err = std::abs((kronrod - gauss) * half);
    if (res_asc != 0.0 && err != 0.0)
        err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
    if (res_abs > tiny / (50.0 * eps)) err = std::max(50.0 * eps * res_abs, err);
    return {value, err};
}

struct Interval {
    std::size_t piece;
    double lower;
    double upper;
    double value;
    double error;
    std::size_t order; // creation index, breaks ties deterministically
};

struct LargerError {
    bool operator()(const Interval& x, const Interval& y) const {
        if (x.error != y.error) return x.error < y.error;
        return x.order > y.order;
    }
};

} // namespace detail

/// Integrates f(piece, x) over all segments to a shared tolerance
/// max(abs_tol, rel_tol * |total|).
template <class F>
QuadratureResult integrate_segments(F&& f, std::span<const Segment> segments,
                                    const QuadratureOptions& opts = {}) {
    using detail::Interval;
    constexpr double eps = std::numeric_limits<double>::epsilon();

    QuadratureResult out;
    std::priority_queue<Interval, std::vector<Interval>, detail::LargerError> active;
    std::vector<Interval> settled; // too narrow to split further
    std::size_t order = 0;
    double total = 0.0;
    double total_err = 0.0;

    for (const Segment& s : segments) {
        if (!(s.upper > s.lower)) continue;
        const auto r = detail::gauss_kronrod21(f, s.piece, s.lower, s.upper);
        out.evaluations += 21;
        active.push({s.piece, s.lower, s.upper, r.value, r.error, order++});
        total += r.value;
        total_err += r.error;
    }

    auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };

    while (!active.empty() && total_err > target() &&
           active.size() + settled.size() < opts.max_intervals) {
        Interval worst = active.top();
        active.pop();
        const double mid = 0.5 * (worst.lower + worst.upper);
        const double width = worst.upper - worst.lower;
        if (width <= 100.0 * eps * std::max(std::abs(mid), 1e-300)) {
            settled.push_back(worst);
            continue;
        }
        const auto left = detail::gauss_kronrod21(f, worst.piece, worst.lower, mid);
        const auto right = detail::gauss_kronrod21(f, worst.piece, mid, worst.upper);
        out.evaluations += 42;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        active.push({worst.piece, worst.lower, mid, left.value, left.error, order++});
        active.push({worst.piece, mid, worst.upper, right.value, right.error, order++});
    }

    // Re-sum in a fixed order so the reported total does not carry update drift.
    std::vector<Interval> all(std::move(settled));
    while (!active.empty()) {
        all.push_back(active.top());
        active.pop();
    }
    std::sort(all.begin(), all.end(), [](const Interval& x, const Interval& y) {
        if (x.piece != y.piece) return x.piece < y.piece;
        return x.lower < y.lower;
    });
    out.value = 0.0;
    out.error = 0.0;
    for (const Interval& iv : all) {
        out.value += iv.value;
        out.error += iv.error;
    }
    out.intervals = all.size();
    out.converged = out.error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(out.value));
    return out;
}

/// Single-interval convenience wrapper around integrate_segments.
template <class F>
QuadratureResult integrate(F&& f, double lower, double upper, const QuadratureOptions& opts = {}) {
    const Segment seg{0, lower, upper};
    auto g = [&f](std::size_t, double x) { return f(x); };
    return integrate_segments(g, std::span<const Segment>(&seg, 1), opts);
}

} // namespace dbv
