#pragma once

// Test-only oracles, independent of the library's closed-form paths:
// adaptive quadrature, Monte-Carlo energy with explicit draws, and
// small-case enumeration helpers.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "ebrm/rng.hpp"

namespace oracles {

inline double norm_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                      double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

} // namespace detail

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = detail::simpson(f, a, b, fa, fm, fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60);
}

/// E|X| for X ~ N(mu, sigma^2) by quadrature over [mu - 12 sigma, mu + 12 sigma],
/// split at zero where the integrand kinks.
inline double mean_abs_normal_quadrature(double mu, double sigma) {
    auto f = [&](double x) { return std::abs(x) * norm_pdf(x, mu, sigma); };
    const double lo = mu - 12.0 * sigma;
    const double hi = mu + 12.0 * sigma;
    if (lo < 0.0 && hi > 0.0) return integrate(f, lo, 0.0, 5e-13) + integrate(f, 0.0, hi, 5e-13);
    return integrate(f, lo, hi, 1e-12);
}

struct McResult {
    double estimate;
    double std_error;
};

/// Monte-Carlo energy distance between two 1-D samplers with n draws per
/// term; plain sample-mean and standard error over the per-draw terms.
inline McResult mc_energy_1d(const std::function<double(ebrm::rng::Stream&)>& draw_a,
                             const std::function<double(ebrm::rng::Stream&)>& draw_b, std::size_t n,
                             std::uint64_t seed) {
    ebrm::rng::Stream root(seed);
    auto sa = root.child(11);
    auto sa2 = root.child(12);
    auto sb = root.child(13);
    auto sb2 = root.child(14);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = draw_a(sa);
        const double x2 = draw_a(sa2);
        const double y = draw_b(sb);
        const double y2 = draw_b(sb2);
        const double t = 2.0 * std::abs(x - y) - std::abs(x - x2) - std::abs(y - y2);
        sum += t;
        sum_sq += t * t;
    }
    const double mean = sum / static_cast<double>(n);
    const double sample_var = (sum_sq / static_cast<double>(n) - mean * mean) *
                              (static_cast<double>(n) / static_cast<double>(n - 1));
    return {mean, std::sqrt(std::max(0.0, sample_var) / static_cast<double>(n))};
}

} // namespace oracles
