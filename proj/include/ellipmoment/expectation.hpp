#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ellipmoment/common.hpp"
#include "ellipmoment/elliptical.hpp"
#include "ellipmoment/quadrature.hpp"

namespace ellipmoment {

class non_finite_value : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct McResult {
    double mean = 0.0;
    double stderr_of_mean = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

/// Plain Monte Carlo mean of h(X) with the distribution's own sampler.
inline McResult mc_expectation(const EllipticalDistribution& d,
                               const std::function<double(const Vector&)>& h,
                               std::size_t samples, std::uint64_t seed,
                               const PartitionPlan& plan = {}) {
    if (samples < 2) throw validity_error("mc_expectation: samples >= 2");
    MeanVar mv;
    sample_stream(
        d, seed, samples,
        [&](const Vector& x) {
            double v = h(x);
            if (!std::isfinite(v))
                throw non_finite_value("mc_expectation: h produced NaN/inf");
            mv.add(v);
        },
        plan);
    return {mv.mean(), mv.stderr_of_mean(), samples, seed};
}

namespace detail {

inline Vector quad_breakpoints(double limit) {
    Vector b{0.0};
    double x = 0.5;
    while (x < limit) {
        b.push_back(x);
        x *= 2.0;
    }
    b.push_back(limit);
    return b;
}

}  // namespace detail

/// Tensor-product Gauss-Legendre expectation E[h(X)] for n <= 3 after the
/// whitening substitution x = mu + A y. The axis is covered by geometric
/// panels out to the radius containing all but 1e-10 of the radial mass;
/// `nodes_per_panel` Gauss-Legendre nodes are used on each panel.
inline double quad_expectation(const EllipticalDistribution& d,
                               const std::function<double(const Vector&)>& h,
                               int nodes_per_panel = 16) {
    const std::size_t n = d.dim();
    if (n > 3)
        throw validity_error("quad_expectation: supported for n <= 3 only");
    if (!d.full_rank())
        throw singular_sigma("quad_expectation: requires full-rank Sigma");

    // box half-width: radius with tail mass below 3e-14. The low threshold
    // leaves room for polynomially weighted integrands over heavy-tailed
    // generators, whose truncation error exceeds the plain tail mass.
    const double nn = static_cast<double>(n);
    const double pref = std::pow(2.0, 0.5 * nn - 1.0);
    double total = pref * radial_moment_integral(d.density_g, n);
    double L = 1.0;
    while (L < 1e12 &&
           pref * radial_tail_integral(d.density_g, n, 0.5 * L * L) / total >
               3e-14)
        L *= 2.0;

    Vector bp = detail::quad_breakpoints(L);
    Vector gl_x, gl_w;
    gauss_legendre(nodes_per_panel, gl_x, gl_w);

    // 1-D composite rule, mirrored about zero
    Vector axis_x, axis_w;
    for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
        double a = bp[s], b = bp[s + 1];
        double c = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int k = 0; k < nodes_per_panel; ++k) {
            double x = c + half * gl_x[k];
            double w = half * gl_w[k];
            axis_x.push_back(x);
            axis_w.push_back(w);
            axis_x.push_back(-x);
            axis_w.push_back(w);
        }
    }

    const std::size_t m = axis_x.size();
    KahanSum acc;
    Vector y(n), x(n);
    std::vector<std::size_t> idx(n, 0);
    const double g0 = d.density_g(0.0);
    for (;;) {
        double w = 1.0;
        double r2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            y[k] = axis_x[idx[k]];
            w *= axis_w[idx[k]];
            r2 += y[k] * y[k];
        }
        double dens = d.c * d.density_g(0.5 * r2);
        if (dens > 1e-30 * std::max(g0, 1.0)) {
            x = d.factor.apply(y);
            for (std::size_t k = 0; k < n; ++k) x[k] += d.mu[k];
            acc.add(w * dens * h(x));
        }
        std::size_t k = 0;
        while (k < n && ++idx[k] == m) idx[k++] = 0;
        if (k == n) break;
    }
    return acc.value();
}

}  // namespace ellipmoment
