#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "ellipmoment/common.hpp"

namespace ellipmoment {

namespace detail {

// Gauss-Kronrod 7-15 pair on [-1,1] (QUADPACK dqk15 constants).
inline constexpr std::array<double, 8> gk15_xgk = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk15_wgk = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk15_wg = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct GKResult {
    double value;
    double err;
};

template <class F>
GKResult gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fc = f(c);
    double resg = fc * gk15_wg[3];
    double resk = fc * gk15_wgk[7];
    for (int j = 0; j < 7; ++j) {
        double x = h * gk15_xgk[j];
        double f1 = f(c - x);
        double f2 = f(c + x);
        resk += gk15_wgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += gk15_wg[j / 2] * (f1 + f2);
    }
    double value = resk * h;
    double err = std::abs((resk - resg) * h);
    return {value, err};
}

template <class F>
void gk15_adaptive(const F& f, double a, double b, double abs_tol, int depth,
                   KahanSum& acc, double& err_acc) {
    GKResult r = gk15(f, a, b);
    // second clause: the panel already sits at machine-relative accuracy;
    // subdividing further cannot help even when abs_tol is far smaller
    // (the probe pass can underestimate the scale badly for integrands
    // concentrated near an endpoint)
    if (r.err <= abs_tol || r.err <= 5.0e-15 * std::abs(r.value) ||
        depth >= 48 ||
        b - a < 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(a) + 1.0)) {
        acc.add(r.value);
        err_acc += r.err;
        return;
    }
    double m = 0.5 * (a + b);
    gk15_adaptive(f, a, m, 0.5 * abs_tol, depth + 1, acc, err_acc);
    gk15_adaptive(f, m, b, 0.5 * abs_tol, depth + 1, acc, err_acc);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integral of f over the finite interval [a, b].
/// Throws convergence_error if the estimated error exceeds the tolerance.
template <class F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-12) {
    // First pass at a loose absolute scale to learn the magnitude.
    detail::GKResult probe = detail::gk15(f, a, b);
    double scale = std::max(std::abs(probe.value), 1e-300);
    KahanSum acc;
    double err = 0.0;
    detail::gk15_adaptive(f, a, b, 0.25 * rel_tol * scale, 0, acc, err);
    double value = acc.value();
    double bound = rel_tol * std::max(std::abs(value), 1e-300);
    if (err > 16.0 * bound)
        throw convergence_error("integrate: adaptive quadrature did not converge");
    return value;
}

/// Integral over [0, infinity) of a decaying integrand: split at `split`,
/// map the tail through t = split/u so the head of u-space carries the tail.
template <class F>
double integrate_to_infinity(const F& f, double rel_tol = 1e-11,
                             double split = 1.0) {
    double head = integrate(f, 0.0, split, rel_tol);
    // exponential tail map: t = split * e^w. Reaches t ~ split * e^200
    // before truncating, so even barely-integrable power tails (t^{-1-eps})
    // leave mass of order e^{-200 eps}.
    auto tail = [&](double w) {
        double t = split * std::exp(w);
        double v = f(t) * t;
        return std::isfinite(v) ? v : 0.0;
    };
    double tl = integrate(tail, 0.0, 200.0, rel_tol);
    return head + tl;
}

/// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1],
/// by Newton iteration on the Legendre recurrence.
inline void gauss_legendre(int m, Vector& nodes, Vector& weights) {
    nodes.assign(m, 0.0);
    weights.assign(m, 0.0);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
}

}  // namespace ellipmoment
