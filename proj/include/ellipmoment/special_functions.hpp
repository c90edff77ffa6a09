#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>

#include "ellipmoment/common.hpp"
#include "ellipmoment/quadrature.hpp"

namespace ellipmoment {

/// Truncation control for series evaluation.
struct SeriesControl {
    double rel_tol = 1e-12;
    std::int64_t max_terms = 1000000;
};

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw domain_error("log_gamma: requires x > 0");
    return std::lgamma(x);
}

/// Euler Beta function B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b), a, b > 0.
inline double beta_fn(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw domain_error("beta_fn: requires a, b > 0");
    return std::exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b));
}

namespace detail {

/// Cohen-Villegas-Zagier acceleration of sum_{k>=0} (-1)^k a(k).
/// Converges geometrically (~5.83^-n) and also sums the Abel-regularized
/// value of eta-type series whose terms grow slower than geometrically.
template <class A>
double cvz_alternating(const A& a, int n = 48) {
    double d = std::pow(3.0 + std::sqrt(8.0), n);
    d = 0.5 * (d + 1.0 / d);
    double b = -1.0, c = -d;
    KahanSum s;
    for (int k = 0; k < n; ++k) {
        c = b - c;
        s.add(c * a(k));
        b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1.0));
    }
    return s.value() / d;
}

/// Dirichlet eta(s) = sum (-1)^{k-1} k^-s, valid here for s > -1.
inline double dirichlet_eta(double s) {
    return cvz_alternating([s](int k) { return std::pow(k + 1.0, -s); });
}

// Bernoulli numbers B_2, B_4, ..., B_24.
inline constexpr std::array<double, 12> bernoulli2n = {
    1.0 / 6.0,      -1.0 / 30.0,     1.0 / 42.0,      -1.0 / 30.0,
    5.0 / 66.0,     -691.0 / 2730.0, 7.0 / 6.0,       -3617.0 / 510.0,
    43867.0 / 798.0, -174611.0 / 330.0, 854513.0 / 138.0, -236364091.0 / 2730.0};

/// Euler-Maclaurin evaluation of zeta(s), s > 1.
inline double zeta_euler_maclaurin(double s) {
    const int N = 24;
    KahanSum acc;
    for (int k = 1; k < N; ++k) acc.add(std::pow(k, -s));
    double ns = std::pow(N, -s);
    acc.add(0.5 * ns);
    acc.add(ns * N / (s - 1.0));
    double factor = ns / N;  // N^{-s-2j+1}, starting at j = 1
    double poch = s;         // s(s+1)...(s+2j-2)
    double fact = 2.0;       // (2j)!
    for (std::size_t j = 0; j < bernoulli2n.size(); ++j) {
        if (j > 0) {
            poch *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
            fact *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
            factor /= static_cast<double>(N) * N;
        }
        double term = bernoulli2n[j] / fact * poch * factor;
        acc.add(term);
        if (std::abs(term) < 1e-18 * std::abs(acc.value())) break;
    }
    return acc.value();
}

}  // namespace detail

/// Riemann zeta(s) for s > 0, s != 1. Direct Euler-Maclaurin summation for
/// s > 1; the alternating (eta) form divided by (1 - 2^{1-s}) for 0 < s < 1.
inline double riemann_zeta(double s) {
    if (!(s > 0.0)) throw domain_error("riemann_zeta: requires s > 0");
    if (s == 1.0) throw domain_error("riemann_zeta: pole at s = 1");
    if (s > 1.0) return detail::zeta_euler_maclaurin(s);
    return detail::dirichlet_eta(s) / (1.0 - std::pow(2.0, 1.0 - s));
}

/// Generalized Hurwitz-Lerch zeta
///   Psi*_mu(z, s, a) = (1/Gamma(mu)) sum_{k>=0} [Gamma(mu+k)/k!] z^k/(k+a)^s.
/// Supported for a > 0, s > 0 and z in [-1, 1). At z = -1 the alternating
/// series is summed with the remainder bound when its terms decrease, and by
/// CVZ acceleration otherwise (mu = 2 with s <= 1, where the plain series
/// only converges in the Abel sense; the value agrees with the integral
/// representation).
inline double hurwitz_lerch_psi(double mu, double z, double s, double a,
                                const SeriesControl& ctrl = {}) {
    if (!(mu > 0.0) || !(a > 0.0) || !(s > 0.0) || !(z >= -1.0) || !(z < 1.0))
        throw domain_error("hurwitz_lerch_psi: parameter out of domain");
    if (!(ctrl.rel_tol > 0.0) || ctrl.max_terms < 1)
        throw domain_error("hurwitz_lerch_psi: invalid SeriesControl");

    // Gamma(mu+k)/(Gamma(mu) k!): 1 for mu = 1, k+1 for mu = 2.
    auto coeff = [mu](std::int64_t k) -> double {
        if (mu == 1.0) return 1.0;
        if (mu == 2.0) return static_cast<double>(k + 1);
        return std::exp(log_gamma(mu + k) - log_gamma(mu) - log_gamma(k + 1.0));
    };
    auto abs_term = [&](std::int64_t k) {
        return coeff(k) * std::pow(k + a, -s);
    };

    if (z == 0.0) return std::pow(a, -s);

    if (z == -1.0) {
        // CVZ acceleration of the alternating series; convergence is checked
        // by comparing two term-count levels.
        int n = static_cast<int>(std::min<std::int64_t>(64, ctrl.max_terms));
        auto term = [&](int k) { return abs_term(k); };
        double coarse = detail::cvz_alternating(term, std::max(2, n / 2));
        double fine = detail::cvz_alternating(term, n);
        if (std::abs(fine - coarse) >
            ctrl.rel_tol * std::max(std::abs(fine), 1e-300))
            throw convergence_error(
                "hurwitz_lerch_psi: alternating series did not converge "
                "within max_terms");
        return fine;
    }

    KahanSum acc;
    double zk = 1.0;
    for (std::int64_t k = 0; k < ctrl.max_terms; ++k) {
        double t = coeff(k) * zk * std::pow(k + a, -s);
        acc.add(t);
        zk *= z;
        double bound = abs_term(k + 1) * std::abs(zk) / (1.0 - std::abs(z));
        if (bound <= ctrl.rel_tol * std::max(std::abs(acc.value()), 1e-300))
            return acc.value();
    }
    throw convergence_error("hurwitz_lerch_psi: max_terms reached");
}

/// Integral representation of Psi*_mu(z, s, a):
///   (1/Gamma(s)) int_0^inf t^{s-1} e^{-a t} / (1 - z e^{-t})^mu dt.
/// Used as an independent cross-check of the series path.
inline double hurwitz_lerch_psi_integral(double mu, double z, double s, double a) {
    if (!(mu > 0.0) || !(a > 0.0) || !(s > 0.0) || !(z >= -1.0) || !(z < 1.0))
        throw domain_error("hurwitz_lerch_psi_integral: parameter out of domain");
    // substitute t = x^2 to absorb the t^{s-1} endpoint singularity
    auto head = [&](double x) {
        double t = x * x;
        return 2.0 * std::pow(x, 2.0 * s - 1.0) * std::exp(-a * t) /
               std::pow(1.0 - z * std::exp(-t), mu);
    };
    double h = integrate(head, 0.0, 1.0, 1e-12);
    auto tail = [&](double t) {
        return std::pow(t, s - 1.0) * std::exp(-a * t) /
               std::pow(1.0 - z * std::exp(-t), mu);
    };
    auto mapped = [&](double u) { return tail(1.0 / u) / (u * u); };
    double tl = integrate(mapped, 1e-6, 1.0, 1e-12);
    return (h + tl) / std::exp(log_gamma(s));
}

}  // namespace ellipmoment
