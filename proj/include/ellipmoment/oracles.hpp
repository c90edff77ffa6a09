#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ellipmoment/common.hpp"
#include "ellipmoment/expectation.hpp"
#include "ellipmoment/linalg.hpp"
#include "ellipmoment/moments.hpp"

namespace ellipmoment {

namespace detail {

/// Sum over pair partitions of the index multiset (Wick's theorem), central
/// case. `idx` lists one entry per factor.
inline double wick_sum(const SymMatrix& sigma, std::vector<int>& idx) {
    if (idx.empty()) return 1.0;
    if (idx.size() % 2 != 0) return 0.0;
    // pair the first element with each other element in turn
    int a = idx.front();
    double total = 0.0;
    for (std::size_t j = 1; j < idx.size(); ++j) {
        int b = idx[j];
        std::vector<int> rest;
        rest.reserve(idx.size() - 2);
        for (std::size_t k = 1; k < idx.size(); ++k)
            if (k != j) rest.push_back(idx[k]);
        total += sigma(a, b) * wick_sum(sigma, rest);
    }
    return total;
}

inline double binomial(int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
}

}  // namespace detail

/// Gaussian product moment E[prod X_i^{p_i}] by pair partitions, with the
/// mean handled by binomial expansion of (mu_i + Z_i)^{p_i}. Combinatorial
/// and fully independent of the degree recursion. Total degree capped at 12.
inline double isserlis_moment(const Vector& mu, const SymMatrix& sigma,
                              const MonomialExponents& e) {
    e.validate();
    if (e.p.size() != mu.size() || sigma.dim() != mu.size())
        throw validity_error("isserlis_moment: dimension mismatch");
    if (e.total_degree() > 12)
        throw validity_error("isserlis_moment: total degree capped at 12");

    const std::size_t n = mu.size();
    // loop over how many factors of each coordinate come from Z rather than mu
    std::vector<int> k(n, 0);
    double total = 0.0;
    KahanSum acc;
    for (;;) {
        double coef = 1.0;
        std::vector<int> idx;
        for (std::size_t i = 0; i < n; ++i) {
            coef *= detail::binomial(e.p[i], k[i]) *
                    std::pow(mu[i], e.p[i] - k[i]);
            for (int c = 0; c < k[i]; ++c) idx.push_back(static_cast<int>(i));
        }
        if (coef != 0.0) acc.add(coef * detail::wick_sum(sigma, idx));
        std::size_t j = 0;
        while (j < n && ++k[j] > e.p[j]) k[j++] = 0;
        if (j == n) break;
    }
    total = acc.value();
    return total;
}

/// Report from a derivative spot check against central differences.
struct FiniteDiffReport {
    double max_grad_dev = 0.0;
    double max_hess_dev = 0.0;
    bool pass = true;
};

/// Compare supplied derivatives of `f` with central differences at the given
/// points.
inline FiniteDiffReport finite_diff_check(const SmoothFunction& f,
                                          const std::vector<Vector>& points,
                                          double tol = 1e-4) {
    auto dev = detail::derivative_deviation(f, points);
    FiniteDiffReport rep;
    rep.max_grad_dev = dev.grad_dev;
    rep.max_hess_dev = dev.hess_dev;
    rep.pass = dev.grad_dev <= tol && dev.hess_dev <= tol;
    return rep;
}

/// Same check at 10 seeded probe points.
inline FiniteDiffReport finite_diff_check(const SmoothFunction& f,
                                          std::size_t dim,
                                          std::uint64_t seed = 7771,
                                          double tol = 1e-4) {
    return finite_diff_check(f, detail::probe_points(dim, seed), tol);
}

/// Direct Monte Carlo estimate of E[h(X)]; the reference the identities are
/// checked against.
inline McResult mc_oracle(const EllipticalDistribution& d,
                          const std::function<double(const Vector&)>& h,
                          std::size_t samples, std::uint64_t seed) {
    return mc_expectation(d, h, samples, seed);
}

/// Deterministic tensor-quadrature estimate of E[h(X)] for n <= 3.
inline double quad_oracle(const EllipticalDistribution& d,
                          const std::function<double(const Vector&)>& h,
                          int nodes_per_panel = 16) {
    return quad_expectation(d, h, nodes_per_panel);
}

}  // namespace ellipmoment
