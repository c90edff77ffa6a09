#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ellipmoment/common.hpp"
#include "ellipmoment/elliptical.hpp"
#include "ellipmoment/expectation.hpp"
#include "ellipmoment/linalg.hpp"

namespace ellipmoment {

/// User-supplied scalar function with optional analytic derivatives; central
/// finite differences fill in whatever is missing.
struct SmoothFunction {
    std::function<double(const Vector&)> eval;
    std::function<Vector(const Vector&)> grad;
    std::function<SymMatrix(const Vector&)> hess;
    double fd_scale = 1.0;
    /// The regularity limits required by the moment identities (vanishing of
    /// x1 f against the cumulative generators) are the caller's obligation;
    /// polynomial-times-bounded f satisfies them for every built-in family
    /// with sufficient moments.
    bool regularity_asserted = true;

    Vector gradient(const Vector& x) const {
        if (grad) return grad(x);
        const double eps3 = std::cbrt(2.2204460492503131e-16);
        Vector g(x.size());
        Vector xp = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double h = fd_scale * (1.0 + std::abs(x[i])) * eps3;
            double xi = x[i];
            xp[i] = xi + h;
            double fp = eval(xp);
            xp[i] = xi - h;
            double fm = eval(xp);
            xp[i] = xi;
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    }

    SymMatrix hessian(const Vector& x) const {
        if (hess) return hess(x);
        const std::size_t n = x.size();
        const double eps4 = std::pow(2.2204460492503131e-16, 0.25);
        SymMatrix H(n);
        Vector xp = x;
        double f0 = eval(x);
        for (std::size_t i = 0; i < n; ++i) {
            double hi = fd_scale * (1.0 + std::abs(x[i])) * eps4;
            double xi = x[i];
            xp[i] = xi + hi;
            double fp = eval(xp);
            xp[i] = xi - hi;
            double fm = eval(xp);
            xp[i] = xi;
            H.set(i, i, (fp - 2.0 * f0 + fm) / (hi * hi));
            for (std::size_t j = 0; j < i; ++j) {
                double hj = fd_scale * (1.0 + std::abs(x[j])) * eps4;
                double xj = x[j];
                xp[i] = xi + hi;
                xp[j] = xj + hj;
                double fpp = eval(xp);
                xp[j] = xj - hj;
                double fpm = eval(xp);
                xp[i] = xi - hi;
                double fmm = eval(xp);
                xp[j] = xj + hj;
                double fmp = eval(xp);
                xp[i] = xi;
                xp[j] = xj;
                H.set(i, j, (fpp - fpm - fmp + fmm) / (4.0 * hi * hj));
            }
        }
        return H;
    }
};

namespace detail {

/// Max relative deviation of supplied derivatives from central differences.
struct DerivDeviation {
    double grad_dev = 0.0;
    double hess_dev = 0.0;
};

inline DerivDeviation derivative_deviation(const SmoothFunction& f,
                                           const std::vector<Vector>& points) {
    DerivDeviation out;
    SmoothFunction fd_only{f.eval, nullptr, nullptr, f.fd_scale};
    for (const Vector& x : points) {
        if (f.grad) {
            Vector a = f.grad(x);
            Vector b = fd_only.gradient(x);
            for (std::size_t i = 0; i < x.size(); ++i) {
                double rel = std::abs(a[i] - b[i]) /
                             std::max(1e-8, std::abs(b[i]));
                out.grad_dev = std::max(out.grad_dev, rel);
            }
        }
        if (f.hess) {
            SymMatrix a = f.hess(x);
            SymMatrix b = fd_only.hessian(x);
            for (std::size_t i = 0; i < x.size(); ++i)
                for (std::size_t j = 0; j <= i; ++j) {
                    double rel = std::abs(a(i, j) - b(i, j)) /
                                 std::max(1e-4, std::abs(b(i, j)));
                    out.hess_dev = std::max(out.hess_dev, rel);
                }
        }
    }
    return out;
}

inline std::vector<Vector> probe_points(std::size_t n, std::uint64_t seed,
                                        std::size_t count = 10) {
    std::vector<Vector> pts;
    SplitRng rng(seed, 0);
    for (std::size_t k = 0; k < count; ++k) {
        Vector x(n);
        for (auto& v : x) v = rng.normal();
        pts.push_back(std::move(x));
    }
    return pts;
}

}  // namespace detail

/// Registration-time validation: supplied derivatives must agree with central
/// differences at 10 seeded probe points to 1e-4.
inline SmoothFunction make_checked(SmoothFunction f, std::size_t dim,
                                   std::uint64_t seed = 7771) {
    auto dev = detail::derivative_deviation(f, detail::probe_points(dim, seed));
    if (dev.grad_dev > 1e-4 || dev.hess_dev > 1e-4)
        throw validity_error(
            "make_checked: supplied derivatives disagree with finite "
            "differences beyond 1e-4");
    return f;
}

/// Nonnegative integer exponent vector for product moments.
struct MonomialExponents {
    std::vector<int> p;

    int total_degree() const {
        int s = 0;
        for (int v : p) s += v;
        return s;
    }
    void validate() const {
        for (int v : p)
            if (v < 0)
                throw validity_error("MonomialExponents: entries must be >= 0");
    }
};

/// Evaluation budget for the inner expectations.
struct Budget {
    enum class Method { Mc, Quadrature };
    Method method = Method::Mc;
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    int nodes_per_dim = 16;  // Gauss-Legendre order per panel (quadrature)
};

/// Universal result record.
struct MomentEstimate {
    double value = 0.0;
    double std_error = 0.0;  // 0 for deterministic paths
    std::string method;      // thm1 | thm2 | mc-direct | quadrature | isserlis | recursion
    std::vector<std::pair<std::string, double>> breakdown;
};

/// Inner expectations of Theorem 1 / Theorem 2, either estimated or injected.
struct InnerExpectations {
    double f_base = 0.0;                // E[f(X)]
    double f_star = 0.0;                // E[f(X*)]
    Vector grad_star;                   // E[grad f(X*)]
    std::vector<double> hess_dstar;     // row-major E[hess f(X**)]
};

/// Direct-method combination (Theorem 1): coefficients b*, b**.
inline double thm1_combine(const Vector& mu, const SymMatrix& sigma,
                           double b_star, double b_dstar,
                           const InnerExpectations& in) {
    const std::size_t n = mu.size();
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            quad += sigma(i, 0) * sigma(j, 0) * in.hess_dstar[i * n + j];
    double lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) lin += sigma(i, 0) * in.grad_star[i];
    return sigma(0, 0) * b_star * in.f_star + b_dstar * quad +
           2.0 * mu[0] * b_star * lin + mu[0] * mu[0] * in.f_base;
}

/// Stein-route combination (Theorem 2 / its characteristic-generator form):
/// slopes are -phi'(0) and -phi*'(0).
inline double thm2_combine(const Vector& mu, const SymMatrix& sigma,
                           double phi_slope, double phi_star_slope,
                           const InnerExpectations& in) {
    const std::size_t n = mu.size();
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            quad += sigma(0, i) * sigma(0, j) * in.hess_dstar[i * n + j];
    double lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) lin += sigma(0, i) * in.grad_star[i];
    return phi_slope * phi_star_slope * quad + 2.0 * mu[0] * phi_slope * lin +
           phi_slope * sigma(0, 0) * in.f_star + mu[0] * mu[0] * in.f_base;
}

namespace detail {

struct ThmTerms {
    MomentEstimate est;       // thm1-combined estimate
    InnerExpectations inner;  // the four mean blocks
};

/// Estimate every inner expectation of Theorem 1 and assemble the combined
/// value. MC rides on common random numbers across X, X*, X**, and the
/// standard error comes from the per-draw combined statistic, so covariances
/// between the blocks are accounted for.
inline ThmTerms thm_terms(const EllipticalDistribution& d,
                          const SmoothFunction& f, const Budget& budget,
                          bool thm2_coeffs) {
    const std::size_t n = d.dim();
    if (!d.constants.has_dstar)
        throw validity_error("x1sq moment: X** gate (StudentT p > 4) fails");
    auto [star, dstar] = associated_distributions(d);

    const double b_star = d.constants.b_star;
    const double b_dstar = d.constants.b_dstar;
    const double phi_slope = b_star;                 // -phi'(0)
    const double phi_star_slope = b_dstar / b_star;  // -phi*'(0)
    const double mu1 = d.mu[0];
    const double s11 = d.sigma(0, 0);

    ThmTerms out;
    out.inner.grad_star.assign(n, 0.0);
    out.inner.hess_dstar.assign(n * n, 0.0);

    if (budget.method == Budget::Method::Quadrature) {
        out.inner.f_base = quad_expectation(d, f.eval, budget.nodes_per_dim);
        out.inner.f_star = quad_expectation(star, f.eval, budget.nodes_per_dim);
        for (std::size_t i = 0; i < n; ++i) {
            out.inner.grad_star[i] = quad_expectation(
                star, [&](const Vector& x) { return f.gradient(x)[i]; },
                budget.nodes_per_dim);
            for (std::size_t j = 0; j <= i; ++j) {
                double v = quad_expectation(
                    dstar,
                    [&](const Vector& x) { return f.hessian(x)(i, j); },
                    budget.nodes_per_dim);
                out.inner.hess_dstar[i * n + j] = v;
                out.inner.hess_dstar[j * n + i] = v;
            }
        }
        out.est.value =
            thm2_coeffs
                ? thm2_combine(d.mu, d.sigma, phi_slope, phi_star_slope,
                               out.inner)
                : thm1_combine(d.mu, d.sigma, b_star, b_dstar, out.inner);
        out.est.std_error = 0.0;
        out.est.method = thm2_coeffs ? "thm2" : "thm1";
    } else {
        CoupledSampler coupled(d, star, dstar);
        MeanVar mv;
        KahanSum t_star, t_hess, t_grad, t_base;
        std::vector<KahanSum> grad_acc(n);
        std::vector<KahanSum> hess_acc(n * n);
        KahanSum f_base_acc, f_star_acc;
        const std::size_t N = budget.samples;
        PartitionPlan plan;
        for (std::size_t start = 0; start < N; start += plan.chunk) {
            SplitRng rng(budget.seed, start / plan.chunk);
            std::size_t stop = std::min(N, start + plan.chunk);
            for (std::size_t i = start; i < stop; ++i) {
                CoupledDraw cd = coupled.draw(rng);
                double fb = f.eval(cd.x);
                double fs = f.eval(cd.x_star);
                Vector gs = f.gradient(cd.x_star);
                SymMatrix H = f.hessian(cd.x_dstar);
                double quad = 0.0;
                for (std::size_t a = 0; a < n; ++a)
                    for (std::size_t b = 0; b < n; ++b)
                        quad += d.sigma(a, 0) * d.sigma(b, 0) * H(a, b);
                double lin = 0.0;
                for (std::size_t a = 0; a < n; ++a)
                    lin += d.sigma(a, 0) * gs[a];
                double term_star = s11 * b_star * fs;
                double term_hess = thm2_coeffs
                                       ? phi_slope * phi_star_slope * quad
                                       : b_dstar * quad;
                double term_grad = 2.0 * mu1 * b_star * lin;
                double term_base = mu1 * mu1 * fb;
                double y = term_star + term_hess + term_grad + term_base;
                if (!std::isfinite(y))
                    throw non_finite_value("x1sq moment: non-finite draw");
                mv.add(y);
                t_star.add(term_star);
                t_hess.add(term_hess);
                t_grad.add(term_grad);
                t_base.add(term_base);
                f_base_acc.add(fb);
                f_star_acc.add(fs);
                for (std::size_t a = 0; a < n; ++a) {
                    grad_acc[a].add(gs[a]);
                    for (std::size_t b = 0; b < n; ++b)
                        hess_acc[a * n + b].add(H(a, b));
                }
            }
        }
        const double dn = static_cast<double>(N);
        out.inner.f_base = f_base_acc.value() / dn;
        out.inner.f_star = f_star_acc.value() / dn;
        for (std::size_t a = 0; a < n; ++a) {
            out.inner.grad_star[a] = grad_acc[a].value() / dn;
            for (std::size_t b = 0; b < n; ++b)
                out.inner.hess_dstar[a * n + b] =
                    hess_acc[a * n + b].value() / dn;
        }
        out.est.value = mv.mean();
        out.est.std_error = mv.stderr_of_mean();
        out.est.method = thm2_coeffs ? "thm2" : "thm1";
        out.est.breakdown = {{"sigma11_bstar_f_star", t_star.value() / dn},
                             {"bdstar_hessian", t_hess.value() / dn},
                             {"2mu1_bstar_grad", t_grad.value() / dn},
                             {"mu1sq_f_base", t_base.value() / dn}};
    }
    return out;
}

}  // namespace detail

/// E[X1^2 f(X)] by the direct (Cholesky) route; requires positive definite
/// Sigma.
inline MomentEstimate x1sq_moment_thm1(const EllipticalDistribution& d,
                                       const SmoothFunction& f,
                                       const Budget& budget = {}) {
    if (!d.full_rank() || !d.factor.triangular)
        throw singular_sigma(
            "x1sq_moment_thm1: requires positive definite Sigma (use the "
            "thm2 path otherwise)");
    return detail::thm_terms(d, f, budget, false).est;
}

/// E[X_k^2 f(X)] for any coordinate k, by relabeling: swap coordinate k with
/// coordinate 0 in mu, Sigma, and f, then apply the x1^2 identity.
inline MomentEstimate xksq_moment(const EllipticalDistribution& d,
                                  std::size_t k, const SmoothFunction& f,
                                  const Budget& budget = {}) {
    const std::size_t n = d.dim();
    if (k >= n) throw validity_error("xksq_moment: coordinate out of range");
    if (k == 0) return x1sq_moment_thm1(d, f, budget);
    Vector mu = d.mu;
    std::swap(mu[0], mu[k]);
    SymMatrix s(n);
    auto perm = [k](std::size_t i) { return i == 0 ? k : i == k ? 0 : i; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            s.set(i, j, d.sigma(perm(i), perm(j)));
    auto swapped = [k](const Vector& x) {
        Vector y = x;
        std::swap(y[0], y[k]);
        return y;
    };
    SmoothFunction g;
    g.eval = [f, swapped](const Vector& x) { return f.eval(swapped(x)); };
    if (f.grad)
        g.grad = [f, swapped, k](const Vector& x) {
            Vector gr = f.grad(swapped(x));
            std::swap(gr[0], gr[k]);
            return gr;
        };
    if (f.hess)
        g.hess = [f, swapped, perm](const Vector& x) {
            SymMatrix h = f.hess(swapped(x));
            SymMatrix out(h.dim());
            for (std::size_t i = 0; i < h.dim(); ++i)
                for (std::size_t j = 0; j <= i; ++j)
                    out.set(i, j, h(perm(i), perm(j)));
            return out;
        };
    g.fd_scale = f.fd_scale;
    auto dp = make_elliptical(std::move(mu), std::move(s), d.family);
    return x1sq_moment_thm1(dp, g, budget);
}

/// E[X1^2 f(X)] by the Stein route; Sigma only needs to be positive
/// semidefinite.
inline MomentEstimate x1sq_moment_thm2(const EllipticalDistribution& d,
                                       const SmoothFunction& f,
                                       const Budget& budget = {}) {
    if (budget.method == Budget::Method::Quadrature && !d.full_rank())
        throw singular_sigma(
            "x1sq_moment_thm2: quadrature budget requires full rank; use MC");
    return detail::thm_terms(d, f, budget, true).est;
}

/// Stein-type first moment E[X1 f(X)] =
///   b* sum_i sigma_1i E[grad_i f(X*)] + mu_1 E[f(X)].
inline MomentEstimate stein_first_moment(const EllipticalDistribution& d,
                                         const SmoothFunction& f,
                                         const Budget& budget = {}) {
    const std::size_t n = d.dim();
    EllipticalDistribution star = associated_star(d);
    const double b_star = d.constants.b_star;
    const double mu1 = d.mu[0];

    MomentEstimate est;
    est.method = budget.method == Budget::Method::Mc ? "thm1" : "quadrature";
    if (budget.method == Budget::Method::Quadrature) {
        double lin = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            lin += d.sigma(0, i) *
                   quad_expectation(
                       star, [&](const Vector& x) { return f.gradient(x)[i]; },
                       budget.nodes_per_dim);
        double fb = quad_expectation(d, f.eval, budget.nodes_per_dim);
        est.value = b_star * lin + mu1 * fb;
        est.breakdown = {{"bstar_cov_grad", b_star * lin},
                         {"mu1_f_base", mu1 * fb}};
        return est;
    }

    CoupledSampler coupled(d, star, star);
    MeanVar mv;
    KahanSum t_lin, t_base;
    PartitionPlan plan;
    const std::size_t N = budget.samples;
    for (std::size_t start = 0; start < N; start += plan.chunk) {
        SplitRng rng(budget.seed, start / plan.chunk);
        std::size_t stop = std::min(N, start + plan.chunk);
        for (std::size_t i = start; i < stop; ++i) {
            CoupledDraw cd = coupled.draw(rng);
            Vector gs = f.gradient(cd.x_star);
            double lin = 0.0;
            for (std::size_t a = 0; a < n; ++a) lin += d.sigma(0, a) * gs[a];
            double term_lin = b_star * lin;
            double term_base = mu1 * f.eval(cd.x);
            double y = term_lin + term_base;
            if (!std::isfinite(y))
                throw non_finite_value("stein_first_moment: non-finite draw");
            mv.add(y);
            t_lin.add(term_lin);
            t_base.add(term_base);
        }
    }
    const double dn = static_cast<double>(N);
    est.value = mv.mean();
    est.std_error = mv.stderr_of_mean();
    est.breakdown = {{"bstar_cov_grad", t_lin.value() / dn},
                     {"mu1_f_base", t_base.value() / dn}};
    return est;
}

namespace detail {

/// Monomial prod x_i^{q_i} as a SmoothFunction with exact derivatives.
inline SmoothFunction monomial_function(std::vector<int> q) {
    auto value = [](const std::vector<int>& e, const Vector& x) {
        double v = 1.0;
        for (std::size_t i = 0; i < e.size(); ++i)
            for (int k = 0; k < e[i]; ++k) v *= x[i];
        return v;
    };
    SmoothFunction f;
    f.eval = [q, value](const Vector& x) { return value(q, x); };
    f.grad = [q, value](const Vector& x) {
        Vector g(x.size(), 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (q[i] == 0) continue;
            std::vector<int> e = q;
            --e[i];
            g[i] = q[i] * value(e, x);
        }
        return g;
    };
    f.hess = [q, value](const Vector& x) {
        SymMatrix H(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                std::vector<int> e = q;
                double coef;
                if (i == j) {
                    if (q[i] < 2) continue;
                    coef = q[i] * (q[i] - 1);
                    e[i] -= 2;
                } else {
                    if (q[i] < 1 || q[j] < 1) continue;
                    coef = q[i] * q[j];
                    --e[i];
                    --e[j];
                }
                H.set(i, j, coef * value(e, x));
            }
        return H;
    };
    return f;
}

}  // namespace detail

class moment_nonexistence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact Gaussian product moment E[prod X_i^{p_i}] by the degree recursion
/// (pivoting on the coordinate with the largest exponent). Deterministic.
inline double normal_product_moment(const Vector& mu, const SymMatrix& sigma,
                                    const MonomialExponents& e) {
    e.validate();
    if (e.p.size() != mu.size() || sigma.dim() != mu.size())
        throw validity_error("normal_product_moment: dimension mismatch");

    std::map<std::vector<int>, double> memo;
    std::function<double(std::vector<int>)> rec =
        [&](std::vector<int> p) -> double {
        int deg = 0, m = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            deg += p[i];
            if (p[i] > p[m]) m = static_cast<int>(i);
        }
        if (deg == 0) return 1.0;
        auto it = memo.find(p);
        if (it != memo.end()) return it->second;

        double val = 0.0;
        const std::size_t n = p.size();
        if (p[m] == 1) {
            // first-degree pivot: the Stein identity display
            std::vector<int> q = p;
            q[m] = 0;
            val = mu[m] * rec(q);
            for (std::size_t i = 0; i < n; ++i) {
                if (q[i] == 0) continue;
                std::vector<int> r = q;
                --r[i];
                val += sigma(m, i) * q[i] * rec(r);
            }
        } else {
            const int m1 = p[m] - 2;
            std::vector<int> base = p;
            base[m] -= 2;
            val += (sigma(m, m) + mu[m] * mu[m]) * rec(base);
            if (m1 >= 2) {
                std::vector<int> r = p;
                r[m] -= 4;
                val += sqr(sigma(m, m)) * m1 * (m1 - 1) * rec(r);
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (j == static_cast<std::size_t>(m) || p[j] < 1) continue;
                if (m1 >= 1) {
                    std::vector<int> r = p;
                    r[m] -= 3;
                    --r[j];
                    val += 2.0 * sigma(m, m) * sigma(j, m) * m1 * p[j] * rec(r);
                }
                if (p[j] >= 2) {
                    std::vector<int> r = base;
                    r[j] -= 2;
                    val += sqr(sigma(j, m)) * p[j] * (p[j] - 1) * rec(r);
                }
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == static_cast<std::size_t>(m) || i == j || p[i] < 1)
                        continue;
                    std::vector<int> r = base;
                    --r[i];
                    --r[j];
                    val += sigma(j, m) * sigma(i, m) * p[j] * p[i] * rec(r);
                }
            }
            if (mu[m] != 0.0) {
                if (m1 >= 1) {
                    std::vector<int> r = p;
                    r[m] -= 3;
                    val += 2.0 * mu[m] * sigma(m, m) * m1 * rec(r);
                }
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == static_cast<std::size_t>(m) || p[j] < 1) continue;
                    std::vector<int> r = base;
                    --r[j];
                    val += 2.0 * mu[m] * sigma(j, m) * p[j] * rec(r);
                }
            }
        }
        memo[p] = val;
        return val;
    };
    return rec(e.p);
}

/// Elliptical product moment E[prod X_i^{p_i}], p_1 >= 2. The term list is
/// derived from the x1^2 identity with f = x1^{p1-2} prod_{k>=2} x_k^{p_k},
/// not transcribed from a fixed expansion. Normal inputs collapse to the
/// deterministic recursion.
inline MomentEstimate product_moment(const EllipticalDistribution& d,
                                     const MonomialExponents& e,
                                     const Budget& budget = {}) {
    e.validate();
    if (e.p.empty() || e.p[0] < 2)
        throw validity_error("product_moment: requires p1 >= 2");
    if (e.p.size() != d.dim())
        throw validity_error("product_moment: exponent dimension mismatch");

    if (d.family.kind == FamilyKind::Normal) {
        MomentEstimate est;
        est.value = normal_product_moment(d.mu, d.sigma, e);
        est.method = "recursion";
        return est;
    }
    if (d.family.kind == FamilyKind::StudentT) {
        int deg = e.total_degree();
        if (deg >= d.family.p)
            throw moment_nonexistence(
                "product_moment: StudentT moment of this degree does not "
                "exist");
        // the Hessian block runs under X** (tail index p-4)
        if (deg - 2 >= d.family.p - 4.0)
            throw moment_nonexistence(
                "product_moment: inner X** expectation of this degree does "
                "not exist for StudentT");
    }
    std::vector<int> q = e.p;
    q[0] -= 2;
    SmoothFunction f = detail::monomial_function(q);
    return detail::thm_terms(d, f, budget, false).est;
}

/// Gaussian E[X1^{p1} f(X)] by the power recursion: a single product-rule
/// expansion leaves only expectations of x1-powers times f and its first two
/// derivative layers, all under X itself.
inline MomentEstimate normal_power_moment(const EllipticalDistribution& d,
                                          int p1, const SmoothFunction& f,
                                          const Budget& budget = {}) {
    if (d.family.kind != FamilyKind::Normal)
        throw validity_error("normal_power_moment: Normal family only");
    if (p1 < 2) throw validity_error("normal_power_moment: requires p1 >= 2");
    const std::size_t n = d.dim();
    const int m = p1 - 2;
    const double mu1 = d.mu[0];
    const double s11 = d.sigma(0, 0);

    auto h = [&](const Vector& x) {
        double x1m = 1.0;
        for (int k = 0; k < m; ++k) x1m *= x[0];
        double x1m1 = 1.0;  // x1^{m-1}
        for (int k = 0; k + 1 < m; ++k) x1m1 *= x[0];
        double val = (s11 + mu1 * mu1) * x1m * f.eval(x);
        SymMatrix H = f.hessian(x);
        double quad = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                quad += d.sigma(0, a) * d.sigma(0, b) * H(a, b);
        val += x1m * quad;
        Vector g = f.gradient(x);
        double lin = 0.0;
        for (std::size_t a = 0; a < n; ++a) lin += d.sigma(0, a) * g[a];
        val += 2.0 * mu1 * x1m * lin;
        if (m >= 1) {
            val += 2.0 * m * s11 * x1m1 * lin;
            val += 2.0 * mu1 * s11 * m * x1m1 * f.eval(x);
        }
        if (m >= 2) {
            double x1m2 = 1.0;
            for (int k = 0; k + 2 < m; ++k) x1m2 *= x[0];
            val += sqr(s11) * m * (m - 1) * x1m2 * f.eval(x);
        }
        return val;
    };

    MomentEstimate est;
    if (budget.method == Budget::Method::Quadrature) {
        est.value = quad_expectation(d, h, budget.nodes_per_dim);
        est.method = "quadrature";
        return est;
    }
    McResult r = mc_expectation(d, h, budget.samples, budget.seed);
    est.value = r.mean;
    est.std_error = r.stderr_of_mean;
    est.method = "recursion";
    return est;
}

}  // namespace ellipmoment
