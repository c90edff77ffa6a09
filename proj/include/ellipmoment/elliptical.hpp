#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "ellipmoment/common.hpp"
#include "ellipmoment/generator_families.hpp"
#include "ellipmoment/linalg.hpp"
#include "ellipmoment/rng.hpp"

namespace ellipmoment {

enum class SamplerKind { ExactNormal, ExactLaplace, ExactStudent, Tabulated };
enum class Role { Base, Star, DStar };

namespace detail {

inline double radial_head_integral(const std::function<double(double)>& g,
                                   std::size_t n, double t0,
                                   double rel_tol = 1e-11) {
    // int_0^{t0} u^{n/2-1} g(u) du with u = t0 x^2
    return integrate(
        [&](double x) {
            return 2.0 * std::pow(t0, 0.5 * n) *
                   std::pow(x, static_cast<double>(n) - 1.0) * g(t0 * x * x);
        },
        0.0, 1.0, rel_tol);
}

}  // namespace detail

/// Law of the Mahalanobis radius R, with density f_R(r) proportional to
/// r^{n-1} g(r^2/2). Carries a tabulated CDF/quantile on a log grid plus an
/// exact sampler where the family admits one.
struct RadialLaw {
    std::size_t n = 0;
    std::function<double(double)> density;  // normalized f_R
    SamplerKind sampler_kind = SamplerKind::Tabulated;
    std::function<double(SplitRng&)> exact_draw;  // set for exact kinds

    Vector grid_r, grid_cdf;
    detail::MonotoneCubic cdf_interp;       // r -> F
    detail::MonotoneCubic quantile_interp;  // F -> r
    double tail_alpha = 10.0;               // survival exponent past the grid

    double cdf(double r) const {
        if (r <= grid_r.front())
            return grid_cdf.front() *
                   std::pow(std::max(r, 0.0) / grid_r.front(),
                            static_cast<double>(n));
        if (r >= grid_r.back())
            return 1.0 - (1.0 - grid_cdf.back()) *
                             std::pow(grid_r.back() / r, tail_alpha);
        return cdf_interp(r);
    }

    double quantile(double u) const {
        if (u <= grid_cdf.front())
            return grid_r.front() *
                   std::pow(u / grid_cdf.front(), 1.0 / static_cast<double>(n));
        if (u >= grid_cdf.back())
            return grid_r.back() *
                   std::pow((1.0 - grid_cdf.back()) / (1.0 - u),
                            1.0 / tail_alpha);
        return quantile_interp(u);
    }

    double draw(SplitRng& rng) const {
        if (exact_draw) return exact_draw(rng);
        return quantile(rng.uniform());
    }
};

/// Build the radial law for generator g in dimension n. The tabulated grid
/// spans quantiles [1e-9, 1 - 1e-9] on 2048 log-spaced radii.
inline RadialLaw build_radial_law(const std::function<double(double)>& g,
                                  std::size_t n) {
    RadialLaw law;
    law.n = n;
    const double nn = static_cast<double>(n);
    const double pref = std::pow(2.0, 0.5 * nn - 1.0);
    const double total = pref * radial_moment_integral(g, n);
    law.density = [g, nn, total](double r) {
        return std::pow(r, nn - 1.0) * g(0.5 * r * r) / total;
    };

    auto survival = [&](double r) {
        return pref * radial_tail_integral(g, n, 0.5 * r * r) / total;
    };
    auto head_cdf = [&](double r) {
        return pref * detail::radial_head_integral(g, n, 0.5 * r * r) / total;
    };

    double r_hi = 1.0;
    while (r_hi < 1e12 && survival(r_hi) > 1e-9) r_hi *= 2.0;
    double r_lo = 1.0;
    while (r_lo > 1e-12 && head_cdf(r_lo) > 1e-9) r_lo *= 0.5;

    const std::size_t m = 2048;
    Vector r(m), F(m);
    for (std::size_t i = 0; i < m; ++i)
        r[i] = r_lo * std::pow(r_hi / r_lo, double(i) / double(m - 1));
    KahanSum acc;
    acc.add(head_cdf(r[0]));
    F[0] = acc.value();
    for (std::size_t i = 1; i < m; ++i) {
        acc.add(integrate([&](double s) { return law.density(s); }, r[i - 1],
                          r[i], 1e-10));
        F[i] = std::min(acc.value(), 1.0 - 1e-16);
    }
    // enforce strict monotonicity for the interpolants
    Vector rs, Fs;
    rs.reserve(m);
    Fs.reserve(m);
    double last = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (F[i] > last * (1.0 + 1e-15) && F[i] > last + 1e-18) {
            rs.push_back(r[i]);
            Fs.push_back(F[i]);
            last = F[i];
        }
    }
    law.grid_r = rs;
    law.grid_cdf = Fs;
    law.cdf_interp = detail::MonotoneCubic(rs, Fs);
    law.quantile_interp = detail::MonotoneCubic(Fs, rs);
    // survival exponent for extrapolation past the grid
    std::size_t k = rs.size();
    double s1 = 1.0 - Fs[k - 2], s2 = 1.0 - Fs[k - 1];
    if (s1 > 0.0 && s2 > 0.0 && rs[k - 1] > rs[k - 2])
        law.tail_alpha =
            std::log(s1 / s2) / std::log(rs[k - 1] / rs[k - 2]);
    return law;
}

namespace detail {

/// Exact radial samplers per family and role, where available.
inline void attach_exact_sampler(RadialLaw& law, const GeneratorFamily& fam,
                                 Role role, std::size_t n) {
    const double nn = static_cast<double>(n);
    switch (fam.kind) {
        case FamilyKind::Normal:
            law.sampler_kind = SamplerKind::ExactNormal;
            law.exact_draw = [nn](SplitRng& rng) {
                return std::sqrt(2.0 * rng.gamma(0.5 * nn));
            };
            break;
        case FamilyKind::StudentT: {
            double q = fam.p -
                       (role == Role::Base ? 0.0 : role == Role::Star ? 2.0 : 4.0);
            double p = fam.p;
            law.sampler_kind = SamplerKind::ExactStudent;
            law.exact_draw = [nn, p, q](SplitRng& rng) {
                double g1 = rng.gamma(0.5 * nn);
                double g2 = rng.gamma(0.5 * q);
                return std::sqrt(p * g1 / g2);
            };
            break;
        }
        case FamilyKind::Laplace: {
            law.sampler_kind = SamplerKind::ExactLaplace;
            if (role == Role::Base) {
                law.exact_draw = [nn](SplitRng& rng) { return rng.gamma(nn); };
            } else if (role == Role::Star) {
                // density ~ r^{n-1}(1+r)e^{-r}: Gamma(n) / Gamma(n+1) mixture
                double w0 = 1.0 / (nn + 1.0);
                law.exact_draw = [nn, w0](SplitRng& rng) {
                    return rng.gamma(rng.uniform() < w0 ? nn : nn + 1.0);
                };
            } else {
                // r^{n-1}(r^2+3r+3)e^{-r}: Gamma(n+2)/Gamma(n+1)/Gamma(n)
                double denom = (nn + 1.0) * (nn + 3.0);
                double w0 = 3.0 / denom;             // Gamma(n)
                double w1 = w0 + 3.0 * nn / denom;   // Gamma(n+1)
                law.exact_draw = [nn, w0, w1](SplitRng& rng) {
                    double u = rng.uniform();
                    double shape = u < w0 ? nn : (u < w1 ? nn + 1.0 : nn + 2.0);
                    return rng.gamma(shape);
                };
            }
            break;
        }
        default:
            law.sampler_kind = SamplerKind::Tabulated;
            break;
    }
}

}  // namespace detail

/// An elliptical distribution (mu, Sigma, generator), possibly one of the
/// associated laws X* / X**. Immutable after construction.
struct EllipticalDistribution {
    Vector mu;
    SymMatrix sigma;
    GeneratorFamily family;
    GeneratorTriple triple;           // generators of the source family
    NormalizingConstants constants;   // source-family constants record
    LowerFactor factor;
    Role role = Role::Base;
    std::function<double(double)> density_g;  // generator of THIS law
    double c = 0.0;                           // normalizing constant of THIS law
    RadialLaw radial;

    std::size_t dim() const { return mu.size(); }
    bool full_rank() const { return factor.rank == dim(); }
};

inline EllipticalDistribution make_elliptical(Vector mu, SymMatrix sigma,
                                              GeneratorFamily family,
                                              double tol = 1e-12) {
    if (mu.size() != sigma.dim())
        throw validity_error("make_elliptical: mu/sigma dimension mismatch");
    EllipticalDistribution d;
    d.mu = std::move(mu);
    d.sigma = std::move(sigma);
    d.family = std::move(family);
    const std::size_t n = d.mu.size();
    d.triple = generator_triple(d.family, n);
    d.constants = normalizing_constants(d.family, n);
    try {
        d.factor = cholesky(d.sigma, tol);
    } catch (const not_positive_definite&) {
        d.factor = psd_factor(d.sigma, tol);
    }
    d.role = Role::Base;
    d.density_g = d.triple.g;
    d.c = d.constants.c_n;
    d.radial = build_radial_law(d.density_g, n);
    detail::attach_exact_sampler(d.radial, d.family, Role::Base, n);
    return d;
}

class singular_sigma : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Density at x; requires full-rank Sigma.
inline double pdf(const EllipticalDistribution& d, const Vector& x) {
    if (!d.full_rank() || !d.factor.triangular)
        throw singular_sigma("pdf: density requires positive definite Sigma");
    double half = mahalanobis_half(d.factor, x, d.mu);
    double sqrt_det = 1.0;
    for (std::size_t i = 0; i < d.factor.n; ++i) sqrt_det *= d.factor(i, i);
    return d.c / sqrt_det * d.density_g(half);
}

/// Deterministic streaming sampler: X = mu + R A U, chunked into fixed
/// streams so the result is independent of any worker partitioning. The
/// callback sees each draw in order; the buffer is reused between calls.
template <class Fn>
void sample_stream(const EllipticalDistribution& d, std::uint64_t seed,
                   std::size_t count, Fn&& fn, const PartitionPlan& plan = {}) {
    const std::size_t n = d.dim();
    Vector u(n), y(n), x(n);
    for (std::size_t start = 0; start < count; start += plan.chunk) {
        SplitRng rng(seed, start / plan.chunk);
        std::size_t stop = std::min(count, start + plan.chunk);
        for (std::size_t i = start; i < stop; ++i) {
            double norm2 = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                u[k] = rng.normal();
                norm2 += u[k] * u[k];
            }
            double inv = 1.0 / std::sqrt(norm2);
            double r = d.radial.draw(rng);
            for (std::size_t k = 0; k < n; ++k) y[k] = r * u[k] * inv;
            x = d.factor.apply(y);
            for (std::size_t k = 0; k < n; ++k) x[k] += d.mu[k];
            fn(static_cast<const Vector&>(x));
        }
    }
}

inline std::vector<Vector> sample(const EllipticalDistribution& d,
                                  std::uint64_t seed, std::size_t count,
                                  const PartitionPlan& plan = {}) {
    std::vector<Vector> out;
    out.reserve(count);
    sample_stream(d, seed, count,
                  [&](const Vector& x) { out.push_back(x); }, plan);
    return out;
}

/// X* alone; available whenever c_n_star exists (StudentT p > 2 suffices).
inline EllipticalDistribution associated_star(const EllipticalDistribution& d) {
    EllipticalDistribution s = d;
    s.role = Role::Star;
    s.density_g = d.triple.g_bar;
    s.c = d.constants.c_n_star;
    s.radial = build_radial_law(s.density_g, d.dim());
    detail::attach_exact_sampler(s.radial, d.family, Role::Star, d.dim());
    return s;
}

/// The associated laws X* ~ (mu, Sigma, g_bar) and X** ~ (mu, Sigma, g_dbar).
inline std::pair<EllipticalDistribution, EllipticalDistribution>
associated_distributions(const EllipticalDistribution& d) {
    if (!d.constants.has_dstar)
        throw validity_error(
            "associated_distributions: X** gate (StudentT p > 4) fails");
    const std::size_t n = d.dim();
    EllipticalDistribution s = d, ss = d;
    s.role = Role::Star;
    s.density_g = d.triple.g_bar;
    s.c = d.constants.c_n_star;
    s.radial = build_radial_law(s.density_g, n);
    detail::attach_exact_sampler(s.radial, d.family, Role::Star, n);

    ss.role = Role::DStar;
    ss.density_g = d.triple.g_dbar;
    ss.c = d.constants.c_n_dstar;
    ss.radial = build_radial_law(ss.density_g, n);
    detail::attach_exact_sampler(ss.radial, d.family, Role::DStar, n);
    return {std::move(s), std::move(ss)};
}

/// Per-draw triple sharing the sphere direction and the radial uniform, so
/// expectations under X, X*, X** ride on common random numbers.
struct CoupledDraw {
    Vector x, x_star, x_dstar;
};

class CoupledSampler {
public:
    CoupledSampler(const EllipticalDistribution& base,
                   const EllipticalDistribution& star,
                   const EllipticalDistribution& dstar)
        : base_(&base), star_(&star), dstar_(&dstar) {}

    CoupledDraw draw(SplitRng& rng) const {
        const std::size_t n = base_->dim();
        Vector u(n);
        double norm2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            u[k] = rng.normal();
            norm2 += u[k] * u[k];
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t k = 0; k < n; ++k) u[k] *= inv;
        double p = rng.uniform();
        CoupledDraw out;
        out.x = at_radius(*base_, base_->radial.quantile(p), u);
        out.x_star = at_radius(*star_, star_->radial.quantile(p), u);
        out.x_dstar = at_radius(*dstar_, dstar_->radial.quantile(p), u);
        return out;
    }

private:
    static Vector at_radius(const EllipticalDistribution& d, double r,
                            const Vector& u) {
        Vector y(d.dim());
        for (std::size_t k = 0; k < d.dim(); ++k) y[k] = r * u[k];
        Vector x = d.factor.apply(y);
        for (std::size_t k = 0; k < d.dim(); ++k) x[k] += d.mu[k];
        return x;
    }
    const EllipticalDistribution* base_;
    const EllipticalDistribution* star_;
    const EllipticalDistribution* dstar_;
};

}  // namespace ellipmoment
