#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ellipmoment/common.hpp"
#include "ellipmoment/quadrature.hpp"
#include "ellipmoment/special_functions.hpp"

namespace ellipmoment {

enum class FamilyKind { Normal, StudentT, Logistic, Laplace, Custom };

/// A density-generator family. StudentT carries degrees of freedom p;
/// Custom carries the generator itself (library-only, no CLI grammar).
struct GeneratorFamily {
    FamilyKind kind = FamilyKind::Normal;
    double p = 0.0;  // StudentT degrees of freedom
    std::function<double(double)> custom_g;

    static GeneratorFamily normal() { return {FamilyKind::Normal}; }
    static GeneratorFamily student_t(double p) {
        if (!(p > 0.0)) throw validity_error("student_t: requires p > 0");
        return {FamilyKind::StudentT, p};
    }
    static GeneratorFamily logistic() { return {FamilyKind::Logistic}; }
    static GeneratorFamily laplace() { return {FamilyKind::Laplace}; }
    static GeneratorFamily custom(std::function<double(double)> g) {
        return {FamilyKind::Custom, 0.0, std::move(g)};
    }

    std::string name() const {
        switch (kind) {
            case FamilyKind::Normal: return "normal";
            case FamilyKind::StudentT: {
                char buf[48];
                std::snprintf(buf, sizeof buf, "t(p=%g)", p);
                return buf;
            }
            case FamilyKind::Logistic: return "logistic";
            case FamilyKind::Laplace: return "laplace";
            case FamilyKind::Custom: return "custom";
        }
        return "?";
    }
};

/// Parse the family grammar `normal | t(p=<real>) | logistic | laplace`.
inline GeneratorFamily parse_family(const std::string& s) {
    if (s == "normal") return GeneratorFamily::normal();
    if (s == "logistic") return GeneratorFamily::logistic();
    if (s == "laplace") return GeneratorFamily::laplace();
    if (s.rfind("t(p=", 0) == 0 && s.back() == ')') {
        std::size_t used = 0;
        double p = std::stod(s.substr(4, s.size() - 5), &used);
        if (used != s.size() - 5)
            throw validity_error("parse_family: bad t(p=...) spec: " + s);
        return GeneratorFamily::student_t(p);
    }
    throw validity_error("parse_family: unknown family spec: " + s);
}

/// A density generator together with its cumulative generators for a fixed
/// working dimension n.
struct GeneratorTriple {
    std::function<double(double)> g;       // g_n(t)
    std::function<double(double)> g_bar;   // int_t^inf g_n
    std::function<double(double)> g_dbar;  // int_t^inf g_bar
    std::size_t n = 0;
};

struct NormalizingConstants {
    double c_n = 0.0;
    double c_n_star = 0.0;
    double c_n_dstar = 0.0;  // NaN when the family gate (p > 4) fails
    double b_star = 0.0;
    double b_dstar = 0.0;    // NaN likewise
    std::size_t n = 0;
    bool has_dstar = true;
    /// max relative discrepancy of the quadrature recomputation, filled in
    /// by normalizing_constants
    double cross_check_rel_err = 0.0;
};

/// int_0^inf u^{n/2-1} h(u) du by adaptive quadrature: substitution u = x^2
/// on [0,1] (absorbs the endpoint singularity for n = 1) and u = e^w on the
/// tail, so barely-integrable power tails keep only e^{-200 eps} of mass
/// outside the mapped range.
inline double radial_moment_integral(const std::function<double(double)>& h,
                                     std::size_t n, double rel_tol = 1e-12) {
    const double a = 0.5 * n - 1.0;
    auto head = [&](double x) {
        return 2.0 * std::pow(x, static_cast<double>(n) - 1.0) * h(x * x);
    };
    double hd = integrate(head, 0.0, 1.0, rel_tol);
    auto tail = [&](double w) {
        double u = std::exp(w);
        double v = std::pow(u, a + 1.0) * h(u);
        return std::isfinite(v) ? v : 0.0;
    };
    double tl = integrate(tail, 0.0, 200.0, rel_tol);
    return hd + tl;
}

/// int_{t0}^inf u^{n/2-1} h(u) du, t0 > 0 (tail mass helper).
inline double radial_tail_integral(const std::function<double(double)>& h,
                                   std::size_t n, double t0,
                                   double rel_tol = 1e-11) {
    const double a = 0.5 * n - 1.0;
    auto mapped = [&](double w) {
        double u = t0 * std::exp(w);
        double v = std::pow(u, a + 1.0) * h(u);
        return std::isfinite(v) ? v : 0.0;
    };
    return integrate(mapped, 0.0, 200.0, rel_tol);
}

namespace detail {

/// log1p(exp(-t)) without overflow/underflow artefacts at large t.
inline double log1p_exp_neg(double t) {
    if (t > 36.0) return std::exp(-t);  // log1p(x) ~ x below eps
    return std::log1p(std::exp(-t));
}

/// Piecewise-cubic monotone (Fritsch-Carlson) interpolant on a fixed grid.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(Vector x, Vector y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t m = x_.size();
        slopes_.assign(m, 0.0);
        Vector d(m - 1);
        for (std::size_t i = 0; i + 1 < m; ++i)
            d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        slopes_[0] = d[0];
        slopes_[m - 1] = d[m - 2];
        for (std::size_t i = 1; i + 1 < m; ++i) {
            if (d[i - 1] * d[i] <= 0.0)
                slopes_[i] = 0.0;
            else {
                double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
                double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
                slopes_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
    }

    bool empty() const { return x_.empty(); }
    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }
    double y_front() const { return y_.front(); }
    double y_back() const { return y_.back(); }

    double operator()(double x) const {
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        std::size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            (x_[mid] <= x ? lo : hi) = mid;
        }
        double h = x_[lo + 1] - x_[lo];
        double t = (x - x_[lo]) / h;
        double h00 = (1.0 + 2.0 * t) * sqr(1.0 - t);
        double h10 = t * sqr(1.0 - t);
        double h01 = t * t * (3.0 - 2.0 * t);
        double h11 = t * t * (t - 1.0);
        return h00 * y_[lo] + h10 * h * slopes_[lo] + h01 * y_[lo + 1] +
               h11 * h * slopes_[lo + 1];
    }

private:
    Vector x_, y_, slopes_;
};

/// Cached cumulative generators for a custom density generator: 2048
/// log-spaced nodes with monotone interpolation and an exponential tail fit
/// beyond the last node.
class CachedTail {
public:
    CachedTail(const std::function<double(double)>& g, double t_max) {
        const std::size_t m = 2048;
        Vector t(m), v(m);
        const double t_min = 1e-8;
        for (std::size_t i = 0; i < m; ++i)
            t[i] = t_min * std::pow(t_max / t_min, double(i) / double(m - 1));
        // tail beyond the last node: exponential fit
        double g_end = g(t_max);
        double g_end2 = g(t_max * 0.999);
        lambda_ = std::log(std::max(g_end2, 1e-300) / std::max(g_end, 1e-300)) /
                  (0.001 * t_max);
        if (!(lambda_ > 1e-12)) lambda_ = 1.0;
        t_max_ = t_max;
        double tail = g_end / lambda_;
        // backward cumulative integration
        Vector bar(m);
        double acc = tail;
        for (std::size_t i = m; i-- > 0;) {
            double hi = (i + 1 < m) ? t[i + 1] : t_max;
            if (i + 1 < m || t[i] < t_max)
                acc += integrate(g, t[i], hi, 1e-10);
            bar[i] = acc;
        }
        head_ = MonotoneCubic(t, bar);
        v0_ = acc + integrate(g, 0.0, t[0], 1e-10);
        tail_value_ = tail;
    }

    double operator()(double t) const {
        if (t <= 0.0) return v0_;
        if (t >= t_max_) return tail_value_ * std::exp(-lambda_ * (t - t_max_));
        if (t < head_.x_front()) {
            // linear in the tiny leading gap
            double w = t / head_.x_front();
            return v0_ * (1.0 - w) + head_.y_front() * w;
        }
        return head_(t);
    }

private:
    MonotoneCubic head_;
    double v0_ = 0.0, t_max_ = 0.0, lambda_ = 1.0, tail_value_ = 0.0;
};

inline double choose_t_max(const std::function<double(double)>& g) {
    double scale = std::max(g(0.0), g(1.0));
    double t = 1.0;
    while (t < 1e8 && g(t) > 1e-18 * scale) t *= 2.0;
    return t;
}

}  // namespace detail

/// Closed-form generator triples for the built-in families; quadrature-backed
/// caches for Custom.
inline GeneratorTriple generator_triple(const GeneratorFamily& family,
                                        std::size_t n) {
    if (n < 1) throw validity_error("generator_triple: n >= 1 required");
    GeneratorTriple tr;
    tr.n = n;
    switch (family.kind) {
        case FamilyKind::Normal:
            tr.g = tr.g_bar = tr.g_dbar = [](double t) { return std::exp(-t); };
            break;
        case FamilyKind::StudentT: {
            double p = family.p;
            if (!(p > 2.0))
                throw validity_error(
                    "generator_triple: StudentT needs p > 2 for a "
                    "normalizable cumulative generator");
            double nn = static_cast<double>(n);
            tr.g = [p, nn](double t) {
                return std::pow(1.0 + 2.0 * t / p, -0.5 * (p + nn));
            };
            double a1 = p / (p + nn - 2.0);
            tr.g_bar = [p, nn, a1](double t) {
                return a1 * std::pow(1.0 + 2.0 * t / p, -0.5 * (p + nn - 2.0));
            };
            if (p > 4.0) {
                double a2 = a1 * p / (p + nn - 4.0);
                tr.g_dbar = [p, nn, a2](double t) {
                    return a2 *
                           std::pow(1.0 + 2.0 * t / p, -0.5 * (p + nn - 4.0));
                };
            } else {
                tr.g_dbar = [](double) -> double {
                    throw validity_error(
                        "generator_triple: StudentT double cumulative "
                        "generator needs p > 4");
                };
            }
            break;
        }
        case FamilyKind::Logistic:
            tr.g = [](double t) {
                double e = std::exp(-t);
                return e / sqr(1.0 + e);
            };
            tr.g_bar = [](double t) {
                // e^-t/(1+e^-t), stable for large t
                return 1.0 / (1.0 + std::exp(t));
            };
            tr.g_dbar = [](double t) { return detail::log1p_exp_neg(t); };
            break;
        case FamilyKind::Laplace:
            tr.g = [](double t) { return std::exp(-std::sqrt(2.0 * t)); };
            tr.g_bar = [](double t) {
                double r = std::sqrt(2.0 * t);
                return (1.0 + r) * std::exp(-r);
            };
            tr.g_dbar = [](double t) {
                double r = std::sqrt(2.0 * t);
                return (3.0 + 2.0 * t + 3.0 * r) * std::exp(-r);
            };
            break;
        case FamilyKind::Custom: {
            if (!family.custom_g)
                throw validity_error("generator_triple: Custom without g");
            auto g = family.custom_g;
            // integrability check for the working dimension
            double i0 = radial_moment_integral(g, n, 1e-8);
            if (!std::isfinite(i0) || !(i0 > 0.0))
                throw validity_error(
                    "generator_triple: custom g fails the integrability "
                    "condition");
            double t_max = detail::choose_t_max(g);
            auto bar = std::make_shared<detail::CachedTail>(g, t_max);
            tr.g = g;
            tr.g_bar = [bar](double t) { return (*bar)(t); };
            auto dbar = std::make_shared<detail::CachedTail>(
                [bar](double t) { return (*bar)(t); }, t_max);
            tr.g_dbar = [dbar](double t) { return (*dbar)(t); };
            break;
        }
    }
    return tr;
}

/// Variance scale -phi'(0) of the n-dimensional elliptical law with density
/// generator g, from the radial integrals: 2 I1 / (n I0).
inline double variance_scale_by_quadrature(
    const std::function<double(double)>& g, std::size_t n) {
    double i0 = radial_moment_integral(g, n);
    double i1 = radial_moment_integral(g, n + 2);  // t^{n/2} weight
    return 2.0 * i1 / (static_cast<double>(n) * i0);
}

/// All normalizing constants of Sigma-free form: closed expressions for the
/// built-in families, quadrature for Custom. Every record carries the maximum
/// relative discrepancy of an independent quadrature recomputation.
inline NormalizingConstants normalizing_constants(const GeneratorFamily& family,
                                                  std::size_t n) {
    if (n < 1) throw validity_error("normalizing_constants: n >= 1 required");
    const double nn = static_cast<double>(n);
    const double pref = std::exp(log_gamma(0.5 * nn)) /
                        std::pow(2.0 * pi, 0.5 * nn);
    NormalizingConstants c;
    c.n = n;
    switch (family.kind) {
        case FamilyKind::Normal: {
            double v = std::pow(2.0 * pi, -0.5 * nn);
            c.c_n = c.c_n_star = c.c_n_dstar = v;
            c.b_star = c.b_dstar = 1.0;
            break;
        }
        case FamilyKind::StudentT: {
            double p = family.p;
            if (!(p > 2.0))
                throw validity_error(
                    "normalizing_constants: StudentT needs p > 2");
            double lppi = 0.5 * nn * std::log(p * pi);
            c.c_n = std::exp(log_gamma(0.5 * (p + nn)) - log_gamma(0.5 * p) -
                             lppi);
            c.c_n_star = (p + nn - 2.0) * std::exp(log_gamma(0.5 * nn) - lppi) /
                         (p * beta_fn(0.5 * nn, 0.5 * (p - 2.0)));
            c.b_star = c.c_n / c.c_n_star;
            if (p > 4.0) {
                c.c_n_dstar = (p + nn - 2.0) * (p + nn - 4.0) *
                              std::exp(log_gamma(0.5 * nn) - lppi) /
                              (p * p * beta_fn(0.5 * nn, 0.5 * (p - 4.0)));
                c.b_dstar = c.c_n / c.c_n_dstar;
            } else {
                c.has_dstar = false;
                c.c_n_dstar = c.b_dstar =
                    std::numeric_limits<double>::quiet_NaN();
            }
            break;
        }
        case FamilyKind::Logistic: {
            double base = std::pow(2.0 * pi, -0.5 * nn);
            c.c_n = base / hurwitz_lerch_psi(2.0, -1.0, 0.5 * nn, 1.0);
            c.c_n_star = base / hurwitz_lerch_psi(1.0, -1.0, 0.5 * nn, 1.0);
            c.c_n_dstar =
                base / hurwitz_lerch_psi(1.0, -1.0, 0.5 * nn + 1.0, 1.0);
            c.b_star = c.c_n / c.c_n_star;
            c.b_dstar = c.c_n / c.c_n_dstar;
            break;
        }
        case FamilyKind::Laplace: {
            double base = std::exp(log_gamma(0.5 * nn)) /
                          (2.0 * std::pow(pi, 0.5 * nn));
            c.c_n = base / std::exp(log_gamma(nn));
            c.c_n_star = nn * base / std::exp(log_gamma(nn + 2.0));
            c.c_n_dstar = nn * (nn + 2.0) * base / std::exp(log_gamma(nn + 4.0));
            c.b_star = c.c_n / c.c_n_star;
            c.b_dstar = c.c_n / c.c_n_dstar;
            break;
        }
        case FamilyKind::Custom: {
            GeneratorTriple tr = generator_triple(family, n);
            c.c_n = pref / radial_moment_integral(tr.g, n);
            c.c_n_star = pref / radial_moment_integral(tr.g_bar, n);
            c.c_n_dstar = pref / radial_moment_integral(tr.g_dbar, n);
            c.b_star = c.c_n / c.c_n_star;
            c.b_dstar = c.c_n / c.c_n_dstar;
            break;
        }
    }

    // Independent quadrature recomputation; skipped for Custom, where
    // quadrature IS the primary route.
    if (family.kind != FamilyKind::Custom) {
        GeneratorTriple tr = generator_triple(family, n);
        double q_c = pref / radial_moment_integral(tr.g, n);
        double q_cs = pref / radial_moment_integral(tr.g_bar, n);
        double worst = std::max(std::abs(q_c / c.c_n - 1.0),
                                std::abs(q_cs / c.c_n_star - 1.0));
        if (c.has_dstar) {
            double q_css = pref / radial_moment_integral(tr.g_dbar, n);
            worst = std::max(worst, std::abs(q_css / c.c_n_dstar - 1.0));
        }
        c.cross_check_rel_err = worst;
    }
    return c;
}

/// Generator triples of the associated distributions X* and X**, whose base
/// densities are g_bar and g_dbar of the source family. The cumulative
/// generators of X* start with g_dbar exactly; anything deeper is filled by
/// numeric tail integration.
struct AssociatedTriples {
    GeneratorTriple star;
    GeneratorTriple dstar;
    double c_star = 0.0;   // normalizing constant of X*'s base density
    double c_dstar = 0.0;  // of X**'s
};

inline AssociatedTriples associated_families(const GeneratorFamily& family,
                                             std::size_t n) {
    GeneratorTriple tr = generator_triple(family, n);
    NormalizingConstants c = normalizing_constants(family, n);
    if (!c.has_dstar)
        throw validity_error("associated_families: X** gate (p > 4) fails");
    AssociatedTriples out;
    out.c_star = c.c_n_star;
    out.c_dstar = c.c_n_dstar;

    out.star.n = n;
    out.star.g = tr.g_bar;
    out.star.g_bar = tr.g_dbar;
    auto tail_of = [](std::function<double(double)> f) {
        return [f = std::move(f)](double t) {
            return integrate_to_infinity(
                [&](double v) { return f(t + v); }, 1e-9);
        };
    };
    out.star.g_dbar = tail_of(tr.g_dbar);

    out.dstar.n = n;
    out.dstar.g = tr.g_dbar;
    out.dstar.g_bar = tail_of(tr.g_dbar);
    out.dstar.g_dbar = tail_of(out.dstar.g_bar);
    return out;
}

}  // namespace ellipmoment
