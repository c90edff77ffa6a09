#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "ellipmoment/common.hpp"
#include "ellipmoment/elliptical.hpp"
#include "ellipmoment/generator_families.hpp"
#include "ellipmoment/moments.hpp"
#include "ellipmoment/oracles.hpp"

namespace ellipmoment {

inline constexpr const char* kVersion = "1.0.0";

struct CheckRow {
    std::string name;
    std::string family;
    int n = 0;
    double expected = 0.0;
    double got = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

namespace detail {

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace detail

/// Ordered, reproducible report: identical inputs and seed give identical
/// bytes. Timing is deliberately not part of the payload (it goes to stderr).
struct VerificationReport {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::vector<CheckRow> rows;

    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }

    /// Rows whose name starts with the given section prefix all pass.
    bool section_pass(const std::string& prefix, std::size_t* count = nullptr) const {
        bool ok = true;
        std::size_t c = 0;
        for (const auto& r : rows)
            if (r.name.rfind(prefix, 0) == 0) {
                ++c;
                ok = ok && r.pass;
            }
        if (count) *count = c;
        return ok && c > 0;
    }

    std::string to_json() const {
        std::string s = "{\n  \"metadata\": {\"seed\": " + std::to_string(seed) +
                        ", \"samples\": " + std::to_string(samples) +
                        ", \"version\": \"" + kVersion + "\"},\n  \"checks\": [\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const CheckRow& r = rows[i];
            s += "    {\"name\": \"" + detail::json_escape(r.name) +
                 "\", \"family\": \"" + detail::json_escape(r.family) +
                 "\", \"n\": " + std::to_string(r.n) +
                 ", \"expected\": " + detail::fmt_real(r.expected) +
                 ", \"got\": " + detail::fmt_real(r.got) +
                 ", \"tolerance\": " + detail::fmt_real(r.tolerance) +
                 ", \"pass\": " + (r.pass ? "true" : "false") + "}";
            s += (i + 1 < rows.size()) ? ",\n" : "\n";
        }
        s += "  ],\n  \"all_pass\": ";
        s += all_pass() ? "true" : "false";
        s += "\n}\n";
        return s;
    }
};

struct VerifyOptions {
    std::uint64_t seed = 42;
    std::size_t mc_samples = 200000;   // identity-vs-MC consistency runs
    std::size_t cov_draws = 200000;    // covariance-scaling runs
    std::size_t ks_draws = 100000;     // radial sampler goodness of fit
    std::size_t equiv_instances = 200; // injected-expectation equivalence
    std::size_t collapse_instances = 20;
    bool include_mc = true;            // skip the stochastic sections if false
};

namespace detail {

inline CheckRow row_close(std::string name, std::string family, int n,
                          double expected, double got, double tol) {
    CheckRow r;
    r.name = std::move(name);
    r.family = std::move(family);
    r.n = n;
    r.expected = expected;
    r.got = got;
    r.tolerance = tol;
    r.pass = std::abs(got - expected) <=
             tol * std::max(1.0, std::abs(expected));
    return r;
}

/// Absolute-difference row (tolerance applied to |got - expected| directly).
inline CheckRow row_abs(std::string name, std::string family, int n,
                        double expected, double got, double tol) {
    CheckRow r;
    r.name = std::move(name);
    r.family = std::move(family);
    r.n = n;
    r.expected = expected;
    r.got = got;
    r.tolerance = tol;
    r.pass = std::abs(got - expected) <= tol;
    return r;
}

inline SymMatrix demo_sigma2() {
    SymMatrix s(2);
    s.set(0, 0, 1.3);
    s.set(1, 1, 0.9);
    s.set(0, 1, 0.4);
    return s;
}

inline SymMatrix random_pd(SplitRng& rng, std::size_t n) {
    // A A^T + 0.3 I with A entries standard normal
    std::vector<Vector> a(n, Vector(n));
    for (auto& row : a)
        for (auto& v : row) v = rng.normal();
    SymMatrix s(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double v = i == j ? 0.3 : 0.0;
            for (std::size_t k = 0; k < n; ++k) v += a[i][k] * a[j][k];
            s.set(i, j, v);
        }
    return s;
}

inline std::vector<GeneratorFamily> verify_families() {
    return {GeneratorFamily::normal(), GeneratorFamily::student_t(5.0),
            GeneratorFamily::student_t(6.0), GeneratorFamily::student_t(10.0),
            GeneratorFamily::logistic(), GeneratorFamily::laplace()};
}

}  // namespace detail

/// Build the full self-check report. Deterministic for fixed options.
inline VerificationReport run_verification(const VerifyOptions& opt = {}) {
    VerificationReport rep;
    rep.seed = opt.seed;
    rep.samples = opt.mc_samples;

    // --- constants: closed form vs radial quadrature ----------------------
    for (const auto& fam : detail::verify_families())
        for (int n : {1, 2, 3, 5}) {
            auto c = normalizing_constants(fam, n);
            double tol = fam.kind == FamilyKind::Logistic ? 1e-7 : 1e-9;
            rep.rows.push_back(detail::row_abs("constants/closed-vs-quadrature",
                                               fam.name(), n, 0.0,
                                               c.cross_check_rel_err, tol));
        }

    // --- reference values --------------------------------------------------
    {
        auto c2 = normalizing_constants(GeneratorFamily::logistic(), 2);
        rep.rows.push_back(detail::row_close("reference/logistic-c2",
                                             "logistic", 2, 1.0 / pi, c2.c_n,
                                             1e-10));
        for (int n = 1; n <= 5; ++n) {
            auto c = normalizing_constants(GeneratorFamily::laplace(), n);
            rep.rows.push_back(detail::row_close("reference/laplace-bstar",
                                                 "laplace", n, n + 1.0,
                                                 c.b_star, 1e-10));
            rep.rows.push_back(detail::row_close(
                "reference/laplace-bdstar", "laplace", n,
                (n + 1.0) * (n + 3.0), c.b_dstar, 1e-10));
        }
        auto cn = normalizing_constants(GeneratorFamily::normal(), 3);
        rep.rows.push_back(detail::row_abs("reference/normal-bstar", "normal",
                                           3, 1.0, cn.b_star, 0.0));
        rep.rows.push_back(detail::row_abs("reference/normal-bdstar", "normal",
                                           3, 1.0, cn.b_dstar, 0.0));
    }

    // --- StudentT scale constants: quadrature adjudicates between the two
    // candidate simplifications for b* and b** -----------------------------
    for (double p : {5.0, 6.0, 10.0}) {
        auto fam = GeneratorFamily::student_t(p);
        auto tr = generator_triple(fam, 3);
        double slope = variance_scale_by_quadrature(tr.g, 3);
        rep.rows.push_back(detail::row_close("t-scale/bstar-correct",
                                             fam.name(), 3, p / (p - 2.0),
                                             slope, 1e-9));
        CheckRow alt;
        alt.name = "t-scale/bstar-alt-rejected";
        alt.family = fam.name();
        alt.n = 3;
        alt.expected = p * p / (p - 2.0);
        alt.got = slope;
        alt.tolerance = 1e-9;
        alt.pass = std::abs(alt.got - alt.expected) >
                   1e-3 * std::abs(alt.expected);
        rep.rows.push_back(alt);

        // b** enters through the ratio b**/b* = -phi*'(0)
        double slope2 = variance_scale_by_quadrature(tr.g_bar, 3);
        double correct_bd = p * p / ((p - 2.0) * (p - 4.0));
        rep.rows.push_back(detail::row_close(
            "t-scale/bdstar-correct", fam.name(), 3, correct_bd,
            slope * slope2, 1e-9));
        CheckRow alt2;
        alt2.name = "t-scale/bdstar-alt-rejected";
        alt2.family = fam.name();
        alt2.n = 3;
        alt2.expected = p / ((p - 2.0) * (p - 4.0));
        alt2.got = slope * slope2;
        alt2.tolerance = 1e-9;
        alt2.pass = std::abs(alt2.got - alt2.expected) >
                    1e-3 * std::abs(correct_bd);
        rep.rows.push_back(alt2);
    }

    // --- Gaussian product moments: recursion vs pair partitions -----------
    {
        Vector mu{0.3, -0.2};
        SymMatrix s = detail::demo_sigma2();
        std::vector<std::vector<int>> cases = {
            {2, 0}, {2, 1}, {3, 1}, {4, 2}, {2, 3}, {5, 1}, {4, 4}};
        for (const auto& p : cases) {
            MonomialExponents e{p};
            double rec = normal_product_moment(mu, s, e);
            double wick = isserlis_moment(mu, s, e);
            std::string nm = "gaussian-product/p=" + std::to_string(p[0]) +
                             "," + std::to_string(p[1]);
            rep.rows.push_back(
                detail::row_close(nm, "normal", 2, wick, rec, 1e-12));
        }
    }

    // --- x1^2 and first-moment identities vs deterministic quadrature -----
    {
        std::vector<GeneratorFamily> fams = {
            GeneratorFamily::normal(), GeneratorFamily::student_t(10.0),
            GeneratorFamily::logistic(), GeneratorFamily::laplace()};
        Vector mu{0.4, -0.1};
        SymMatrix s = detail::demo_sigma2();
        SmoothFunction f;
        f.eval = [](const Vector& x) {
            return std::cos(0.7 * x[0]) + 0.3 * x[1] * x[1];
        };
        SmoothFunction h;
        h.eval = [](const Vector& x) {
            return std::exp(-0.25 * (x[0] * x[0] + x[1] * x[1]));
        };
        for (const auto& fam : fams) {
            auto d = make_elliptical(mu, s, fam);
            auto oracle = quad_expectation(d, [&](const Vector& x) {
                return x[0] * x[0] * f.eval(x);
            });
            Budget qb;
            qb.method = Budget::Method::Quadrature;
            auto est1 = x1sq_moment_thm1(d, f, qb);
            auto est2 = x1sq_moment_thm2(d, f, qb);
            rep.rows.push_back(detail::row_close("x1sq/direct-vs-quadrature",
                                                 fam.name(), 2, oracle,
                                                 est1.value, 1e-7));
            rep.rows.push_back(detail::row_close("x1sq/stein-vs-quadrature",
                                                 fam.name(), 2, oracle,
                                                 est2.value, 1e-7));
            auto first_oracle = quad_expectation(
                d, [&](const Vector& x) { return x[0] * h.eval(x); });
            auto first = stein_first_moment(d, h, qb);
            rep.rows.push_back(detail::row_close("x1-first/vs-quadrature",
                                                 fam.name(), 2, first_oracle,
                                                 first.value, 1e-7));
        }
    }

    // --- product-moment expansion adjudication: the derived term list takes
    // the gradient block under X*, a transcription variant takes it under
    // X**; Laplace with nonzero mean separates them and quadrature decides --
    {
        Vector mu{0.5, 0.2};
        SymMatrix s = detail::demo_sigma2();
        auto fam = GeneratorFamily::laplace();
        auto d = make_elliptical(mu, s, fam);
        // exponents chosen so the gradient of the inner monomial is itself
        // nonlinear; linear gradients cannot separate X* from X**
        MonomialExponents e{{4, 1}};
        auto oracle = quad_expectation(d, [](const Vector& x) {
            return x[0] * x[0] * x[0] * x[0] * x[1];
        });
        Budget qb;
        qb.method = Budget::Method::Quadrature;
        auto derived = product_moment(d, e, qb);
        rep.rows.push_back(detail::row_close("product-expansion/derived",
                                             fam.name(), 2, oracle,
                                             derived.value, 1e-7));

        auto [star, dstar] = associated_distributions(d);
        SmoothFunction f = detail::monomial_function({2, 1});
        InnerExpectations in;
        in.f_base = quad_expectation(d, f.eval);
        in.f_star = quad_expectation(star, f.eval);
        in.grad_star.assign(2, 0.0);
        in.hess_dstar.assign(4, 0.0);
        for (std::size_t i = 0; i < 2; ++i) {
            in.grad_star[i] = quad_expectation(
                dstar, [&](const Vector& x) { return f.gradient(x)[i]; });
            for (std::size_t j = 0; j < 2; ++j)
                in.hess_dstar[i * 2 + j] = quad_expectation(
                    dstar,
                    [&](const Vector& x) { return f.hessian(x)(i, j); });
        }
        double variant = thm1_combine(mu, s, d.constants.b_star,
                                      d.constants.b_dstar, in);
        CheckRow var;
        var.name = "product-expansion/variant-rejected";
        var.family = fam.name();
        var.n = 2;
        var.expected = oracle;
        var.got = variant;
        var.tolerance = 1e-7;
        var.pass =
            std::abs(variant - oracle) > 1e-4 * std::max(1.0, std::abs(oracle));
        rep.rows.push_back(var);
    }

    // --- direct and Stein combinations agree when fed identical inner
    // expectations ---------------------------------------------------------
    {
        SplitRng rng(opt.seed, 901);
        auto fams = detail::verify_families();
        double worst = 0.0;
        for (std::size_t k = 0; k < opt.equiv_instances; ++k) {
            std::size_t n = 1 + (rng.next_u64() % 5);
            SymMatrix s = detail::random_pd(rng, n);
            Vector mu(n);
            for (auto& v : mu) v = rng.normal();
            auto c = normalizing_constants(fams[k % fams.size()], n);
            InnerExpectations in;
            in.f_base = rng.normal();
            in.f_star = rng.normal();
            in.grad_star.resize(n);
            in.hess_dstar.resize(n * n);
            for (auto& v : in.grad_star) v = rng.normal();
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j <= i; ++j) {
                    double v = rng.normal();
                    in.hess_dstar[i * n + j] = v;
                    in.hess_dstar[j * n + i] = v;
                }
            double v1 = thm1_combine(mu, s, c.b_star, c.b_dstar, in);
            double v2 = thm2_combine(mu, s, c.b_star, c.b_dstar / c.b_star, in);
            worst = std::max(worst,
                             std::abs(v1 - v2) / (1.0 + std::abs(v1)));
        }
        rep.rows.push_back(detail::row_abs("equivalence/direct-vs-stein",
                                           "mixed", 5, 0.0, worst, 1e-12));
    }

    // --- constant-f collapse: f == 1 forces sigma11 b* + mu1^2 with zero
    // standard error -------------------------------------------------------
    {
        std::vector<GeneratorFamily> fams = {
            GeneratorFamily::normal(), GeneratorFamily::student_t(10.0),
            GeneratorFamily::logistic(), GeneratorFamily::laplace()};
        SmoothFunction one;
        one.eval = [](const Vector&) { return 1.0; };
        one.grad = [](const Vector& x) { return Vector(x.size(), 0.0); };
        one.hess = [](const Vector& x) { return SymMatrix(x.size()); };
        SplitRng rng(opt.seed, 902);
        double worst = 0.0, worst_se = 0.0;
        for (std::size_t k = 0; k < opt.collapse_instances; ++k) {
            const auto& fam = fams[k % fams.size()];
            std::size_t n = 1 + (rng.next_u64() % 4);
            SymMatrix s = detail::random_pd(rng, n);
            Vector mu(n);
            for (auto& v : mu) v = rng.normal();
            auto d = make_elliptical(mu, s, fam);
            Budget b;
            b.samples = 512;
            b.seed = opt.seed + k;
            auto est = x1sq_moment_thm1(d, one, b);
            double want = s(0, 0) * d.constants.b_star + mu[0] * mu[0];
            worst = std::max(worst, std::abs(est.value - want) /
                                        std::max(1.0, std::abs(want)));
            worst_se = std::max(worst_se, est.std_error);
        }
        rep.rows.push_back(detail::row_abs("constant-f/value", "mixed", 4, 0.0,
                                           worst, 1e-12));
        rep.rows.push_back(detail::row_abs("constant-f/zero-stderr", "mixed",
                                           4, 0.0, worst_se, 1e-12));
    }

    if (!opt.include_mc) return rep;

    // --- radial sampler goodness of fit (Kolmogorov-Smirnov) --------------
    {
        std::vector<GeneratorFamily> fams = {
            GeneratorFamily::normal(), GeneratorFamily::student_t(10.0),
            GeneratorFamily::logistic(), GeneratorFamily::laplace()};
        const std::size_t N = opt.ks_draws;
        const double crit = 1.63 / std::sqrt(static_cast<double>(N));
        for (const auto& fam : fams)
            for (int n : {2, 5}) {
                Vector mu(n, 0.25);
                SymMatrix s(n);
                for (int i = 0; i < n; ++i) {
                    s.set(i, i, 1.0 + 0.1 * i);
                    for (int j = 0; j < i; ++j) s.set(i, j, 0.15);
                }
                auto d = make_elliptical(mu, s, fam);
                auto xs = sample(d, opt.seed + n, N);
                std::vector<double> radii(N);
                for (std::size_t k = 0; k < N; ++k) {
                    Vector diff(n);
                    for (int i = 0; i < n; ++i)
                        diff[i] = xs[k][i] - mu[i];
                    Vector y = forward_solve(d.factor, diff);
                    double r2 = 0.0;
                    for (double v : y) r2 += v * v;
                    radii[k] = std::sqrt(r2);
                }
                std::sort(radii.begin(), radii.end());
                double ks = 0.0;
                for (std::size_t k = 0; k < N; ++k) {
                    double F = d.radial.cdf(radii[k]);
                    double hi = (k + 1.0) / N - F;
                    double lo = F - static_cast<double>(k) / N;
                    ks = std::max({ks, hi, lo});
                }
                rep.rows.push_back(detail::row_abs("radial-ks/sampler",
                                                   fam.name(), n, 0.0, ks,
                                                   crit));
            }
    }

    // --- covariance scaling: sample covariance vs b* Sigma, and Cov(X*) vs
    // (b**/b*) Sigma (the latter only where the product-moment variance that
    // drives the error bar exists) -----------------------------------------
    {
        std::vector<GeneratorFamily> fams = {
            GeneratorFamily::normal(), GeneratorFamily::student_t(10.0),
            GeneratorFamily::logistic(), GeneratorFamily::laplace()};
        SymMatrix s(2);
        s.set(0, 0, 2.0);
        s.set(1, 1, 2.0);
        s.set(0, 1, 1.0);
        Vector mu{0.0, 0.0};
        const std::size_t N = opt.cov_draws;
        for (const auto& fam : fams) {
            auto d = make_elliptical(mu, s, fam);
            auto star = associated_star(d);
            for (int which = 0; which < 2; ++which) {
                const auto& dd = which == 0 ? d : star;
                double scale = which == 0
                                   ? d.constants.b_star
                                   : d.constants.b_dstar / d.constants.b_star;
                auto xs = sample(dd, opt.seed + 7 + which, N);
                double worst_dev = 0.0;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j <= i; ++j) {
                        MeanVar mv;
                        for (const auto& x : xs) mv.add(x[i] * x[j]);
                        double dev = std::abs(mv.mean() - scale * s(i, j)) /
                                     (3.0 * mv.stderr_of_mean());
                        worst_dev = std::max(worst_dev, dev);
                    }
                rep.rows.push_back(detail::row_abs(
                    which == 0 ? "covariance/base-scaling"
                               : "covariance/star-scaling",
                    fam.name(), 2, 0.0, worst_dev, 1.0));
            }
        }
    }

    // --- Monte Carlo consistency of the x1^2 identity at n = 3 ------------
    {
        std::vector<GeneratorFamily> fams = {
            GeneratorFamily::normal(), GeneratorFamily::student_t(10.0),
            GeneratorFamily::logistic(), GeneratorFamily::laplace()};
        Vector mu{0.2, -0.3, 0.1};
        SymMatrix s(3);
        s.set(0, 0, 1.0);
        s.set(1, 1, 1.2);
        s.set(2, 2, 0.8);
        s.set(0, 1, 0.3);
        s.set(0, 2, -0.2);
        s.set(1, 2, 0.1);
        SmoothFunction f;
        f.eval = [](const Vector& x) {
            return 1.0 / (1.0 + x[0] * x[0] + 0.5 * x[1] * x[1] +
                          0.25 * x[2] * x[2]);
        };
        for (const auto& fam : fams) {
            auto d = make_elliptical(mu, s, fam);
            Budget mb;
            mb.samples = opt.mc_samples;
            mb.seed = opt.seed;
            auto est = x1sq_moment_thm1(d, f, mb);
            auto oracle = mc_expectation(
                d, [&](const Vector& x) { return x[0] * x[0] * f.eval(x); },
                opt.mc_samples, opt.seed + 1);
            double tol = 5.0 * std::hypot(est.std_error, oracle.stderr_of_mean);
            rep.rows.push_back(detail::row_abs("x1sq/mc-consistency",
                                               fam.name(), 3, oracle.mean,
                                               est.value, tol));
        }
    }

    return rep;
}

}  // namespace ellipmoment
