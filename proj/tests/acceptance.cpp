// Acceptance gate: one line per criterion, nonzero exit if any fail.
// Budgets are chosen to finish within the stated runtime bounds on a single
// core; every stochastic bound uses an explicit error bar.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ellipmoment/ellipmoment.hpp"

using namespace ellipmoment;

namespace {

int failures = 0;

void report(int idx, bool pass, const std::string& what) {
    std::printf("criterion %d: %s — %s\n", idx, pass ? "PASS" : "FAIL",
                what.c_str());
    if (!pass) ++failures;
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::vector<GeneratorFamily> all_families() {
    return {GeneratorFamily::normal(),      GeneratorFamily::student_t(5.0),
            GeneratorFamily::student_t(6.0), GeneratorFamily::student_t(10.0),
            GeneratorFamily::logistic(),     GeneratorFamily::laplace()};
}

// ---- criterion 1: closed-form constants vs radial quadrature --------------

void criterion_constants() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    for (const auto& fam : all_families())
        for (int n : {1, 2, 3, 5}) {
            double tol = fam.kind == FamilyKind::Logistic ? 1e-7 : 1e-9;
            double err = normalizing_constants(fam, n).cross_check_rel_err;
            if (!(err < tol)) ok = false;
        }
    double dt = seconds_since(t0);
    bool in_time = dt < 5.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "constants cross-check, 6 families x 4 dims (%.2f s, "
                  "budget 5 s)",
                  dt);
    report(1, ok && in_time, buf);
}

// ---- criterion 2: reference constant values -------------------------------

void criterion_reference_values() {
    bool ok = true;
    auto close = [](double a, double b, double tol) {
        return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
    };
    ok = ok && close(normalizing_constants(GeneratorFamily::logistic(), 2).c_n,
                     1.0 / pi, 1e-10);
    for (int n = 1; n <= 5; ++n) {
        auto c = normalizing_constants(GeneratorFamily::laplace(), n);
        ok = ok && close(c.b_star, n + 1.0, 1e-10);
        ok = ok && close(c.b_dstar, (n + 1.0) * (n + 3.0), 1e-10);
    }
    auto cn = normalizing_constants(GeneratorFamily::normal(), 3);
    ok = ok && cn.b_star == 1.0 && cn.b_dstar == 1.0;
    report(2, ok,
           "reference values: logistic c2 = 1/pi, laplace b* = n+1 and "
           "b** = (n+1)(n+3), normal b* = b** = 1");
}

// ---- criterion 3: covariance scaling at 2e6 draws -------------------------

void criterion_covariance() {
    auto t0 = std::chrono::steady_clock::now();
    const std::size_t N = 2000000;
    SymMatrix s(2);
    s.set(0, 0, 2.0);
    s.set(1, 1, 2.0);
    s.set(0, 1, 1.0);
    Vector mu{0.0, 0.0};
    bool ok = true;
    for (const auto& fam : all_families()) {
        auto d = make_elliptical(mu, s, fam);
        // the error bar of a second-moment estimator needs a finite fourth
        // moment; the t(5)/t(6) associated laws have tail index p-2 <= 4, so
        // the X* leg is checked only where that fourth moment exists
        bool star_checkable = !(fam.kind == FamilyKind::StudentT &&
                                fam.p <= 6.0);
        auto star = associated_star(d);
        for (int which = 0; which < (star_checkable ? 2 : 1); ++which) {
            const auto& dd = which == 0 ? d : star;
            double scale = which == 0 ? d.constants.b_star
                                      : d.constants.b_dstar /
                                            d.constants.b_star;
            auto xs = sample(dd, 42 + which, N);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j <= i; ++j) {
                    MeanVar mv;
                    for (const auto& x : xs) mv.add(x[i] * x[j]);
                    if (std::abs(mv.mean() - scale * s(i, j)) >
                        3.0 * mv.stderr_of_mean())
                        ok = false;
                }
        }
    }
    double dt = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "sample covariance = b* Sigma and Cov(X*) = (b**/b*) Sigma "
                  "within 3 stderr at 2e6 draws (%.1f s, budget 60 s; X* leg "
                  "skipped for t(5), t(6) whose fourth moments diverge)",
                  dt);
    report(3, ok && dt < 60.0, buf);
}

// ---- criterion 4: StudentT scale constants by quadrature ------------------

void criterion_t_adjudication() {
    bool ok = true;
    for (double p : {5.0, 6.0, 10.0}) {
        auto tr = generator_triple(GeneratorFamily::student_t(p), 3);
        double slope = variance_scale_by_quadrature(tr.g, 3);
        double slope2 = variance_scale_by_quadrature(tr.g_bar, 3);
        double want_b = p / (p - 2.0);
        double want_bd = p * p / ((p - 2.0) * (p - 4.0));
        ok = ok && std::abs(slope - want_b) <= 1e-9 * want_b;
        ok = ok && std::abs(slope * slope2 - want_bd) <= 1e-9 * want_bd;
        // the alternative simplifications must be cleanly rejected
        ok = ok && std::abs(slope - p * p / (p - 2.0)) >
                       1e-3 * (p * p / (p - 2.0));
        ok = ok && std::abs(slope * slope2 - p / ((p - 2.0) * (p - 4.0))) >
                       1e-3 * want_bd;
    }
    // the self-check report carries both candidate values side by side
    VerifyOptions vo;
    vo.include_mc = false;
    auto rep = run_verification(vo);
    std::size_t rows = 0;
    bool in_report = rep.section_pass("t-scale/", &rows) && rows == 12;
    report(4, ok && in_report,
           "quadrature fixes b*(t,p) = p/(p-2) and b**(t,p) = "
           "p^2/((p-2)(p-4)); alternatives rejected and recorded in the "
           "verification report");
}

// ---- criterion 5: identity vs direct MC at 1e6 samples --------------------

SmoothFunction f_x2sq() {
    SmoothFunction f;
    f.eval = [](const Vector& x) { return x[1] * x[1]; };
    f.grad = [](const Vector& x) {
        Vector g(x.size(), 0.0);
        g[1] = 2.0 * x[1];
        return g;
    };
    f.hess = [](const Vector& x) {
        SymMatrix h(x.size());
        h.set(1, 1, 2.0);
        return h;
    };
    return f;
}

SmoothFunction f_gauss() {
    SmoothFunction f;
    auto v = [](const Vector& x) {
        double q = 0.0;
        for (double xi : x) q += xi * xi;
        return std::exp(-0.25 * q);
    };
    f.eval = v;
    f.grad = [v](const Vector& x) {
        double e = v(x);
        Vector g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = -0.5 * x[i] * e;
        return g;
    };
    f.hess = [v](const Vector& x) {
        double e = v(x);
        SymMatrix h(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            h.set(i, i, (0.25 * x[i] * x[i] - 0.5) * e);
            for (std::size_t j = 0; j < i; ++j)
                h.set(i, j, 0.25 * x[i] * x[j] * e);
        }
        return h;
    };
    return f;
}

SmoothFunction f_sin12() {
    SmoothFunction f;
    f.eval = [](const Vector& x) { return std::sin(x[0] + x[1]); };
    f.grad = [](const Vector& x) {
        Vector g(x.size(), 0.0);
        g[0] = g[1] = std::cos(x[0] + x[1]);
        return g;
    };
    f.hess = [](const Vector& x) {
        SymMatrix h(x.size());
        double s = -std::sin(x[0] + x[1]);
        h.set(0, 0, s);
        h.set(1, 1, s);
        h.set(0, 1, s);
        return h;
    };
    return f;
}

void criterion_identity_vs_mc() {
    auto t0 = std::chrono::steady_clock::now();
    const std::size_t N = 1000000;
    std::vector<GeneratorFamily> fams = {
        GeneratorFamily::normal(), GeneratorFamily::student_t(9.0),
        GeneratorFamily::laplace(), GeneratorFamily::logistic()};
    std::vector<SmoothFunction> fs = {f_x2sq(), f_gauss(), f_sin12()};
    bool ok = true;
    std::uint64_t seed = 4200;
    for (const auto& fam : fams)
        for (int n : {2, 3}) {
            Vector mu(n, 0.2);
            mu[0] = -0.3;
            SymMatrix s(n);
            for (int i = 0; i < n; ++i) {
                s.set(i, i, 1.0 + 0.2 * i);
                for (int j = 0; j < i; ++j) s.set(i, j, 0.25);
            }
            auto d = make_elliptical(mu, s, fam);
            for (const auto& f : fs) {
                Budget b;
                b.samples = N;
                b.seed = ++seed;
                auto est = x1sq_moment_thm1(d, f, b);
                auto direct = mc_expectation(
                    d,
                    [&](const Vector& x) { return x[0] * x[0] * f.eval(x); },
                    N, seed + 5000);
                double bar =
                    3.0 * std::hypot(est.std_error, direct.stderr_of_mean);
                if (std::abs(est.value - direct.mean) > bar) ok = false;
            }
        }
    double dt = seconds_since(t0);
    char buf[180];
    std::snprintf(buf, sizeof(buf),
                  "identity vs direct MC, 4 families x n in {2,3} x 3 test "
                  "functions, 1e6 samples each, 3 combined stderr (%.0f s, "
                  "budget 600 s)",
                  dt);
    report(5, ok && dt < 600.0, buf);
}

// ---- criterion 6: direct and Stein combinations coincide ------------------

void criterion_equivalence() {
    SplitRng rng(42, 901);
    auto fams = all_families();
    double worst = 0.0;
    for (std::size_t k = 0; k < 200; ++k) {
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
        worst = std::max(worst, std::abs(v1 - v2) / (1.0 + std::abs(v1)));
    }
    report(6, worst <= 1e-12,
           "direct and Stein-route combinations agree to 1e-12 on 200 seeded "
           "instances with injected inner expectations (n <= 5)");
}

// ---- criterion 7: Gaussian recursion vs pair partitions -------------------

void criterion_gaussian_recursion() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    SplitRng rng(42, 700);
    for (int inst = 0; inst < 50; ++inst) {
        int n = 1 + inst % 4;
        SymMatrix s = detail::random_pd(rng, n);
        Vector mu(n);
        for (auto& v : mu) v = rng.normal();
        // every exponent vector with total degree <= 8
        std::vector<int> p(n, 0);
        std::function<void(int, int)> walk = [&](int i, int left) {
            if (i == n) {
                MonomialExponents e{p};
                double rec = normal_product_moment(mu, s, e);
                double wick = isserlis_moment(mu, s, e);
                if (std::abs(rec - wick) >
                    1e-9 * std::max(1.0, std::abs(wick)))
                    ok = false;
                return;
            }
            for (int v = 0; v <= left; ++v) {
                p[i] = v;
                walk(i + 1, left - v);
            }
            p[i] = 0;
        };
        walk(0, 8);
    }
    double dt = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "degree recursion matches pair-partition sums for all "
                  "exponents of degree <= 8, n <= 4, 50 seeded instances "
                  "(%.1f s, budget 30 s)",
                  dt);
    report(7, ok && dt < 30.0, buf);
}

// ---- criterion 8: radial sampler Kolmogorov-Smirnov -----------------------

void criterion_radial_ks() {
    const std::size_t N = 100000;
    const double crit = 1.63 / std::sqrt(static_cast<double>(N));
    bool ok = true;
    for (const auto& fam : all_families())
        for (int n : {2, 5}) {
            Vector mu(n, 0.25);
            SymMatrix s(n);
            for (int i = 0; i < n; ++i) {
                s.set(i, i, 1.0 + 0.1 * i);
                for (int j = 0; j < i; ++j) s.set(i, j, 0.15);
            }
            auto d = make_elliptical(mu, s, fam);
            auto xs = sample(d, 42 + n, N);
            std::vector<double> radii(N);
            for (std::size_t k = 0; k < N; ++k) {
                Vector diff(n);
                for (int i = 0; i < n; ++i) diff[i] = xs[k][i] - mu[i];
                Vector y = forward_solve(d.factor, diff);
                double r2 = 0.0;
                for (double v : y) r2 += v * v;
                radii[k] = std::sqrt(r2);
            }
            std::sort(radii.begin(), radii.end());
            double ks = 0.0;
            for (std::size_t k = 0; k < N; ++k) {
                double F = d.radial.cdf(radii[k]);
                ks = std::max({ks, (k + 1.0) / N - F,
                               F - static_cast<double>(k) / N});
            }
            if (!(ks < crit)) ok = false;
        }
    report(8, ok,
           "KS statistic of 1e5 Mahalanobis radii below the 1% critical value "
           "for every family at n in {2, 5}");
}

// ---- criterion 9: constant-f collapse -------------------------------------

void criterion_constant_f() {
    SmoothFunction one;
    one.eval = [](const Vector&) { return 1.0; };
    one.grad = [](const Vector& x) { return Vector(x.size(), 0.0); };
    one.hess = [](const Vector& x) { return SymMatrix(x.size()); };
    SplitRng rng(42, 902);
    auto fams = all_families();
    bool ok = true;
    for (std::size_t k = 0; k < 20; ++k) {
        const auto& fam = fams[k % fams.size()];
        std::size_t n = 1 + (rng.next_u64() % 4);
        SymMatrix s = detail::random_pd(rng, n);
        Vector mu(n);
        for (auto& v : mu) v = rng.normal();
        auto d = make_elliptical(mu, s, fam);
        if (!d.constants.has_dstar) continue;
        Budget b;
        b.samples = 512;
        b.seed = 42 + k;
        auto est = x1sq_moment_thm1(d, one, b);
        double want = s(0, 0) * d.constants.b_star + mu[0] * mu[0];
        if (std::abs(est.value - want) >
            1e-12 * std::max(1.0, std::abs(want)))
            ok = false;
        if (est.std_error > 1e-12) ok = false;
    }
    report(9, ok,
           "f = 1 collapses to sigma11 b* + mu1^2 to 1e-12 with zero "
           "standard error, 20 seeded instances");
}

// ---- criterion 10: CLI determinism ----------------------------------------

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void criterion_cli_determinism() {
    const std::string cli = ELLIPMOMENT_CLI_PATH;
    const std::string r1 = "/tmp/em_accept_v1.json";
    const std::string r2 = "/tmp/em_accept_v2.json";
    auto run = [&](const std::string& out) {
        int rc = std::system((cli + " verify --seed 42 --samples 20000 --out " +
                              out + " 2>/dev/null")
                                 .c_str());
        return WEXITSTATUS(rc);
    };
    int e1 = run(r1);
    int e2 = run(r2);
    std::string a = slurp(r1), b = slurp(r2);
    bool ok = e1 == 0 && e2 == 0 && !a.empty() && a == b &&
              a.find("\"all_pass\": true") != std::string::npos;
    std::remove(r1.c_str());
    std::remove(r2.c_str());
    report(10, ok,
           "two `verify --seed 42` runs give byte-identical reports, exit "
           "code 0 on a passing suite");
}

}  // namespace

int main() {
    criterion_constants();
    criterion_reference_values();
    criterion_covariance();
    criterion_t_adjudication();
    criterion_identity_vs_mc();
    criterion_equivalence();
    criterion_gaussian_recursion();
    criterion_radial_ks();
    criterion_constant_f();
    criterion_cli_determinism();
    if (failures) std::printf("%d criteria FAILED\n", failures);
    else std::printf("all 10 criteria passed\n");
    return failures ? 1 : 0;
}
