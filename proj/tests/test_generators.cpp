#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ellipmoment/generator_families.hpp"

using namespace ellipmoment;
using Catch::Approx;

TEST_CASE("family grammar") {
    CHECK(parse_family("normal").kind == FamilyKind::Normal);
    CHECK(parse_family("logistic").kind == FamilyKind::Logistic);
    CHECK(parse_family("laplace").kind == FamilyKind::Laplace);
    auto t = parse_family("t(p=6.5)");
    CHECK(t.kind == FamilyKind::StudentT);
    CHECK(t.p == Approx(6.5));
    CHECK_THROWS_AS(parse_family("cauchy"), validity_error);
    CHECK_THROWS_AS(parse_family("t(p=)"), std::exception);
    CHECK_THROWS_AS(parse_family("t(p=6)x"), validity_error);
    CHECK_THROWS_AS(GeneratorFamily::student_t(-1.0), validity_error);
}

TEST_CASE("closed-form generator triples") {
    auto nrm = generator_triple(GeneratorFamily::normal(), 3);
    CHECK(nrm.g(1.0) == Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(nrm.g_bar(1.0) == Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(nrm.g_dbar(1.0) == Approx(std::exp(-1.0)).epsilon(1e-15));

    auto lap = generator_triple(GeneratorFamily::laplace(), 2);
    CHECK(lap.g_bar(0.0) == Approx(1.0).epsilon(1e-14));
    CHECK(lap.g_dbar(0.0) == Approx(3.0).epsilon(1e-14));

    auto t6 = generator_triple(GeneratorFamily::student_t(6.0), 2);
    // tail integral of g from 1, done with a plain shifted quadrature
    double num = integrate(
        [](double v) { return std::pow(1.0 + 2.0 * (1.0 + v) / 6.0, -4.0); },
        0.0, 50000.0, 1e-12);
    CHECK(t6.g_bar(1.0) == Approx(num).epsilon(1e-9));
}

TEST_CASE("cumulative generators really are tail integrals") {
    // derivative of g_dbar reproduces -g_bar, derivative of g_bar is -g
    for (auto fam : {GeneratorFamily::normal(), GeneratorFamily::student_t(7.0),
                     GeneratorFamily::logistic(), GeneratorFamily::laplace()}) {
        auto tr = generator_triple(fam, 2);
        for (double t : {0.1, 1.0, 5.0}) {
            double h = 1e-5;
            double dbar = (tr.g_bar(t + h) - tr.g_bar(t - h)) / (2.0 * h);
            CHECK(std::abs(dbar + tr.g(t)) < 1e-6);
            double ddbar = (tr.g_dbar(t + h) - tr.g_dbar(t - h)) / (2.0 * h);
            CHECK(std::abs(ddbar + tr.g_bar(t)) < 1e-6);
        }
    }
}

TEST_CASE("generator chain is nonnegative and nonincreasing") {
    for (auto fam : {GeneratorFamily::normal(), GeneratorFamily::student_t(9.0),
                     GeneratorFamily::logistic(), GeneratorFamily::laplace()}) {
        auto tr = generator_triple(fam, 3);
        double prev_g = tr.g(0.0), prev_b = tr.g_bar(0.0),
               prev_d = tr.g_dbar(0.0);
        for (double t = 0.25; t < 20.0; t += 0.25) {
            CHECK(tr.g(t) >= 0.0);
            CHECK(tr.g(t) <= prev_g + 1e-15);
            CHECK(tr.g_bar(t) <= prev_b + 1e-15);
            CHECK(tr.g_dbar(t) <= prev_d + 1e-15);
            prev_g = tr.g(t);
            prev_b = tr.g_bar(t);
            prev_d = tr.g_dbar(t);
        }
    }
}

TEST_CASE("radial_moment_integral closed cases") {
    CHECK(radial_moment_integral([](double t) { return std::exp(-t); }, 4) ==
          Approx(1.0).epsilon(1e-11));
    CHECK(radial_moment_integral([](double t) { return std::exp(-t); }, 3) ==
          Approx(std::sqrt(pi) / 2.0).epsilon(1e-11));
    CHECK(radial_moment_integral(
              [](double t) { return std::pow(1.0 + t / 3.0, -4.0); }, 2) ==
          Approx(1.0).epsilon(1e-11));
}

TEST_CASE("normalizing constants reference values") {
    auto lg2 = normalizing_constants(GeneratorFamily::logistic(), 2);
    CHECK(lg2.c_n == Approx(1.0 / pi).epsilon(1e-10));
    CHECK(lg2.b_star == Approx(2.0 * std::log(2.0)).epsilon(1e-10));
    CHECK(lg2.b_dstar == Approx(pi * pi / 6.0).epsilon(1e-10));

    for (int n = 1; n <= 5; ++n) {
        auto lp = normalizing_constants(GeneratorFamily::laplace(), n);
        CHECK(lp.b_star == Approx(n + 1.0).epsilon(1e-12));
        CHECK(lp.b_dstar == Approx((n + 1.0) * (n + 3.0)).epsilon(1e-12));
    }
    auto lp2 = normalizing_constants(GeneratorFamily::laplace(), 2);
    CHECK(lp2.c_n == Approx(1.0 / (2.0 * pi)).epsilon(1e-12));

    auto nm = normalizing_constants(GeneratorFamily::normal(), 4);
    CHECK(nm.b_star == 1.0);
    CHECK(nm.b_dstar == 1.0);
    CHECK(nm.c_n == Approx(std::pow(2.0 * pi, -2.0)).epsilon(1e-14));

    auto t6 = normalizing_constants(GeneratorFamily::student_t(6.0), 3);
    CHECK(t6.b_star == Approx(1.5).epsilon(1e-12));
    CHECK(t6.b_dstar == Approx(4.5).epsilon(1e-12));
}

TEST_CASE("constants cross-check against quadrature") {
    for (auto fam : {GeneratorFamily::normal(), GeneratorFamily::student_t(5.0),
                     GeneratorFamily::student_t(10.0), GeneratorFamily::laplace()})
        for (int n : {1, 2, 3, 5})
            CHECK(normalizing_constants(fam, n).cross_check_rel_err < 1e-9);
    for (int n : {1, 2, 3, 5})
        CHECK(normalizing_constants(GeneratorFamily::logistic(), n)
                  .cross_check_rel_err < 1e-7);
}

TEST_CASE("ratio identities hold definitionally") {
    for (auto fam : {GeneratorFamily::student_t(8.0), GeneratorFamily::logistic(),
                     GeneratorFamily::laplace()}) {
        auto c = normalizing_constants(fam, 3);
        CHECK(c.b_star == Approx(c.c_n / c.c_n_star).epsilon(1e-14));
        CHECK(c.b_dstar == Approx(c.c_n / c.c_n_dstar).epsilon(1e-14));
        CHECK(c.c_n > 0.0);
        CHECK(c.c_n_star > 0.0);
        CHECK(c.c_n_dstar > 0.0);
    }
}

TEST_CASE("b_star equals the variance scale from quadrature") {
    for (auto fam : {GeneratorFamily::normal(), GeneratorFamily::student_t(6.0),
                     GeneratorFamily::logistic(), GeneratorFamily::laplace()}) {
        for (int n : {2, 3}) {
            auto tr = generator_triple(fam, n);
            auto c = normalizing_constants(fam, n);
            CHECK(variance_scale_by_quadrature(tr.g, n) ==
                  Approx(c.b_star).epsilon(1e-9));
        }
    }
}

TEST_CASE("b_star dimension-independence where the family shares one "
          "characteristic generator") {
    // holds for normal and StudentT; the logistic/laplace generators reuse
    // the same g for every n and so describe different characteristic
    // generators per dimension
    for (auto fam : {GeneratorFamily::normal(), GeneratorFamily::student_t(7.0)}) {
        double lo = 1e300, hi = -1e300;
        for (int n = 1; n <= 6; ++n) {
            double b = normalizing_constants(fam, n).b_star;
            lo = std::min(lo, b);
            hi = std::max(hi, b);
        }
        CHECK(hi - lo < 1e-9);
    }
}

TEST_CASE("StudentT degree-of-freedom gates") {
    CHECK_THROWS_AS(generator_triple(GeneratorFamily::student_t(2.0), 2),
                    validity_error);
    CHECK_THROWS_AS(normalizing_constants(GeneratorFamily::student_t(1.5), 2),
                    validity_error);

    // p in (2, 4]: X* material exists, X** is refused
    auto tr = generator_triple(GeneratorFamily::student_t(3.0), 2);
    CHECK(tr.g_bar(1.0) > 0.0);
    CHECK_THROWS_AS(tr.g_dbar(1.0), validity_error);
    auto c = normalizing_constants(GeneratorFamily::student_t(3.0), 2);
    CHECK(c.b_star == Approx(3.0).epsilon(1e-12));
    CHECK_FALSE(c.has_dstar);
}

TEST_CASE("custom family goes through the numeric path") {
    // custom generator equal to the Laplace one; constants must match the
    // closed forms
    auto fam = GeneratorFamily::custom(
        [](double t) { return std::exp(-std::sqrt(2.0 * t)); });
    auto c = normalizing_constants(fam, 2);
    auto ref = normalizing_constants(GeneratorFamily::laplace(), 2);
    CHECK(c.c_n == Approx(ref.c_n).epsilon(1e-8));
    CHECK(c.b_star == Approx(ref.b_star).epsilon(1e-6));
    CHECK(c.b_dstar == Approx(ref.b_dstar).epsilon(1e-5));

    auto tr = generator_triple(fam, 2);
    auto rtr = generator_triple(GeneratorFamily::laplace(), 2);
    for (double t : {0.1, 0.7, 2.0, 9.0}) {
        CHECK(tr.g_bar(t) == Approx(rtr.g_bar(t)).epsilon(1e-6));
        CHECK(tr.g_dbar(t) == Approx(rtr.g_dbar(t)).epsilon(1e-5));
    }
}

TEST_CASE("associated families repackage the cumulative generators") {
    auto pair = associated_families(GeneratorFamily::laplace(), 2);
    auto base = generator_triple(GeneratorFamily::laplace(), 2);
    CHECK(pair.star.g(1.0) == Approx(base.g_bar(1.0)).epsilon(1e-12));
    CHECK(pair.dstar.g(1.0) == Approx(base.g_dbar(1.0)).epsilon(1e-12));
    // X* base density integrates to 1 under its own constant
    auto c = normalizing_constants(GeneratorFamily::laplace(), 2);
    double mass = c.c_n_star * 2.0 * pi *
                  radial_moment_integral(pair.star.g, 2) /
                  std::exp(log_gamma(1.0));
    CHECK(mass == Approx(1.0).epsilon(1e-9));
}
