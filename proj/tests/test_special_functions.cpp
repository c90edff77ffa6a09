#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ellipmoment/special_functions.hpp"

using namespace ellipmoment;
using Catch::Approx;

TEST_CASE("log_gamma basics") {
    CHECK(log_gamma(0.5) == Approx(0.5 * std::log(pi)).epsilon(1e-14));
    CHECK(log_gamma(5.0) == Approx(std::log(24.0)).epsilon(1e-14));
    // reference value computed once with 50-digit arithmetic
    CHECK(log_gamma(10.5) ==
          Approx(13.940625219403763633161237887971849479799452804848)
              .epsilon(1e-14));
    CHECK_THROWS_AS(log_gamma(0.0), domain_error);
    CHECK_THROWS_AS(log_gamma(-2.0), domain_error);
}

TEST_CASE("log_gamma recurrence on [1, 100]") {
    for (double x = 1.0; x <= 100.0; x += 0.7) {
        double lhs = log_gamma(x + 1.0) - log_gamma(x);
        CHECK(std::abs(lhs - std::log(x)) <= 1e-12 * std::max(1.0, lhs));
    }
}

TEST_CASE("beta_fn values and symmetry") {
    CHECK(beta_fn(1.0, 1.0) == Approx(1.0).epsilon(1e-14));
    CHECK(beta_fn(2.0, 3.0) == Approx(1.0 / 12.0).epsilon(1e-13));
    CHECK(beta_fn(1.5, 2.5) == Approx(pi / 16.0).epsilon(1e-12));
    for (double a : {0.3, 1.0, 2.5, 7.0})
        for (double b : {0.4, 1.5, 9.0})
            CHECK(beta_fn(a, b) == beta_fn(b, a));  // formula is symmetric
    CHECK_THROWS_AS(beta_fn(0.0, 1.0), domain_error);
    CHECK_THROWS_AS(beta_fn(1.0, -1.0), domain_error);
}

TEST_CASE("beta_fn matches direct quadrature") {
    double q = integrate(
        [](double t) { return std::sqrt(t) * std::pow(1.0 - t, 1.5); }, 0.0,
        1.0, 1e-12);
    CHECK(beta_fn(1.5, 2.5) == Approx(q).epsilon(1e-10));
}

TEST_CASE("riemann_zeta values") {
    CHECK(riemann_zeta(2.0) == Approx(pi * pi / 6.0).epsilon(1e-12));
    CHECK(riemann_zeta(4.0) ==
          Approx(pi * pi * pi * pi / 90.0).epsilon(1e-12));
    // reference value computed once with 50-digit arithmetic
    CHECK(riemann_zeta(0.5) ==
          Approx(-1.4603545088095868128894991525152980124672293310126)
              .epsilon(1e-11));
    CHECK_THROWS_AS(riemann_zeta(1.0), domain_error);
    CHECK_THROWS_AS(riemann_zeta(0.0), domain_error);
    CHECK_THROWS_AS(riemann_zeta(-1.0), domain_error);
}

TEST_CASE("hurwitz_lerch_psi point values") {
    // z = 0: only the first series term survives
    CHECK(hurwitz_lerch_psi(1.0, 0.0, 2.0, 3.0) ==
          Approx(1.0 / 9.0).epsilon(1e-14));
    // mu = 1, z = -1, a = 1 is the Dirichlet eta function
    CHECK(hurwitz_lerch_psi(1.0, -1.0, 2.0, 1.0) ==
          Approx(pi * pi / 12.0).epsilon(1e-12));
    CHECK(hurwitz_lerch_psi(1.0, -1.0, 0.5, 1.0) ==
          Approx(0.60489864342163037024726591423595549975976254513025)
              .epsilon(1e-12));
    // mu = 2, z = -1, a = 1 shifts the eta argument down by one:
    // sum (n+1)(-1)^n/(n+1)^s = eta(s-1)
    CHECK(hurwitz_lerch_psi(2.0, -1.0, 1.5, 1.0) ==
          Approx(0.60489864342163037024726591423595549975976254513025)
              .epsilon(1e-11));
    CHECK_THROWS_AS(hurwitz_lerch_psi(1.0, 1.0, 2.0, 1.0), domain_error);
    CHECK_THROWS_AS(hurwitz_lerch_psi(1.0, -1.0, 0.0, 1.0), domain_error);
}

TEST_CASE("eta/zeta identity on (1, 30)") {
    for (double s : {1.25, 1.5, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0, 29.5}) {
        double eta = hurwitz_lerch_psi(1.0, -1.0, s, 1.0);
        double want = (1.0 - std::pow(2.0, 1.0 - s)) * riemann_zeta(s);
        CHECK(eta == Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("series agrees with the integral representation") {
    for (double mu : {1.0, 2.0})
        for (double s : {0.5, 1.0, 2.0, 5.0}) {
            double series = hurwitz_lerch_psi(mu, -1.0, s, 1.0);
            double integral = hurwitz_lerch_psi_integral(mu, -1.0, s, 1.0);
            CHECK(std::abs(series - integral) <=
                  1e-8 * std::max(1.0, std::abs(series)));
        }
    // off the alternating point as well
    double series = hurwitz_lerch_psi(1.0, 0.5, 1.5, 2.0);
    double integral = hurwitz_lerch_psi_integral(1.0, 0.5, 1.5, 2.0);
    CHECK(series == Approx(integral).epsilon(1e-8));
}

TEST_CASE("series control is honored") {
    SeriesControl tight;
    tight.max_terms = 3;
    // |z| < 1 direct series cannot reach 1e-12 in three terms
    CHECK_THROWS_AS(hurwitz_lerch_psi(1.0, 0.9, 1.5, 1.0, tight),
                    convergence_error);
}
