#include <doctest.h>

#include <cmath>

#include "rtmix/math.hpp"

// Reference values computed independently at 50-digit precision by
// tests/oracles/compute_reference_values.py.

using namespace rtmix;

TEST_CASE("lognormal_logpdf matches closed-form reference points") {
  CHECK(lognormal_logpdf(1.0, 0.0, 1.0) ==
        doctest::Approx(-0.91893853320467274).epsilon(1e-14));
  CHECK(lognormal_logpdf(std::exp(1.0), 1.0, 1.0) ==
        doctest::Approx(-1.9189385332046727).epsilon(1e-14));
  CHECK(lognormal_logpdf(400.0, 6.0, 0.5) ==
        doctest::Approx(-6.2174016076648531).epsilon(1e-14));
}

TEST_CASE("lognormal_logpdf rejects values outside its support") {
  CHECK_THROWS_AS(lognormal_logpdf(0.0, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(lognormal_logpdf(-3.0, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(lognormal_logpdf(1.0, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(lognormal_logpdf(1.0, 0.0, -1.0), std::domain_error);
}

TEST_CASE("log_mix") {
  SUBCASE("equal components collapse exactly") {
    const double L = -17.25;
    CHECK(log_mix(0.5, L, L) == doctest::Approx(L).epsilon(1e-15));
  }
  SUBCASE("degenerate mixtures are exact limits") {
    CHECK(log_mix(1.0, -2.0, -50000.0) == -2.0);
    CHECK(log_mix(0.0, -50000.0, -7.0) == -7.0);
  }
  SUBCASE("reference value") {
    CHECK(log_mix(0.3, -2.0, -5.0) ==
          doctest::Approx(-3.0940697779372225).epsilon(1e-14));
  }
  SUBCASE("stable for extreme log densities") {
    CHECK(log_mix(0.4, -1e6, -3.0) ==
          doctest::Approx(std::log(0.6) - 3.0).epsilon(1e-12));
    CHECK(std::isfinite(log_mix(0.4, -1e6, -1e6)));
    CHECK(log_mix(0.4, -1e6, -1e6) == doctest::Approx(-1e6).epsilon(1e-12));
  }
  SUBCASE("lambda outside [0,1] is a domain error") {
    CHECK_THROWS_AS(log_mix(-0.1, -1.0, -1.0), std::domain_error);
    CHECK_THROWS_AS(log_mix(1.1, -1.0, -1.0), std::domain_error);
  }
}

TEST_CASE("log_mix gradient wrt lambda vanishes for equal components") {
  CHECK(log_mix_dlambda(0.3, -4.2, -4.2) == 0.0);
  // and has the analytic value otherwise
  const double lp1 = -2.0, lp2 = -5.0, lam = 0.3;
  const double m = log_mix(lam, lp1, lp2);
  CHECK(log_mix_dlambda(lam, lp1, lp2) ==
        doctest::Approx(std::exp(lp1 - m) - std::exp(lp2 - m)));
}

TEST_CASE("prior density reference points") {
  CHECK(cauchy_logpdf(0.0, 2.5) ==
        doctest::Approx(-2.0610206177235552).epsilon(1e-14));
  CHECK(half_cauchy_logpdf(0.0, 2.5) ==
        doctest::Approx(-1.3678734371636099).epsilon(1e-14));
  // Beta(1,1) is flat with density 1
  CHECK(beta_logpdf(0.3, 1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(beta_logpdf(0.9, 1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("log_sum_exp handles empty-ish and -inf inputs") {
  CHECK(log_sum_exp(neg_inf, -2.0) == -2.0);
  CHECK(log_sum_exp(-2.0, neg_inf) == -2.0);
  CHECK(log_sum_exp(neg_inf, neg_inf) == neg_inf);
  CHECK(log_sum_exp(0.0, 0.0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("logit and inv_logit are inverse maps") {
  for (double p : {1e-12, 0.01, 0.35, 0.5, 0.77, 1.0 - 1e-12})
    CHECK(inv_logit(logit(p)) == doctest::Approx(p).epsilon(1e-12));
  CHECK(inv_logit(-745.0) > 0.0);
  CHECK(inv_logit(745.0) < 1.0);
}
