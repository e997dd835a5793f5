#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "powcal/normal.hpp"
#include "powcal/rng.hpp"
#include "powcal/trunc_normal.hpp"

using namespace powcal;

TEST_CASE("tn_cdf basic shape") {
  const TruncNormalParams p{2.0, 1.5};
  CHECK(tn_cdf(p, -1.0) == 0.0);
  CHECK(tn_cdf(p, 0.0) == 0.0);
  CHECK(tn_cdf(p, 1e9) == doctest::Approx(1.0).epsilon(1e-14));
  double prev = 0.0;
  for (double x = 0.0; x <= 10.0; x += 0.05) {
    const double f = tn_cdf(p, x);
    CHECK(f >= prev);
    prev = f;
  }
  CHECK(tn_cdf(p, 2.0) ==
        doctest::Approx(static_cast<double>(oracle::tn_cdf_ld(2.0L, 1.5L, 2.0L)))
            .epsilon(1e-13));
}

TEST_CASE("tn_cdf under strong truncation stays finite and correct") {
  const TruncNormalParams p{-50.0, 1.0};
  for (double x : {0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.3}) {
    const double ref = static_cast<double>(oracle::tn_cdf_ld(-50.0L, 1.0L, x));
    CHECK(std::isfinite(tn_cdf(p, x)));
    CHECK(tn_cdf(p, x) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("tn_pdf differentiates tn_cdf") {
  for (auto [mu, sigma] : std::initializer_list<std::pair<double, double>>{
           {3.0, 2.0}, {-1.0, 0.7}, {0.5, 5.0}}) {
    const TruncNormalParams p{mu, sigma};
    for (double x : {0.3, 1.0, 2.7, 6.0}) {
      const double h = 1e-6 * std::max(1.0, x);
      const double slope = (tn_cdf(p, x + h) - tn_cdf(p, x - h)) / (2 * h);
      CHECK(tn_pdf(p, x) == doctest::Approx(slope).epsilon(1e-6));
    }
  }
}

TEST_CASE("tn_mean matches the integral of the survival function") {
  for (auto [mu, sigma] :
       std::initializer_list<std::pair<double, double>>{{4.0, 2.0},
                                                        {0.0, 1.0},
                                                        {-3.0, 1.5},
                                                        {-50.0, 1.0}}) {
    // E[X] = integral of (1 - F); reuse the CRPS quadrature at y = 0, whose
    // integrand reduces to (1-F)^2... instead integrate directly.
    const TruncNormalParams p{mu, sigma};
    long double hi = std::max(1.0, mu + 12.0 * sigma);
    while (1.0L - oracle::tn_cdf_ld(mu, sigma, hi) > 1e-18L) hi *= 2.0L;
    const int n = 400000;
    long double acc = 0.0L;
    const long double dx = hi / n;
    for (int i = 0; i < n; ++i) {
      const long double x = (i + 0.5L) * dx;
      acc += (1.0L - oracle::tn_cdf_ld(mu, sigma, x)) * dx;
    }
    CHECK(tn_mean(p) ==
          doctest::Approx(static_cast<double>(acc)).epsilon(1e-7));
  }
}

TEST_CASE("tn_quantile round trips through tn_cdf") {
  for (auto [mu, sigma] : std::initializer_list<std::pair<double, double>>{
           {10.0, 1.0}, {0.0, 2.0}, {-2.0, 0.5}, {-5.0, 0.1}, {-50.0, 1.0},
           {40.0, 17.0}}) {
    const TruncNormalParams p{mu, sigma};
    for (double q : {1e-6, 0.01, 0.0192307692307692, 0.25, 0.5, 0.75, 0.98,
                     0.999, 1.0 - 1e-9}) {
      const double x = tn_quantile(p, q);
      CHECK(x >= 0.0);
      CHECK(std::fabs(tn_cdf(p, x) - q) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(tn_quantile(TruncNormalParams{0.0, 1.0}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(tn_quantile(TruncNormalParams{0.0, 1.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("tn_crps reproduces the closed form at the reference point") {
  // mu=10, sigma=1, y=10: truncation is negligible, so the value collapses
  // to 2*pdf(0) - 1/sqrt(pi).
  const double expected = 2.0 * norm_pdf(0.0) - kInvSqrtPi;
  CHECK(tn_crps(TruncNormalParams{10.0, 1.0}, 10.0) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::fabs(tn_crps(TruncNormalParams{10.0, 1.0}, 10.0) - 0.23370) <
        1e-5);
}

TEST_CASE("tn_crps matches quadrature across the parameter box") {
  CounterRng rng(20240817);
  for (int i = 0; i < 60; ++i) {
    const double mu = -5.0 + 55.0 * rng.uniform();
    const double sigma = 0.1 + 19.9 * rng.uniform();
    const double y = 60.0 * rng.uniform();
    const double got = tn_crps(TruncNormalParams{mu, sigma}, y);
    const double ref =
        static_cast<double>(oracle::tn_crps_quad(mu, sigma, y, 1e-11L));
    CHECK(std::fabs(got - ref) <= 1e-6);
  }
}

TEST_CASE("tn_crps under strong truncation matches quadrature") {
  for (double y : {0.0, 0.005, 0.02, 0.1, 0.5}) {
    const double got = tn_crps(TruncNormalParams{-50.0, 1.0}, y);
    const double ref =
        static_cast<double>(oracle::tn_crps_quad(-50.0, 1.0, y, 1e-14L));
    CHECK(std::isfinite(got));
    CHECK(got == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("tn_crps handles observations below the support") {
  const TruncNormalParams p{3.0, 1.0};
  const double at0 = tn_crps(p, 0.0);
  CHECK(tn_crps(p, -2.5) == doctest::Approx(at0 + 2.5).epsilon(1e-12));
}

TEST_CASE("tn_crps gradient limits at the reference point") {
  const auto g = tn_crps_grad(TruncNormalParams{10.0, 1.0}, 10.0);
  CHECK(std::fabs(g.dmu) < 1e-12);
  CHECK(g.dsigma ==
        doctest::Approx(2.0 * norm_pdf(0.0) - kInvSqrtPi).epsilon(1e-12));
}

TEST_CASE("tn_crps_grad matches central differences") {
  CounterRng rng(7151);
  int checked = 0;
  while (checked < 50) {
    const double mu = -5.0 + 55.0 * rng.uniform();
    const double sigma = 0.1 + 19.9 * rng.uniform();
    const double y = 60.0 * rng.uniform();
    const auto g = tn_crps_grad(TruncNormalParams{mu, sigma}, y);
    const double hm = 1e-6 * std::max(1.0, std::fabs(mu));
    const double fd_mu = oracle::central_diff(
        [&](double m) { return tn_crps(TruncNormalParams{m, sigma}, y); }, mu,
        hm);
    const double hs = 1e-6 * sigma;
    const double fd_sg = oracle::central_diff(
        [&](double s) { return tn_crps(TruncNormalParams{mu, s}, y); }, sigma,
        hs);
    CHECK(std::fabs(g.dmu - fd_mu) <= 1e-5 * std::max(1.0, std::fabs(fd_mu)));
    CHECK(std::fabs(g.dsigma - fd_sg) <=
          1e-5 * std::max(1.0, std::fabs(fd_sg)));
    ++checked;
  }
}

TEST_CASE("distribution inputs are validated") {
  CHECK_THROWS_AS(tn_cdf(TruncNormalParams{0.0, 0.0}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(tn_cdf(TruncNormalParams{0.0, -1.0}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(tn_crps(TruncNormalParams{0.0, 1.0},
                          std::numeric_limits<double>::quiet_NaN()),
                  std::invalid_argument);
}
