#include "powcal/trunc_normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "powcal/normal.hpp"

namespace powcal {

namespace {

void check_params(const TruncNormalParams& p) {
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma) || !std::isfinite(p.mu))
    throw std::invalid_argument("truncated normal: sigma must be finite and positive");
}

}  // namespace

double tn_cdf(const TruncNormalParams& p, double x) {
  check_params(p);
  if (!std::isfinite(x)) {
    if (std::isnan(x)) throw std::invalid_argument("tn_cdf: x is NaN");
    return x > 0.0 ? 1.0 : 0.0;
  }
  if (x <= 0.0) return 0.0;
  const double u = (x - p.mu) / p.sigma;
  const double u0 = -p.mu / p.sigma;
  const double f = -std::expm1(log_norm_sf(u) - log_norm_sf(u0));
  return std::clamp(f, 0.0, 1.0);
}

double tn_pdf(const TruncNormalParams& p, double x) {
  check_params(p);
  if (!std::isfinite(x)) {
    if (std::isnan(x)) throw std::invalid_argument("tn_pdf: x is NaN");
    return 0.0;
  }
  if (x < 0.0) return 0.0;
  const double u = (x - p.mu) / p.sigma;
  const double lp = log_norm_cdf(p.mu / p.sigma);
  return std::exp(log_norm_pdf(u) - lp) / p.sigma;
}

double tn_mean(const TruncNormalParams& p) {
  check_params(p);
  const double z = p.mu / p.sigma;
  return p.mu + p.sigma * std::exp(log_norm_pdf(z) - log_norm_cdf(z));
}

double tn_quantile(const TruncNormalParams& p, double q) {
  check_params(p);
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("tn_quantile: q must lie in (0,1)");
  const double u0 = -p.mu / p.sigma;
  const double lsf0 = log_norm_sf(u0);
  const double target = lsf0 + std::log1p(-q);  // want log SF(u) = target

  double u;
  if (target > -700.0) {
    u = -norm_quantile(std::exp(target));
  } else {
    // Asymptotic inversion of log SF(u) ~ -u^2/2 - log(u sqrt(2 pi)).
    const double big = -target;
    u = std::sqrt(2.0 * big);
    for (int i = 0; i < 4; ++i)
      u = std::sqrt(2.0 * (big - std::log(u) - kLogSqrt2Pi));
  }
  u = std::max(u, u0);

  double lo = u0;  // SF too large here (g > 0)
  double hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    const double g = log_norm_sf(u) - target;
    if (std::fabs(g) < 1e-13) break;
    if (g > 0.0)
      lo = u;
    else
      hi = u;
    const double slope = std::exp(log_norm_pdf(u) - log_norm_sf(u));
    double next = u + g / slope;
    if (!(next > lo) || !(next < hi))
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : lo + 2.0 * (u - u0) + 1.0;
    if (next == u) break;
    u = next;
  }
  return std::max(0.0, p.mu + p.sigma * u);
}

double tn_crps(const TruncNormalParams& p, double y) {
  return tn_crps_grad(p, y).value;
}

TnCrpsGrad tn_crps_grad(const TruncNormalParams& p, double y) {
  check_params(p);
  if (!std::isfinite(y)) throw std::invalid_argument("tn_crps: y not finite");
  if (y < 0.0) {
    // Below the support the CDF is flat at zero, so the integral picks up
    // exactly |y| plus the value at the support edge.
    TnCrpsGrad g = tn_crps_grad(p, 0.0);
    g.value += -y;
    return g;
  }
  const double z = p.mu / p.sigma;
  const double w = (y - p.mu) / p.sigma;
  const double lp = log_norm_cdf(z);
  const double e_w = std::exp(log_norm_sf(w) - lp);   // SF(w)/p, in [0,1]
  const double r_w = std::exp(log_norm_pdf(w) - lp);  // pdf(w)/p
  const double r_z = std::exp(log_norm_pdf(z) - lp);  // pdf(z)/p
  const double t3 = kInvSqrtPi * std::exp(log_norm_cdf(kSqrt2 * z) - 2.0 * lp);

  const double cp = w * (1.0 - 2.0 * e_w) + 2.0 * r_w - t3;  // CRPS / sigma
  const double d_w = 1.0 - 2.0 * e_w;
  const double d_z = 2.0 * r_z * (w * (1.0 - e_w) + r_w) - 2.0 * r_z * r_z;

  TnCrpsGrad g;
  g.value = p.sigma * cp;
  g.dmu = d_z - d_w - 2.0 * r_z * cp;
  g.dsigma = cp - w * d_w - z * d_z + 2.0 * z * r_z * cp;
  return g;
}

}  // namespace powcal
