#pragma once

namespace powcal {

/// Normal distribution with location mu and scale sigma, truncated to
/// [0, inf). mu may be arbitrarily negative; all routines work in log space
/// so strong truncation (mu/sigma down to -50 and beyond) stays finite.
struct TruncNormalParams {
  double mu = 0.0;
  double sigma = 1.0;
};

double tn_cdf(const TruncNormalParams& p, double x);
double tn_pdf(const TruncNormalParams& p, double x);
double tn_mean(const TruncNormalParams& p);

/// Inverse CDF for q in (0,1). Closed-form seed through the normal quantile,
/// then safeguarded Newton (bisection fallback) on the log survival ratio;
/// the returned x satisfies |tn_cdf(x) - q| <= 1e-12 in well-scaled regimes.
double tn_quantile(const TruncNormalParams& p, double q);

/// Closed-form CRPS of the truncated normal against observation y.
double tn_crps(const TruncNormalParams& p, double y);

struct TnCrpsGrad {
  double value = 0.0;
  double dmu = 0.0;
  double dsigma = 0.0;
};

/// CRPS together with its analytic partial derivatives in mu and sigma.
TnCrpsGrad tn_crps_grad(const TruncNormalParams& p, double y);

}  // namespace powcal
