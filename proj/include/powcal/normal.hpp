#pragma once

#include <cmath>

namespace powcal {

inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrtPi = 0.56418958354775628695;

inline double norm_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double log_norm_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

/// Standard normal CDF via erfc; relative error a few ulp down to the
/// underflow limit (x ~ -37.5).
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

inline double norm_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

/// Scaled complementary error function exp(x^2) erfc(x) for x >= 0.
double erfcx(double x);

/// log(1 - Phi(x)) for all finite x, including the far upper tail where
/// Phi(x) rounds to 1 and the survival function underflows.
double log_norm_sf(double x);

inline double log_norm_cdf(double x) { return log_norm_sf(-x); }

/// Inverse standard normal CDF (Wichura's PPND16), p in (0,1).
double norm_quantile(double p);

}  // namespace powcal
