// Independent reference computations for test assertions. Everything here is
// built from first principles (long double special functions, brute-force
// integration and counting) rather than from the library under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline long double norm_sf_ld(long double x) {
  return 0.5L * erfcl(x / 1.41421356237309504880168872420969808L);
}

/// CDF of a normal(mu, sigma^2) truncated to [0, inf), in long double via
/// survival-function ratios (no cancellation under strong truncation).
inline long double tn_cdf_ld(long double mu, long double sigma,
                             long double x) {
  if (x <= 0.0L) return 0.0L;
  const long double u = (x - mu) / sigma;
  const long double u0 = -mu / sigma;
  return 1.0L - norm_sf_ld(u) / norm_sf_ld(u0);
}

namespace detail {

inline long double simpson(const std::function<long double(long double)>& f,
                           long double a, long double fa, long double m,
                           long double fm, long double b, long double fb) {
  return (b - a) / 6.0L * (fa + 4.0L * fm + fb);
}

inline long double adapt(const std::function<long double(long double)>& f,
                         long double a, long double fa, long double m,
                         long double fm, long double b, long double fb,
                         long double whole, long double tol, int depth) {
  const long double lm = 0.5L * (a + m);
  const long double rm = 0.5L * (m + b);
  const long double flm = f(lm);
  const long double frm = f(rm);
  const long double left = simpson(f, a, fa, lm, flm, m, fm);
  const long double right = simpson(f, m, fm, rm, frm, b, fb);
  const long double delta = left + right - whole;
  if (depth <= 0 || fabsl(delta) <= 15.0L * tol)
    return left + right + delta / 15.0L;
  return adapt(f, a, fa, lm, flm, m, fm, left, 0.5L * tol, depth - 1) +
         adapt(f, m, fm, rm, frm, b, fb, right, 0.5L * tol, depth - 1);
}

inline long double integrate(const std::function<long double(long double)>& f,
                             long double a, long double b, long double tol) {
  if (b <= a) return 0.0L;
  const long double m = 0.5L * (a + b);
  const long double fa = f(a), fm = f(m), fb = f(b);
  return adapt(f, a, fa, m, fm, b, fb, simpson(f, a, fa, m, fm, b, fb), tol,
               48);
}

}  // namespace detail

/// CRPS of the truncated normal by adaptive Simpson quadrature of the
/// threshold decomposition integral, split at the observation kink.
inline long double tn_crps_quad(double mu, double sigma, double y,
                                long double tol = 1e-11L) {
  const long double mu_l = mu, sg_l = sigma, y_l = y;
  long double hi = std::max<long double>(y_l, std::max<long double>(
                                                  sg_l, mu_l + 10.0L * sg_l));
  while (1.0L - tn_cdf_ld(mu_l, sg_l, hi) > 1e-18L) hi *= 2.0L;
  auto below = [&](long double x) {
    const long double f = tn_cdf_ld(mu_l, sg_l, x);
    return f * f;
  };
  auto above = [&](long double x) {
    const long double f = 1.0L - tn_cdf_ld(mu_l, sg_l, x);
    return f * f;
  };
  const long double y_clasp = std::clamp<long double>(y_l, 0.0L, hi);
  long double total = detail::integrate(below, 0.0L, y_clasp, tol) +
                      detail::integrate(above, y_clasp, hi, tol);
  if (y < 0.0) total += -y_l;
  return total;
}

/// Exact CRPS of a finite ensemble: the squared difference between the step
/// CDF and the observation indicator is piecewise constant, so integrate it
/// segment by segment over the breakpoints.
inline long double crps_empirical_exact(std::vector<double> members,
                                        double y) {
  std::sort(members.begin(), members.end());
  std::vector<long double> bp(members.begin(), members.end());
  bp.push_back(y);
  std::sort(bp.begin(), bp.end());
  const long double k = static_cast<long double>(members.size());
  long double acc = 0.0L;
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    const long double width = bp[s + 1] - bp[s];
    if (width <= 0.0L) continue;
    const long double x = bp[s];
    long double below = 0.0L;
    for (double m : members)
      if (static_cast<long double>(m) <= x) below += 1.0L;
    const long double f = below / k;
    const long double h = x >= static_cast<long double>(y) ? 1.0L : 0.0L;
    acc += (f - h) * (f - h) * width;
  }
  return acc;
}

/// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
