#include "powcal/bma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "powcal/normal.hpp"
#include "powcal/trunc_normal.hpp"

namespace powcal {
namespace {

double logsumexp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Least squares of y on one predictor, as intercept + slope; a constant
// predictor makes the regression singular, so fall back to the identity
// correction.
void ols(std::span<const double> x, std::span<const double> y,
         double* intercept, double* slope) {
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double cov = 0.0;
  double varx = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    cov += (x[t] - mx) * (y[t] - my);
    varx += (x[t] - mx) * (x[t] - mx);
  }
  if (varx > 0.0) {
    *slope = cov / varx;
    *intercept = my - *slope * mx;
  } else {
    *intercept = 0.0;
    *slope = 1.0;
  }
}

double component_mu(const BmaParams& p, std::span<const double> members,
                    std::size_t i) {
  const std::size_t idx = p.exchangeable ? 0 : i;
  return p.a[idx] + p.b[idx] * members[i];
}

double component_sigma(const BmaParams& p, std::size_t i) {
  return p.sigma[p.exchangeable ? 0 : i];
}

}  // namespace

BmaParams fit_bma(std::span<const TrainingPair> pairs, bool exchangeable,
                  int max_iter, double tol, double var_floor_rel,
                  FitReport* report) {
  const std::size_t n = pairs.size();
  const std::size_t k = pairs.front().members.size();
  std::vector<double> y(n);
  for (std::size_t t = 0; t < n; ++t) y[t] = pairs[t].y;
  const double sd_y = std::sqrt(std::max(variance_of(y), 0.0));
  const double sigma_floor = std::max(var_floor_rel * sd_y, 1e-12);

  BmaParams p;
  p.exchangeable = exchangeable;
  p.weight.assign(k, 1.0 / static_cast<double>(k));
  if (exchangeable) {
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(n * k);
    ys.reserve(n * k);
    for (const TrainingPair& tp : pairs) {
      for (double m : tp.members) {
        xs.push_back(m);
        ys.push_back(tp.y);
      }
    }
    double a = 0.0;
    double b = 0.0;
    ols(xs, ys, &a, &b);
    p.a = {a};
    p.b = {b};
    double rss = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const double r = ys[t] - a - b * xs[t];
      rss += r * r;
    }
    p.sigma = {std::max(std::sqrt(rss / static_cast<double>(xs.size())),
                        sigma_floor)};
  } else {
    p.a.resize(k);
    p.b.resize(k);
    p.sigma.resize(k);
    std::vector<double> xi(n);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t t = 0; t < n; ++t) xi[t] = pairs[t].members[i];
      ols(xi, y, &p.a[i], &p.b[i]);
      double rss = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double r = y[t] - p.a[i] - p.b[i] * xi[t];
        rss += r * r;
      }
      p.sigma[i] =
          std::max(std::sqrt(rss / static_cast<double>(n)), sigma_floor);
    }
  }

  // EM on the (untruncated) normal mixture: shared sigma when exchangeable,
  // weights and per-member sigmas otherwise. Regression coefficients stay
  // fixed at their least-squares values.
  std::vector<double> trace;
  std::vector<double> terms(k);
  std::vector<std::vector<double>> resp(n, std::vector<double>(k));
  double prev_ll = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    double ll = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t i = 0; i < k; ++i) {
        const double mu = component_mu(p, pairs[t].members, i);
        const double s = component_sigma(p, i);
        const double lw = p.weight[i] > 0.0
                              ? std::log(p.weight[i])
                              : -std::numeric_limits<double>::infinity();
        terms[i] = lw + log_norm_pdf((y[t] - mu) / s) - std::log(s);
      }
      const double lt = logsumexp(terms);
      ll += lt;
      for (std::size_t i = 0; i < k; ++i) {
        resp[t][i] = std::isfinite(lt) ? std::exp(terms[i] - lt)
                                       : 1.0 / static_cast<double>(k);
      }
    }
    if (ll + 1e-9 * (1.0 + std::abs(ll)) < prev_ll) {
      throw FitError("bma: log-likelihood decreased during EM");
    }
    trace.push_back(ll);
    if (iter > 0 && std::abs(ll - prev_ll) <= tol * (1.0 + std::abs(ll))) {
      converged = true;
      break;
    }
    prev_ll = ll;

    if (exchangeable) {
      double wsq = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < k; ++i) {
          const double d = y[t] - component_mu(p, pairs[t].members, i);
          wsq += resp[t][i] * d * d;
        }
      }
      p.sigma[0] =
          std::max(std::sqrt(wsq / static_cast<double>(n)), sigma_floor);
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        double mass = 0.0;
        double wsq = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
          const double d = y[t] - component_mu(p, pairs[t].members, i);
          mass += resp[t][i];
          wsq += resp[t][i] * d * d;
        }
        p.weight[i] = mass / static_cast<double>(n);
        if (mass > 1e-300) {
          p.sigma[i] = std::max(std::sqrt(wsq / mass), sigma_floor);
        }
      }
    }
  }

  if (report) {
    report->converged = converged;
    report->iterations = iter;
    report->objective_trace = std::move(trace);
  }
  return p;
}

double bma_cdf(const BmaParams& params, std::span<const double> members,
               double y) {
  double f = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (params.weight[i] <= 0.0) continue;
    f += params.weight[i] *
         tn_cdf({component_mu(params, members, i), component_sigma(params, i)},
                y);
  }
  return f;
}

double bma_quantile(const BmaParams& params, std::span<const double> members,
                    double q) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (params.weight[i] <= 0.0) continue;
    const double qi = tn_quantile(
        {component_mu(params, members, i), component_sigma(params, i)}, q);
    lo = std::min(lo, qi);
    hi = std::max(hi, qi);
  }
  if (!(hi > lo)) return lo;
  // The mixture CDF is continuous and nondecreasing with F(lo) <= q <= F(hi).
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bma_cdf(params, members, mid) < q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void BmaCalibrator::do_fit(std::span<const TrainingPair> pairs) {
  params_ = fit_bma(pairs, options().bma_exchangeable, options().bma_max_iter,
                    options().bma_tol, options().bma_var_floor_rel, &report_);
}

std::vector<double> BmaCalibrator::do_predict(
    const EnsembleForecast& raw) const {
  std::vector<double> out;
  out.reserve(grid().levels.size());
  for (double q : grid().levels) {
    out.push_back(bma_quantile(params_, raw.members, q));
  }
  return out;
}

nlohmann::json BmaCalibrator::params_json() const {
  return nlohmann::json{{"exchangeable", params_.exchangeable},
                        {"a", params_.a},
                        {"b", params_.b},
                        {"sigma", params_.sigma},
                        {"weight", params_.weight}};
}

void BmaCalibrator::load_params(const nlohmann::json& j) {
  params_.exchangeable = j.at("exchangeable").get<bool>();
  params_.a = j.at("a").get<std::vector<double>>();
  params_.b = j.at("b").get<std::vector<double>>();
  params_.sigma = j.at("sigma").get<std::vector<double>>();
  params_.weight = j.at("weight").get<std::vector<double>>();
}

}  // namespace powcal
