#include "powcal/mbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "powcal/optimize.hpp"

namespace powcal {
namespace {

bool degenerate_spread(double s2, double xbar) {
  return s2 < 1e-12 * xbar * xbar + 1e-12;
}

struct MbmRow {
  double base = 0.0;             // alpha + beta*xbar - y
  double s2 = 0.0;               // ensemble variance
  std::vector<double> eps;       // member anomalies
  std::vector<double> pair_abs;  // |eps_i - eps_j| over i < j
};

}  // namespace

MbmParams fit_mbm(std::span<const TrainingPair> pairs, const MbmParams* warm,
                  FitReport* report) {
  const std::size_t n = pairs.size();
  const std::size_t k = pairs.front().members.size();

  std::vector<double> xbar(n);
  std::vector<double> y(n);
  for (std::size_t t = 0; t < n; ++t) {
    xbar[t] = mean_of(pairs[t].members);
    y[t] = pairs[t].y;
  }
  const double mx = mean_of(xbar);
  const double my = mean_of(y);
  double cov = 0.0;
  double varx = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    cov += (xbar[t] - mx) * (y[t] - my);
    varx += (xbar[t] - mx) * (xbar[t] - mx);
  }
  MbmParams p;
  p.beta = varx > 0.0 ? cov / varx : 1.0;
  p.alpha = my - p.beta * mx;

  std::vector<MbmRow> rows(n);
  double resid_var = 0.0;
  double mean_s2 = 0.0;
  double mean_s = 0.0;
  std::size_t live = 0;
  for (std::size_t t = 0; t < n; ++t) {
    MbmRow& r = rows[t];
    r.base = p.alpha + p.beta * xbar[t] - y[t];
    r.s2 = variance_of(pairs[t].members);
    resid_var += r.base * r.base;
    if (degenerate_spread(r.s2, xbar[t])) continue;
    ++live;
    mean_s2 += r.s2;
    mean_s += std::sqrt(r.s2);
    r.eps.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      r.eps[i] = pairs[t].members[i] - xbar[t];
    }
    r.pair_abs.reserve(k * (k - 1) / 2);
    for (std::size_t i = 0; i + 1 < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        r.pair_abs.push_back(std::abs(r.eps[i] - r.eps[j]));
      }
    }
  }
  resid_var /= static_cast<double>(n);

  if (live == 0) {
    // Every training ensemble is spreadless: the dressing factor never
    // enters the forecast, so leave it at the identity.
    p.g1 = 1.0;
    p.g2 = 0.0;
    if (report) {
      report->converged = true;
      report->detail = "no ensemble spread in training data";
    }
    return p;
  }
  mean_s2 /= static_cast<double>(live);
  mean_s /= static_cast<double>(live);

  const double delta =
      std::max(1e-6 * std::sqrt(std::max(variance_of(y), 0.0)), 1e-12);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_k = 1.0 / static_cast<double>(k);
  const double inv_k2 = inv_k * inv_k;

  const Objective fn = [&](const Eigen::VectorXd& g, Eigen::VectorXd* grad) {
    const double g1 = g[0];
    const double g2 = g[1];
    if (grad) grad->setZero(2);
    double total = 0.0;
    for (const MbmRow& r : rows) {
      if (r.eps.empty()) {
        total += std::abs(r.base) * inv_n;
        continue;
      }
      const double tau = std::max(std::sqrt(g1 * g1 + g2 * g2 / r.s2), 1e-12);
      double f = 0.0;
      double df_dtau = 0.0;
      for (double e : r.eps) {
        const double u = r.base + tau * e;
        const double sa = std::sqrt(u * u + delta * delta);
        f += sa * inv_k;
        df_dtau += (u / sa) * e * inv_k;
      }
      for (double d : r.pair_abs) {
        const double u = tau * d;
        const double sa = std::sqrt(u * u + delta * delta);
        f -= sa * inv_k2;
        df_dtau -= (u / sa) * d * inv_k2;
      }
      total += f * inv_n;
      if (grad) {
        (*grad)[0] += df_dtau * (g1 / tau) * inv_n;
        (*grad)[1] += df_dtau * (g2 / (r.s2 * tau)) * inv_n;
      }
    }
    return total;
  };

  Eigen::VectorXd g0(2);
  if (warm) {
    g0 << warm->g1, warm->g2;
  } else {
    // Start with the variance budget split so the spread roughly matches the
    // residuals; a slightly positive g2 keeps the start off the g2 = 0 ridge.
    g0[0] = std::sqrt(std::max(resid_var, 1e-8) / std::max(mean_s2, 1e-12));
    g0[1] = 0.3 * g0[0] * mean_s;
  }
  const BfgsResult r = bfgs_minimize(fn, g0);
  if (!std::isfinite(r.f)) throw FitError("mbm: spread fit diverged");
  p.g1 = std::abs(r.x[0]);
  p.g2 = std::abs(r.x[1]);
  if (report) {
    report->converged = r.converged;
    report->iterations = r.iterations;
    report->objective_trace = {r.f};
  }
  return p;
}

std::vector<double> mbm_adjust(const MbmParams& params,
                               std::span<const double> members) {
  const double xbar = mean_of(members);
  const double s2 = variance_of(members);
  const double loc = params.alpha + params.beta * xbar;
  std::vector<double> out(members.size(), loc);
  if (degenerate_spread(s2, xbar)) return out;
  const double tau =
      std::sqrt(params.g1 * params.g1 + params.g2 * params.g2 / s2);
  for (std::size_t i = 0; i < members.size(); ++i) {
    out[i] = loc + tau * (members[i] - xbar);
  }
  return out;
}

void MbmCalibrator::do_fit(std::span<const TrainingPair> pairs) {
  const MbmParams* warm = fitted() ? &params_ : nullptr;
  params_ = fit_mbm(pairs, warm, &report_);
}

std::vector<double> MbmCalibrator::do_predict(
    const EnsembleForecast& raw) const {
  std::vector<double> adj = mbm_adjust(params_, raw.members);
  std::sort(adj.begin(), adj.end());
  std::vector<double> out;
  out.reserve(grid().levels.size());
  for (double q : grid().levels) out.push_back(empirical_quantile(adj, q));
  return out;
}

nlohmann::json MbmCalibrator::params_json() const {
  return nlohmann::json{{"alpha", params_.alpha},
                        {"beta", params_.beta},
                        {"g1", params_.g1},
                        {"g2", params_.g2}};
}

void MbmCalibrator::load_params(const nlohmann::json& j) {
  params_.alpha = j.at("alpha").get<double>();
  params_.beta = j.at("beta").get<double>();
  params_.g1 = j.at("g1").get<double>();
  params_.g2 = j.at("g2").get<double>();
}

}  // namespace powcal
