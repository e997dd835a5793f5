#include "powcal/emos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "powcal/optimize.hpp"
#include "powcal/rng.hpp"

namespace powcal {
namespace {

struct EmosData {
  std::vector<double> mbar;  // ensemble means
  std::vector<double> mvar;  // ensemble variances
  std::vector<double> y;
  double var_floor = 0.0;    // absolute floor on the predictive variance
  bool use_d = true;
};

EmosData prepare(std::span<const TrainingPair> pairs) {
  EmosData d;
  d.mbar.reserve(pairs.size());
  d.mvar.reserve(pairs.size());
  d.y.reserve(pairs.size());
  for (const TrainingPair& p : pairs) {
    d.mbar.push_back(mean_of(p.members));
    d.mvar.push_back(variance_of(p.members));
    d.y.push_back(p.y);
  }
  const double vy = std::max(variance_of(d.y), 1e-12);
  d.var_floor = 1e-12 * vy;
  // The spread coefficient is identifiable only when the ensemble variances
  // vary by an amount resolvable both against their own mean and against the
  // target variance; otherwise fold the spread term into the intercept c.
  const double mv = mean_of(d.mvar);
  const double vv = variance_of(d.mvar);
  d.use_d = mv > 0.0 && vv > 1e-24 * mv * mv && vv > 1e-18 * vy * vy;
  return d;
}

// theta = (atilde, b, log c [, log d]); mu = atilde * mbar + b,
// sigma^2 = c + d * mvar.
double emos_objective(const EmosData& d, const Eigen::VectorXd& theta,
                      Eigen::VectorXd* grad) {
  const double atilde = theta[0];
  const double b = theta[1];
  const double c = std::exp(theta[2]);
  const double dd = d.use_d ? std::exp(theta[3]) : 0.0;
  // A long line-search trial step can overflow the exp; report the point as
  // infeasible and let the optimiser backtrack instead of evaluating there.
  if (!std::isfinite(c) || !std::isfinite(dd)) {
    return std::numeric_limits<double>::infinity();
  }
  const double n = static_cast<double>(d.y.size());
  if (grad) grad->setZero(theta.size());
  double total = 0.0;
  for (std::size_t t = 0; t < d.y.size(); ++t) {
    const double mu = atilde * d.mbar[t] + b;
    double s2 = c + dd * d.mvar[t];
    const bool floored = s2 < d.var_floor;
    if (floored) s2 = d.var_floor;
    const double sigma = std::sqrt(s2);
    const TnCrpsGrad g = tn_crps_grad({mu, sigma}, d.y[t]);
    total += g.value;
    if (grad) {
      (*grad)[0] += g.dmu * d.mbar[t];
      (*grad)[1] += g.dmu;
      if (!floored) {
        const double ds2 = g.dsigma / (2.0 * sigma);
        (*grad)[2] += ds2 * c;
        if (d.use_d) (*grad)[3] += ds2 * dd * d.mvar[t];
      }
    }
  }
  if (grad) *grad /= n;
  return total / n;
}

Eigen::VectorXd moment_start(const EmosData& d) {
  const double mm = mean_of(d.mbar);
  const double my = mean_of(d.y);
  double cov = 0.0;
  double varm = 0.0;
  for (std::size_t t = 0; t < d.y.size(); ++t) {
    cov += (d.mbar[t] - mm) * (d.y[t] - my);
    varm += (d.mbar[t] - mm) * (d.mbar[t] - mm);
  }
  const double atilde = varm > 0.0 ? cov / varm : 1.0;
  const double b = my - atilde * mm;
  std::vector<double> resid(d.y.size());
  for (std::size_t t = 0; t < d.y.size(); ++t) {
    resid[t] = d.y[t] - atilde * d.mbar[t] - b;
  }
  const double rvar = std::max(variance_of(resid), 1e-8 * std::max(my * my, 1.0));
  Eigen::VectorXd theta(d.use_d ? 4 : 3);
  theta[0] = atilde;
  theta[1] = b;
  if (d.use_d) {
    const double mv = mean_of(d.mvar);
    theta[2] = std::log(rvar / 2.0);
    theta[3] = std::log(rvar / (2.0 * mv));
  } else {
    theta[2] = std::log(rvar);
  }
  return theta;
}

}  // namespace

EmosParams fit_emos(std::span<const TrainingPair> pairs, std::uint64_t seed,
                    const EmosParams* warm, int multistarts,
                    FitReport* report) {
  const EmosData d = prepare(pairs);
  const std::size_t k = pairs.front().members.size();
  const Objective fn = [&d](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    return emos_objective(d, x, g);
  };

  std::vector<Eigen::VectorXd> starts;
  if (warm) {
    Eigen::VectorXd theta(d.use_d ? 4 : 3);
    theta[0] = warm->a * static_cast<double>(k);
    theta[1] = warm->b;
    theta[2] = std::log(std::max(warm->c, d.var_floor));
    if (d.use_d) theta[3] = std::log(std::max(warm->d, 1e-8));
    starts.push_back(std::move(theta));
  } else {
    const Eigen::VectorXd base = moment_start(d);
    starts.push_back(base);
    CounterRng rng(seed, 0xE305);
    for (int s = 1; s < std::max(1, multistarts); ++s) {
      Eigen::VectorXd jittered = base;
      jittered[0] *= 1.0 + 0.3 * rng.normal();
      jittered[1] += 0.3 * rng.normal() * (std::abs(base[1]) + 1.0);
      for (int i = 2; i < jittered.size(); ++i) jittered[i] += rng.normal();
      starts.push_back(std::move(jittered));
    }
  }

  BfgsResult best;
  best.f = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& x0 : starts) {
    const BfgsResult r = bfgs_minimize(fn, x0);
    if (std::isfinite(r.f) && r.f < best.f) best = r;
  }
  if (!std::isfinite(best.f)) {
    throw FitError("emos: optimisation failed from every start");
  }
  if (report) {
    report->converged = best.converged;
    report->iterations = best.iterations;
    report->objective_trace = {best.f};
  }

  EmosParams out;
  out.a = best.x[0] / static_cast<double>(k);
  out.b = best.x[1];
  out.c = std::exp(best.x[2]);
  out.d = d.use_d ? std::exp(best.x[3]) : 0.0;
  return out;
}

TruncNormalParams emos_predictive(const EmosParams& params,
                                  std::span<const double> members) {
  double sum = 0.0;
  for (double m : members) sum += m;
  const double mu = params.a * sum + params.b;
  const double v = variance_of(members);
  const double s2 = std::max(params.c + params.d * v, 1e-300);
  return TruncNormalParams{mu, std::sqrt(s2)};
}

void EmosCalibrator::do_fit(std::span<const TrainingPair> pairs) {
  const EmosParams* warm = fitted() ? &params_ : nullptr;
  params_ = fit_emos(pairs, seed(), warm, options().emos_multistarts, &report_);
}

std::vector<double> EmosCalibrator::do_predict(
    const EnsembleForecast& raw) const {
  const TruncNormalParams tn = emos_predictive(params_, raw.members);
  std::vector<double> out;
  out.reserve(grid().levels.size());
  for (double q : grid().levels) out.push_back(tn_quantile(tn, q));
  return out;
}

nlohmann::json EmosCalibrator::params_json() const {
  return nlohmann::json{
      {"a", params_.a}, {"b", params_.b}, {"c", params_.c}, {"d", params_.d}};
}

void EmosCalibrator::load_params(const nlohmann::json& j) {
  params_.a = j.at("a").get<double>();
  params_.b = j.at("b").get<double>();
  params_.c = j.at("c").get<double>();
  params_.d = j.at("d").get<double>();
}

}  // namespace powcal
