#include "powcal/moe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace powcal {
namespace {

double max_subgradient(std::span<const double> levels) {
  double g = 0.0;
  for (double q : levels) g = std::max(g, std::max(q, 1.0 - q));
  return g;
}

double anytime_eta(std::size_t k, std::int64_t t, double range) {
  if (range <= 0.0 || t < 1) return 0.0;
  return std::sqrt(8.0 * std::log(static_cast<double>(k)) /
                   static_cast<double>(t)) /
         range;
}

}  // namespace

MoeParams moe_init(std::span<const double> levels, std::size_t n_members,
                   double eta, double fixed_share) {
  if (levels.empty()) throw std::invalid_argument("moe: empty level grid");
  for (double q : levels) {
    if (!(q > 0.0 && q < 1.0)) {
      throw std::invalid_argument("moe: levels must lie in (0,1)");
    }
  }
  if (n_members < 1) throw std::invalid_argument("moe: need members");
  if (!(fixed_share >= 0.0 && fixed_share < 1.0)) {
    throw std::invalid_argument("moe: fixed share must lie in [0,1)");
  }
  MoeParams p;
  p.levels.assign(levels.begin(), levels.end());
  p.weights.assign(levels.size(),
                   std::vector<double>(n_members, 1.0 / static_cast<double>(
                                                           n_members)));
  p.eta = eta;
  p.fixed_share = fixed_share;
  return p;
}

void moe_update(MoeParams& params, std::span<const double> members, double y) {
  const std::size_t k = params.weights.front().size();
  if (members.size() != k) {
    throw std::invalid_argument("moe: member count mismatch");
  }
  std::vector<double> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());

  params.rounds += 1;
  const double spread = sorted.back() - sorted.front();
  params.loss_range = std::max(
      params.loss_range, max_subgradient(params.levels) * spread);
  const double eta = params.eta > 0.0
                         ? params.eta
                         : anytime_eta(k, params.rounds, params.loss_range);
  if (eta <= 0.0) return;  // no information to separate the experts yet

  std::vector<double> loss(k);
  for (std::size_t l = 0; l < params.levels.size(); ++l) {
    const double q = params.levels[l];
    std::vector<double>& w = params.weights[l];
    double agg = 0.0;
    for (std::size_t i = 0; i < k; ++i) agg += w[i] * sorted[i];
    // Gradient surrogate: the pinball loss linearised at the aggregate.
    const double g = agg > y ? (1.0 - q) : -q;
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      loss[i] = g * sorted[i];
      lo = std::min(lo, loss[i]);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      w[i] *= std::exp(-eta * (loss[i] - lo));
      z += w[i];
    }
    for (double& wi : w) wi /= z;
    if (params.fixed_share > 0.0) {
      const double alpha = params.fixed_share;
      for (double& wi : w) {
        wi = (1.0 - alpha) * wi + alpha / static_cast<double>(k);
      }
    }
  }
}

std::vector<double> moe_predict(const MoeParams& params,
                                std::span<const double> members) {
  const std::size_t k = params.weights.front().size();
  if (members.size() != k) {
    throw std::invalid_argument("moe: member count mismatch");
  }
  std::vector<double> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out(params.levels.size());
  for (std::size_t l = 0; l < params.levels.size(); ++l) {
    double agg = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      agg += params.weights[l][i] * sorted[i];
    }
    out[l] = agg;
  }
  return out;
}

MoeParams fit_moe(std::span<const TrainingPair> pairs,
                  std::span<const double> levels, const std::string& algorithm,
                  double eta, double fixed_share, FitReport* report) {
  double alpha = 0.0;
  if (algorithm == "ewa") {
    alpha = 0.0;
  } else if (algorithm == "fixed_share") {
    alpha = fixed_share;
  } else {
    throw std::invalid_argument("moe: unknown algorithm '" + algorithm + "'");
  }
  const std::size_t k = pairs.front().members.size();

  // Horizon-tuned step size from the data-driven loss-range bound, unless
  // the caller pinned eta explicitly.
  double sweep_eta = eta;
  if (sweep_eta <= 0.0) {
    double range = 0.0;
    for (const TrainingPair& p : pairs) {
      const auto [lo, hi] =
          std::minmax_element(p.members.begin(), p.members.end());
      range = std::max(range, max_subgradient(levels) * (*hi - *lo));
    }
    if (range > 0.0) {
      sweep_eta = std::sqrt(8.0 * std::log(static_cast<double>(k)) /
                            static_cast<double>(pairs.size())) /
                  range;
    }
  }

  MoeParams p = moe_init(levels, k, sweep_eta, alpha);
  for (const TrainingPair& pair : pairs) {
    moe_update(p, pair.members, pair.y);
  }
  p.eta = eta;  // future incremental updates fall back to the anytime rate
  if (report) {
    report->converged = true;
    report->iterations = static_cast<int>(pairs.size());
  }
  return p;
}

void MoeCalibrator::do_fit(std::span<const TrainingPair> pairs) {
  params_ = fit_moe(pairs, grid().levels, options().moe_algorithm,
                    options().moe_eta,
                    options().moe_algorithm == "fixed_share"
                        ? options().moe_fixed_share
                        : 0.0,
                    &report_);
}

void MoeCalibrator::update(const TrainingPair& pair) {
  if (!fitted()) throw std::logic_error("moe: update before fit");
  moe_update(params_, pair.members, pair.y);
}

std::vector<double> MoeCalibrator::do_predict(
    const EnsembleForecast& raw) const {
  std::vector<double> out = moe_predict(params_, raw.members);
  // Weight vectors differ across levels, so the raw combination can cross.
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json MoeCalibrator::params_json() const {
  return nlohmann::json{{"levels", params_.levels},
                        {"weights", params_.weights},
                        {"eta", params_.eta},
                        {"fixed_share", params_.fixed_share},
                        {"rounds", params_.rounds},
                        {"loss_range", params_.loss_range}};
}

void MoeCalibrator::load_params(const nlohmann::json& j) {
  params_.levels = j.at("levels").get<std::vector<double>>();
  params_.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  params_.eta = j.at("eta").get<double>();
  params_.fixed_share = j.at("fixed_share").get<double>();
  params_.rounds = j.at("rounds").get<std::int64_t>();
  params_.loss_range = j.at("loss_range").get<double>();
}

}  // namespace powcal
