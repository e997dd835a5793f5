#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "powcal/calibrator.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Exponentially weighted forecaster combination, run independently per
/// target quantile. The experts are the sorted ensemble members; weights
/// evolve multiplicatively in the exponentiated negative loss. Updates use
/// the gradient surrogate of the pinball loss (the loss linearised at the
/// aggregated prediction), which keeps the classical EWA regret bound valid
/// for the convex pinball loss. The fixed-share variant additionally mixes
/// a little uniform mass back in each round so the combiner can track
/// regime changes.
struct MoeParams {
  std::vector<double> levels;
  // weights[q][k]: weight of sorted member k for level q. Rows sum to 1.
  std::vector<std::vector<double>> weights;
  double eta = 0.0;          // 0 => anytime schedule sqrt(8 ln K / t) / range
  double fixed_share = 0.0;  // uniform mixing fraction per round
  std::int64_t rounds = 0;   // pairs consumed so far
  double loss_range = 0.0;   // running max of the per-round surrogate spread
};

MoeParams moe_init(std::span<const double> levels, std::size_t n_members,
                   double eta, double fixed_share);

/// Consumes one (ensemble, outcome) pair: updates every level's weights.
void moe_update(MoeParams& params, std::span<const double> members, double y);

/// Weighted combination of the sorted members, one value per level
/// (re-sorted across levels by the caller if needed).
std::vector<double> moe_predict(const MoeParams& params,
                                std::span<const double> members);

/// Batch fit: a first pass bounds the surrogate loss range, then a single
/// sequential sweep runs EWA with the horizon-tuned step size.
MoeParams fit_moe(std::span<const TrainingPair> pairs,
                  std::span<const double> levels, const std::string& algorithm,
                  double eta, double fixed_share, FitReport* report = nullptr);

class MoeCalibrator final : public Calibrator {
 public:
  MoeCalibrator(QuantileGrid grid, std::uint64_t seed, MethodOptions opts)
      : Calibrator("moe", std::move(grid), seed, std::move(opts)) {}
  const MoeParams& params() const { return params_; }

  bool supports_update() const override { return true; }
  void update(const TrainingPair& pair) override;

 protected:
  void do_fit(std::span<const TrainingPair> pairs) override;
  std::vector<double> do_predict(const EnsembleForecast& raw) const override;
  nlohmann::json params_json() const override;
  void load_params(const nlohmann::json& j) override;

 private:
  MoeParams params_;
};

}  // namespace powcal
