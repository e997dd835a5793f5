#pragma once

#include <cstdint>
#include <span>

#include "powcal/calibrator.hpp"
#include "powcal/network.hpp"
#include "powcal/optimize.hpp"
#include "powcal/trunc_normal.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Distributional regression network: a small perceptron maps summary
/// features of the ensemble (mean, spread, optionally lead time) to the
/// location and scale of a truncated normal, trained by gradient descent
/// on the closed-form CRPS.
struct DrnModel {
  MlpSpec spec;
  Eigen::VectorXd theta;
  Standardizer in_std;
  double y_mean = 0.0;
  double y_std = 1.0;
  bool lead_feature = false;
};

/// Feature vector for one forecast (before standardization).
Eigen::VectorXd drn_features(std::span<const double> members, LeadTime lead,
                             bool lead_feature);

TruncNormalParams drn_predictive(const DrnModel& model,
                                 std::span<const double> members,
                                 LeadTime lead);

/// Mean-CRPS objective over flat theta with analytic gradients; exposed so
/// tests can difference it numerically.
Objective drn_objective(const DrnModel& model,
                        std::span<const TrainingPair> pairs);

DrnModel fit_drn(std::span<const TrainingPair> pairs, std::uint64_t seed,
                 const MethodOptions& opts, const DrnModel* warm = nullptr,
                 FitReport* report = nullptr);

class DrnCalibrator final : public Calibrator {
 public:
  DrnCalibrator(QuantileGrid grid, std::uint64_t seed, MethodOptions opts)
      : Calibrator("drn", std::move(grid), seed, std::move(opts)) {}
  const DrnModel& model() const { return model_; }

 protected:
  void do_fit(std::span<const TrainingPair> pairs) override;
  std::vector<double> do_predict(const EnsembleForecast& raw) const override;
  nlohmann::json params_json() const override;
  void load_params(const nlohmann::json& j) override;

 private:
  DrnModel model_;
};

}  // namespace powcal
