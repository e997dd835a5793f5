#pragma once

#include <cstdint>
#include <span>

#include "powcal/calibrator.hpp"
#include "powcal/network.hpp"
#include "powcal/optimize.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Quantile regression network: maps the sorted ensemble (optionally plus
/// lead time) to the full vector of target quantiles in one shot. The
/// outputs parameterize the first quantile plus softplus increments, so
/// predicted quantiles are non-crossing by construction.
struct QrnModel {
  MlpSpec spec;
  Eigen::VectorXd theta;
  Standardizer in_std;
  double y_mean = 0.0;
  double y_std = 1.0;
  std::vector<double> levels;
  bool members_feature = true;
  bool lead_feature = false;
};

Eigen::VectorXd qrn_features(const QrnModel& model,
                             std::span<const double> members, LeadTime lead);

/// Quantile vector (non-decreasing, not yet clipped at zero).
std::vector<double> qrn_predict(const QrnModel& model,
                                std::span<const double> members, LeadTime lead);

/// Mean pinball loss across samples and levels over flat theta, with
/// analytic (sub)gradients.
Objective qrn_objective(const QrnModel& model,
                        std::span<const TrainingPair> pairs);

QrnModel fit_qrn(std::span<const TrainingPair> pairs,
                 std::span<const double> levels, std::uint64_t seed,
                 const MethodOptions& opts, const QrnModel* warm = nullptr,
                 FitReport* report = nullptr);

class QrnCalibrator final : public Calibrator {
 public:
  QrnCalibrator(QuantileGrid grid, std::uint64_t seed, MethodOptions opts)
      : Calibrator("qrn", std::move(grid), seed, std::move(opts)) {}
  const QrnModel& model() const { return model_; }

 protected:
  void do_fit(std::span<const TrainingPair> pairs) override;
  std::vector<double> do_predict(const EnsembleForecast& raw) const override;
  nlohmann::json params_json() const override;
  void load_params(const nlohmann::json& j) override;

 private:
  QrnModel model_;
};

}  // namespace powcal
