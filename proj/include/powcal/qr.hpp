#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "powcal/calibrator.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Linear quantile regression on the sorted ensemble. One coefficient
/// vector per target level; features are an intercept plus the order
/// statistics of the ensemble (optionally a lead-time column).
struct QrParams {
  std::vector<double> levels;
  Eigen::MatrixXd beta;  // (features) x (levels)
  bool lead_feature = false;
};

/// Iteratively reweighted least squares on the smoothed pinball loss with a
/// small ridge term for stability. `warm` seeds the coefficients and cuts
/// the iteration budget.
QrParams fit_qr(std::span<const TrainingPair> pairs,
                std::span<const double> levels, bool lead_feature,
                double ridge_rel, const QrParams* warm = nullptr,
                FitReport* report = nullptr);

std::vector<double> qr_predict(const QrParams& params,
                               std::span<const double> members, LeadTime lead);

class QrCalibrator final : public Calibrator {
 public:
  QrCalibrator(QuantileGrid grid, std::uint64_t seed, MethodOptions opts)
      : Calibrator("qr", std::move(grid), seed, std::move(opts)) {}
  const QrParams& params() const { return params_; }

 protected:
  void do_fit(std::span<const TrainingPair> pairs) override;
  std::vector<double> do_predict(const EnsembleForecast& raw) const override;
  nlohmann::json params_json() const override;
  void load_params(const nlohmann::json& j) override;

 private:
  QrParams params_;
};

}  // namespace powcal
