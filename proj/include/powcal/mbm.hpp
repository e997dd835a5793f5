#pragma once

#include <cstdint>
#include <span>

#include "powcal/calibrator.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Member-by-member affine adjustment that preserves the ensemble's rank
/// structure. Each member x_i maps to
///   alpha + beta * xbar + tau * (x_i - xbar)
/// with tau^2 = g1^2 + g2^2 / S^2, where S^2 is the ensemble variance, so
/// small-spread ensembles are inflated more strongly.
struct MbmParams {
  double alpha = 0.0;
  double beta = 1.0;
  double g1 = 1.0;
  double g2 = 0.0;
};

/// alpha, beta come from least squares of y on the ensemble mean; g1, g2
/// minimise the mean empirical CRPS of the adjusted ensemble by BFGS with
/// analytic gradients (|.| smoothed near zero).
MbmParams fit_mbm(std::span<const TrainingPair> pairs,
                  const MbmParams* warm = nullptr, FitReport* report = nullptr);

/// Adjusted members in member order (negative values clipped afterwards by
/// the calibrator wrapper; this returns the raw affine map).
std::vector<double> mbm_adjust(const MbmParams& params,
                               std::span<const double> members);

class MbmCalibrator final : public Calibrator {
 public:
  MbmCalibrator(QuantileGrid grid, std::uint64_t seed, MethodOptions opts)
      : Calibrator("mbm", std::move(grid), seed, std::move(opts)) {}
  const MbmParams& params() const { return params_; }

 protected:
  void do_fit(std::span<const TrainingPair> pairs) override;
  std::vector<double> do_predict(const EnsembleForecast& raw) const override;
  nlohmann::json params_json() const override;
  void load_params(const nlohmann::json& j) override;

 private:
  MbmParams params_;
};

}  // namespace powcal
