#pragma once

#include <cstdint>
#include <span>

#include "powcal/calibrator.hpp"
#include "powcal/trunc_normal.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Nonhomogeneous regression with a truncated normal predictive law:
///   location = a * sum(members) + b
///   scale^2  = c + d * var(members)      (sample variance, n-1)
/// Exchangeable members share the single coefficient a.
struct EmosParams {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
  double d = 1.0;
};

/// Minimises the mean closed-form CRPS by BFGS with analytic gradients on
/// (mean coefficients, log-variance coefficients). Runs `multistarts`
/// seeded starts unless `warm` is given, in which case the previous
/// parameters seed a single run. When the ensemble spreads carry no
/// information (all equal), d is pinned to zero.
EmosParams fit_emos(std::span<const TrainingPair> pairs, std::uint64_t seed,
                    const EmosParams* warm = nullptr, int multistarts = 3,
                    FitReport* report = nullptr);

TruncNormalParams emos_predictive(const EmosParams& params,
                                  std::span<const double> members);

class EmosCalibrator final : public Calibrator {
 public:
  EmosCalibrator(QuantileGrid grid, std::uint64_t seed, MethodOptions opts)
      : Calibrator("emos", std::move(grid), seed, std::move(opts)) {}
  const EmosParams& params() const { return params_; }

 protected:
  void do_fit(std::span<const TrainingPair> pairs) override;
  std::vector<double> do_predict(const EnsembleForecast& raw) const override;
  nlohmann::json params_json() const override;
  void load_params(const nlohmann::json& j) override;

 private:
  EmosParams params_;
};

}  // namespace powcal
