#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "powcal/calibrator.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Mixture of truncated normals, one component per ensemble member:
///   p(y | x) = sum_i w_i * TN(a_i + b_i * x_i, sigma_i^2)
/// In the exchangeable variant all members share a, b, sigma and the
/// weights are uniform, leaving a three-parameter model.
struct BmaParams {
  bool exchangeable = true;
  std::vector<double> a;       // intercepts; size 1 when exchangeable, else K
  std::vector<double> b;       // slopes; likewise
  std::vector<double> sigma;   // likewise
  std::vector<double> weight;  // always size K, sums to 1
};

/// Member-wise linear regression for the means followed by EM over the
/// weights and variances. The log-likelihood trace is recorded in `report`;
/// a decrease beyond round-off raises FitError.
BmaParams fit_bma(std::span<const TrainingPair> pairs, bool exchangeable,
                  int max_iter, double tol, double var_floor_rel,
                  FitReport* report = nullptr);

/// Mixture CDF at y for the given member values.
double bma_cdf(const BmaParams& params, std::span<const double> members,
               double y);

/// Inverts the mixture CDF by bracketed bisection + Newton polish.
double bma_quantile(const BmaParams& params, std::span<const double> members,
                    double q);

class BmaCalibrator final : public Calibrator {
 public:
  BmaCalibrator(QuantileGrid grid, std::uint64_t seed, MethodOptions opts)
      : Calibrator("bma", std::move(grid), seed, std::move(opts)) {}
  const BmaParams& params() const { return params_; }

 protected:
  void do_fit(std::span<const TrainingPair> pairs) override;
  std::vector<double> do_predict(const EnsembleForecast& raw) const override;
  nlohmann::json params_json() const override;
  void load_params(const nlohmann::json& j) override;

 private:
  BmaParams params_;
};

}  // namespace powcal
