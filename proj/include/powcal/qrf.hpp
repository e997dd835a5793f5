#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "powcal/calibrator.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Quantile regression forest over sorted-ensemble features. Trees are
/// grown on bootstrap resamples with variance-reduction splits; prediction
/// pools the training responses of the leaves a query lands in, weighting
/// each observation by 1 / (leaf size * trees), and reads quantiles off
/// the pooled weighted distribution.
struct QrfNode {
  int feature = -1;        // -1 => leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<int> rows;   // training rows, leaves only
};

struct QrfTree {
  std::vector<QrfNode> nodes;
};

struct QrfForest {
  std::vector<QrfTree> trees;
  std::vector<std::vector<double>> features;  // training design matrix
  std::vector<double> response;
  bool lead_feature = false;
};

QrfForest fit_qrf(std::span<const TrainingPair> pairs, std::uint64_t seed,
                  int n_trees, int min_leaf, int mtry, bool lead_feature,
                  FitReport* report = nullptr);

std::vector<double> qrf_quantiles(const QrfForest& forest,
                                  std::span<const double> members,
                                  LeadTime lead,
                                  std::span<const double> levels);

class QrfCalibrator final : public Calibrator {
 public:
  QrfCalibrator(QuantileGrid grid, std::uint64_t seed, MethodOptions opts)
      : Calibrator("qrf", std::move(grid), seed, std::move(opts)) {}
  const QrfForest& forest() const { return forest_; }

 protected:
  void do_fit(std::span<const TrainingPair> pairs) override;
  std::vector<double> do_predict(const EnsembleForecast& raw) const override;
  nlohmann::json params_json() const override;
  void load_params(const nlohmann::json& j) override;

 private:
  QrfForest forest_;
};

}  // namespace powcal
