#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Raised when a fit cannot produce usable parameters (degenerate data,
/// diverged optimisation, violated internal invariants).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tuning knobs shared across methods; each method reads its own subset.
struct MethodOptions {
  // emos
  int emos_multistarts = 3;
  // bma
  bool bma_exchangeable = true;
  int bma_max_iter = 200;
  double bma_tol = 1e-8;
  double bma_var_floor_rel = 1e-3;  // sigma floor relative to sd(y)
  // networks
  int drn_hidden = 16;
  int qrn_hidden = 32;
  bool qrn_members_feature = true;  // false = intercept-only network
  double net_step = 0.05;
  int net_max_iter = 1500;
  int net_patience = 40;
  // qr
  double qr_ridge_rel = 1e-8;
  // moe
  std::string moe_algorithm = "ewa";  // "ewa" | "fixed_share"
  double moe_eta = 0.0;               // 0 = auto-tuned from observed losses
  double moe_fixed_share = 0.05;      // alpha used by the fixed_share variant
  // qrf
  int qrf_trees = 200;
  int qrf_min_leaf = 5;
  int qrf_mtry = 0;  // 0 = ceil(sqrt(#features))
  // joint fitting across leads for the tree/network regressors
  bool lead_feature = false;
};

nlohmann::json method_options_json(const MethodOptions& o);
MethodOptions method_options_from_json(const nlohmann::json& j);

struct FitReport {
  bool converged = true;
  int iterations = 0;
  std::vector<double> objective_trace;
  std::string detail;
};

/// Common contract of the post-processing methods: fit on aligned
/// (ensemble, observation) pairs, then map a raw ensemble to values on the
/// quantile grid (nondecreasing, nonnegative). Refitting an already fitted
/// calibrator warm starts from the previous parameters where the method
/// supports it.
class Calibrator {
 public:
  Calibrator(std::string method, QuantileGrid grid, std::uint64_t seed,
             MethodOptions opts);
  virtual ~Calibrator() = default;

  const std::string& method() const { return method_; }
  const QuantileGrid& grid() const { return grid_; }
  std::uint64_t seed() const { return seed_; }
  const MethodOptions& options() const { return opts_; }
  bool fitted() const { return fitted_; }
  std::size_t member_count() const { return members_; }
  const FitReport& last_fit() const { return report_; }

  void fit(std::span<const TrainingPair> pairs);
  CalibratedEnsemble predict(const EnsembleForecast& raw) const;

  /// Methods with sequential state (expert aggregation) accept one new pair
  /// at a time; others throw.
  virtual bool supports_update() const { return false; }
  virtual void update(const TrainingPair& pair);

  /// Self-describing serialisation: method id, grid, seed, options and the
  /// fitted parameter blob.
  nlohmann::json save() const;

  static std::unique_ptr<Calibrator> create(const std::string& method,
                                            const QuantileGrid& grid,
                                            std::uint64_t seed,
                                            const MethodOptions& opts = {});
  static std::unique_ptr<Calibrator> load(const nlohmann::json& doc);
  static const std::vector<std::string>& method_ids();

 protected:
  virtual void do_fit(std::span<const TrainingPair> pairs) = 0;
  virtual std::vector<double> do_predict(const EnsembleForecast& raw) const = 0;
  virtual nlohmann::json params_json() const = 0;
  virtual void load_params(const nlohmann::json& j) = 0;

  void mark_fitted(std::size_t members) {
    members_ = members;
    fitted_ = true;
  }
  FitReport report_;

 private:
  std::string method_;
  QuantileGrid grid_;
  std::uint64_t seed_ = 0;
  MethodOptions opts_;
  std::size_t members_ = 0;
  bool fitted_ = false;
};

/// Validates a training batch: non-empty, uniform member counts, finite
/// members, finite nonnegative observations. Returns the member count.
std::size_t validate_pairs(std::span<const TrainingPair> pairs);

}  // namespace powcal
