#include "powcal/calibrator.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "powcal/bma.hpp"
#include "powcal/drn.hpp"
#include "powcal/emos.hpp"
#include "powcal/mbm.hpp"
#include "powcal/moe.hpp"
#include "powcal/qr.hpp"
#include "powcal/qrf.hpp"
#include "powcal/qrn.hpp"

namespace powcal {

Calibrator::Calibrator(std::string method, QuantileGrid grid,
                       std::uint64_t seed, MethodOptions opts)
    : method_(std::move(method)),
      grid_(std::move(grid)),
      seed_(seed),
      opts_(std::move(opts)) {}

void Calibrator::fit(std::span<const TrainingPair> pairs) {
  const std::size_t members = validate_pairs(pairs);
  if (fitted_ && members != members_) {
    throw std::invalid_argument(
        "member count changed between fits of the same calibrator");
  }
  report_ = FitReport{};
  do_fit(pairs);
  mark_fitted(members);
}

CalibratedEnsemble Calibrator::predict(const EnsembleForecast& raw) const {
  if (!fitted_) throw std::logic_error(method_ + ": predict before fit");
  if (raw.members.size() != members_) {
    throw std::invalid_argument(method_ + ": forecast has " +
                                std::to_string(raw.members.size()) +
                                " members, fitted with " +
                                std::to_string(members_));
  }
  std::vector<double> values = do_predict(raw);
  if (values.size() != grid_.levels.size()) {
    throw std::logic_error(method_ + ": predictive grid size mismatch");
  }
  // Power is nonnegative and quantiles must be nondecreasing. Round-off
  // level inversions are repaired; anything larger is a method bug.
  double running = 0.0;
  for (double& v : values) {
    if (!std::isfinite(v)) {
      throw std::logic_error(method_ + ": non-finite calibrated value");
    }
    v = std::max(0.0, v);
    if (v < running) {
      if (running - v > 1e-6 * (std::abs(running) + 1.0)) {
        throw std::logic_error(method_ + ": crossing quantiles");
      }
      v = running;
    }
    running = v;
  }
  return CalibratedEnsemble{raw.issue, raw.lead, method_, std::move(values)};
}

void Calibrator::update(const TrainingPair&) {
  throw std::logic_error(method_ + " does not support incremental updates");
}

nlohmann::json Calibrator::save() const {
  if (!fitted_) throw std::logic_error(method_ + ": save before fit");
  return nlohmann::json{{"format", "powcal-calibrator"},
                        {"version", 1},
                        {"method", method_},
                        {"seed", seed_},
                        {"members", members_},
                        {"grid", grid_.levels},
                        {"options", method_options_json(opts_)},
                        {"params", params_json()}};
}

std::unique_ptr<Calibrator> Calibrator::create(const std::string& method,
                                               const QuantileGrid& grid,
                                               std::uint64_t seed,
                                               const MethodOptions& opts) {
  if (grid.levels.empty()) throw std::invalid_argument("empty quantile grid");
  double prev = 0.0;
  for (double q : grid.levels) {
    if (!(q > prev && q < 1.0)) {
      throw std::invalid_argument(
          "quantile levels must increase strictly within (0,1)");
    }
    prev = q;
  }
  if (method == "emos") return std::make_unique<EmosCalibrator>(grid, seed, opts);
  if (method == "bma") return std::make_unique<BmaCalibrator>(grid, seed, opts);
  if (method == "mbm") return std::make_unique<MbmCalibrator>(grid, seed, opts);
  if (method == "qr") return std::make_unique<QrCalibrator>(grid, seed, opts);
  if (method == "drn") return std::make_unique<DrnCalibrator>(grid, seed, opts);
  if (method == "qrn") return std::make_unique<QrnCalibrator>(grid, seed, opts);
  if (method == "qrf") return std::make_unique<QrfCalibrator>(grid, seed, opts);
  if (method == "moe") return std::make_unique<MoeCalibrator>(grid, seed, opts);
  throw std::invalid_argument("unknown method: " + method);
}

std::unique_ptr<Calibrator> Calibrator::load(const nlohmann::json& doc) {
  if (doc.value("format", std::string{}) != "powcal-calibrator") {
    throw std::invalid_argument("not a calibrator document");
  }
  if (doc.value("version", 0) != 1) {
    throw std::invalid_argument("unsupported calibrator document version");
  }
  QuantileGrid grid{doc.at("grid").get<std::vector<double>>()};
  auto cal = create(doc.at("method").get<std::string>(), grid,
                    doc.at("seed").get<std::uint64_t>(),
                    method_options_from_json(doc.at("options")));
  cal->load_params(doc.at("params"));
  cal->mark_fitted(doc.at("members").get<std::size_t>());
  return cal;
}

const std::vector<std::string>& Calibrator::method_ids() {
  static const std::vector<std::string> ids = {"emos", "bma", "mbm", "qr",
                                               "drn", "qrn", "qrf", "moe"};
  return ids;
}

nlohmann::json method_options_json(const MethodOptions& o) {
  return nlohmann::json{{"emos_multistarts", o.emos_multistarts},
                        {"bma_exchangeable", o.bma_exchangeable},
                        {"bma_max_iter", o.bma_max_iter},
                        {"bma_tol", o.bma_tol},
                        {"bma_var_floor_rel", o.bma_var_floor_rel},
                        {"drn_hidden", o.drn_hidden},
                        {"qrn_hidden", o.qrn_hidden},
                        {"qrn_members_feature", o.qrn_members_feature},
                        {"net_step", o.net_step},
                        {"net_max_iter", o.net_max_iter},
                        {"net_patience", o.net_patience},
                        {"qr_ridge_rel", o.qr_ridge_rel},
                        {"moe_algorithm", o.moe_algorithm},
                        {"moe_eta", o.moe_eta},
                        {"moe_fixed_share", o.moe_fixed_share},
                        {"qrf_trees", o.qrf_trees},
                        {"qrf_min_leaf", o.qrf_min_leaf},
                        {"qrf_mtry", o.qrf_mtry},
                        {"lead_feature", o.lead_feature}};
}

MethodOptions method_options_from_json(const nlohmann::json& j) {
  MethodOptions o;
  o.emos_multistarts = j.value("emos_multistarts", o.emos_multistarts);
  o.bma_exchangeable = j.value("bma_exchangeable", o.bma_exchangeable);
  o.bma_max_iter = j.value("bma_max_iter", o.bma_max_iter);
  o.bma_tol = j.value("bma_tol", o.bma_tol);
  o.bma_var_floor_rel = j.value("bma_var_floor_rel", o.bma_var_floor_rel);
  o.drn_hidden = j.value("drn_hidden", o.drn_hidden);
  o.qrn_hidden = j.value("qrn_hidden", o.qrn_hidden);
  o.qrn_members_feature = j.value("qrn_members_feature", o.qrn_members_feature);
  o.net_step = j.value("net_step", o.net_step);
  o.net_max_iter = j.value("net_max_iter", o.net_max_iter);
  o.net_patience = j.value("net_patience", o.net_patience);
  o.qr_ridge_rel = j.value("qr_ridge_rel", o.qr_ridge_rel);
  o.moe_algorithm = j.value("moe_algorithm", o.moe_algorithm);
  o.moe_eta = j.value("moe_eta", o.moe_eta);
  o.moe_fixed_share = j.value("moe_fixed_share", o.moe_fixed_share);
  o.qrf_trees = j.value("qrf_trees", o.qrf_trees);
  o.qrf_min_leaf = j.value("qrf_min_leaf", o.qrf_min_leaf);
  o.qrf_mtry = j.value("qrf_mtry", o.qrf_mtry);
  o.lead_feature = j.value("lead_feature", o.lead_feature);
  return o;
}

std::size_t validate_pairs(std::span<const TrainingPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("empty training set");
  const std::size_t k = pairs.front().members.size();
  if (k < 2) throw std::invalid_argument("need at least two members");
  for (const TrainingPair& p : pairs) {
    if (p.members.size() != k) {
      throw std::invalid_argument("ragged member counts in training set");
    }
    for (double m : p.members) {
      if (!std::isfinite(m)) {
        throw std::invalid_argument("non-finite member value");
      }
    }
    if (!std::isfinite(p.y) || p.y < 0.0) {
      throw std::invalid_argument(
          "observations must be finite and nonnegative");
    }
  }
  return k;
}

}  // namespace powcal
