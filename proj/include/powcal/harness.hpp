#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "powcal/baselines.hpp"
#include "powcal/calibrator.hpp"
#include "powcal/scoring.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Row labels used for the reference forecasts in score/reliability tables.
inline constexpr const char* kRawId = "raw";
inline constexpr const char* kClimatologyId = "climatology";
inline constexpr const char* kClimBootstrapId = "clim_bootstrap";

struct OnlineConfig {
  int warmup = 30;  // N: training pairs required before the first prediction
  std::vector<std::string> methods;  // empty = all registered methods
  std::vector<LeadTime> leads;       // empty = every lead in the panel
  QuantileGrid grid = QuantileGrid::regular(51);
  std::uint64_t seed = 1;
  MethodOptions options;
  /// Refit every `stride` evaluation dates, warm-started in between.
  /// Methods not listed use their default (10 for qrf/qrn, else 1).
  std::map<std::string, int> refit_stride;
  double reliability_step = 0.05;
  /// Source of the climatological baselines. When null, the observation
  /// series itself is used (treated as a fixed historical reference).
  const ObservationSeries* history = nullptr;
  int climatology_window = 1;
  int bootstrap_members = 51;
};

struct ReliabilityResult {
  LeadTime lead = kMinLead;
  std::string method;
  ReliabilityCurve curve;
};

struct OnlineResult {
  /// Calibrated quantile forecasts per method, ordered by (lead, issue).
  std::map<std::string, std::vector<CalibratedEnsemble>> calibrated;
  ScoreTable scores;
  std::vector<ReliabilityResult> reliability;
  std::vector<std::string> warnings;
};

/// Expanding-window online evaluation: at each issue date with at least
/// `warmup` earlier aligned (forecast, observation) pairs, fit each method
/// on exactly those earlier pairs and predict the current date. Scores and
/// reliability are computed over the shared evaluation dates, alongside
/// raw-ensemble and climatological reference rows; skill scores use the
/// climatological point forecast as reference.
OnlineResult run_online(const ForecastPanel& panel,
                        const ObservationSeries& obs,
                        const OnlineConfig& config);

struct ConvergenceRow {
  int training_size = 0;
  std::string method;
  double crps = 0.0;
};

struct ConvergenceCurve {
  std::vector<ConvergenceRow> rows;
};

/// Fits each method cold on the first `size` pairs per lead, scores on the
/// remaining pairs, and averages the CRPS across leads.
ConvergenceCurve convergence_study(const ForecastPanel& panel,
                                   const ObservationSeries& obs,
                                   const OnlineConfig& config,
                                   std::vector<int> sizes);

}  // namespace powcal
