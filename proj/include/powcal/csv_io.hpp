#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "powcal/harness.hpp"
#include "powcal/scoring.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// Readers are strict: exact headers, line-numbered diagnostics, duplicate
/// keys rejected, UTF-8 enforced. Writers emit doubles with enough digits
/// to round-trip exactly.

/// `issue_date,lead_days,member,value` with 1-based contiguous member ids.
ForecastPanel load_forecasts(const std::string& path);
void write_forecasts(const std::string& path, const ForecastPanel& panel);

/// `date,value`, values >= 0; rows may arrive unsorted.
ObservationSeries load_observations(const std::string& path);
void write_observations(const std::string& path, const ObservationSeries& obs);

/// `lead_days,method,crps,crpss,mse_ens,msess`
void write_scores(const std::string& path, const ScoreTable& table);

/// `lead_days,method,quantile,frequency`
void write_reliability(const std::string& path,
                       const std::vector<ReliabilityResult>& rows);

/// `training_size,method,crps`
void write_convergence(const std::string& path, const ConvergenceCurve& curve);

/// `issue_date,lead_days,method,quantile,value`
void write_calibrated(
    const std::string& path,
    const std::map<std::string, std::vector<CalibratedEnsemble>>& calibrated,
    const QuantileGrid& grid);

/// Keys mirror the CLI flag names so a manifest file can stand in for the
/// command line; unknown keys are rejected early.
struct RunManifest {
  static constexpr int kFormatVersion = 1;
  nlohmann::json flags;  // flag name -> scalar value

  static RunManifest load(const std::string& path);
};

}  // namespace powcal
