#pragma once

#include <cstdint>
#include <vector>

#include "powcal/types.hpp"

namespace powcal {

/// Lead-dependent scenario knob: linear ramp from `start` (lead 1) to `end`
/// (reached exactly at `sat_lead`), constant afterwards.
struct Schedule {
  double start = 0.0;
  double end = 0.0;
  int sat_lead = 1;

  double at(LeadTime lead) const;
  static Schedule constant(double v) { return Schedule{v, v, 1}; }
};

/// Synthetic wind-power scenario. The truth is a seasonal cycle plus an
/// AR(1) latent process pushed through a softplus and scaled to the target
/// mean; members around the truth carry lead-dependent bias b(l), spread
/// deflation rho(l) and error scale s(l), with the shared error component
/// and member scatter indexed by valid date so all leads verifying on the
/// same day see the same realisation.
struct ScenarioConfig {
  int n_dates = 200;
  Date start = Date{16436};  // 2015-01-01
  std::vector<LeadTime> leads;
  int members = 51;
  double target_mean = 50.0;    // MW
  double seasonal_amplitude = 0.6;
  double ar_coef = 0.8;
  double ar_std = 0.4;
  Schedule bias = Schedule::constant(0.0);            // MW
  Schedule dispersion = Schedule::constant(1.0);      // rho
  Schedule error_scale = Schedule::constant(5.0);     // s, MW
  double shared_error_scale = 1.0;
  int history_years = 30;
  std::uint64_t seed = 1;
};

std::vector<LeadTime> all_leads();

struct Scenario {
  ForecastPanel panel;
  ObservationSeries obs;  // covers every valid date of the panel
  double scale = 1.0;     // MW per softplus unit actually applied
};

Scenario generate(const ScenarioConfig& config);

/// Multi-year truth series with the same seasonal/AR structure and scaling,
/// ending the day before config.start.
ObservationSeries history(const ScenarioConfig& config, int years);

}  // namespace powcal
