// Synthetic training-pair generators with a known conditional law of the
// outcome given the realized ensemble, used by the recovery tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "powcal/rng.hpp"
#include "powcal/scoring.hpp"
#include "powcal/synthgen.hpp"
#include "powcal/types.hpp"

namespace fixture {

struct Conditioned {
  int n = 500;
  int members = 8;
  std::uint64_t seed = 1;
  double center = 50.0;     // long-run ensemble location
  double wobble = 8.0;      // sd of the per-day location
  double spread_lo = 1.0;   // per-day member spread range
  double spread_hi = 3.0;
  double shift = 0.0;       // y = xbar + shift + noise
  double noise_mult = 0.0;  // noise sd as a multiple of the realized sd
  double noise_abs = 0.0;   // absolute noise sd component
};

/// y_t = X̄_t + shift + z_t * sqrt((noise_mult * S_t)^2 + noise_abs^2),
/// where X̄_t and S_t are the realized ensemble mean and sample sd.
inline std::vector<powcal::TrainingPair> conditioned_pairs(
    const Conditioned& c) {
  powcal::CounterRng rng(c.seed, 0xF1);
  std::vector<powcal::TrainingPair> pairs;
  pairs.reserve(static_cast<std::size_t>(c.n));
  for (int t = 0; t < c.n; ++t) {
    const double mu = c.center + c.wobble * rng.normal();
    const double s =
        c.spread_lo + (c.spread_hi - c.spread_lo) * rng.uniform();
    powcal::TrainingPair pair;
    pair.issue = powcal::Date{20000 + t};
    pair.lead = 1;
    pair.members.resize(static_cast<std::size_t>(c.members));
    double sum = 0.0;
    for (double& m : pair.members) {
      m = mu + s * rng.normal();
      sum += m;
    }
    const double xbar = sum / static_cast<double>(c.members);
    double ss = 0.0;
    for (double m : pair.members) ss += (m - xbar) * (m - xbar);
    const double sd = std::sqrt(ss / static_cast<double>(c.members - 1));
    const double noise_sd = std::sqrt(c.noise_mult * c.noise_mult * sd * sd +
                                      c.noise_abs * c.noise_abs);
    pair.y = std::max(0.0, xbar + c.shift + noise_sd * rng.normal());
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

/// Aligned pairs from the scenario generator with constant bias and
/// dispersion deflation at a single lead.
inline std::vector<powcal::TrainingPair> scenario_pairs(
    int n_dates, int members, double bias, double rho, std::uint64_t seed,
    double error_scale = 5.0) {
  powcal::ScenarioConfig config;
  config.n_dates = n_dates;
  config.leads = {1};
  config.members = members;
  config.bias = powcal::Schedule::constant(bias);
  config.dispersion = powcal::Schedule::constant(rho);
  config.error_scale = powcal::Schedule::constant(error_scale);
  config.seed = seed;
  const powcal::Scenario scenario = powcal::generate(config);
  return powcal::align(scenario.panel, scenario.obs, 1);
}

inline powcal::EnsembleForecast random_ensemble(powcal::CounterRng& rng,
                                                int members, double center,
                                                double spread) {
  powcal::EnsembleForecast raw;
  raw.issue = powcal::Date{30000 + static_cast<int>(rng.uniform_int(1000))};
  raw.lead = 1;
  raw.members.resize(static_cast<std::size_t>(members));
  for (double& m : raw.members) m = center + spread * rng.normal();
  return raw;
}

/// Mean empirical CRPS of a calibrator's grid output over evaluation pairs.
template <typename Cal>
double mean_crps(const Cal& cal, std::span<const powcal::TrainingPair> pairs) {
  std::vector<std::vector<double>> ensembles;
  std::vector<double> ys;
  ensembles.reserve(pairs.size());
  ys.reserve(pairs.size());
  for (const powcal::TrainingPair& p : pairs) {
    powcal::EnsembleForecast raw{p.issue, p.lead, p.members};
    ensembles.push_back(cal.predict(raw).values);
    ys.push_back(p.y);
  }
  return powcal::crps_average(ensembles, ys, powcal::Exec::Serial);
}

/// Mean empirical CRPS of the raw ensembles themselves.
inline double raw_crps(std::span<const powcal::TrainingPair> pairs) {
  std::vector<std::vector<double>> ensembles;
  std::vector<double> ys;
  for (const powcal::TrainingPair& p : pairs) {
    ensembles.push_back(p.members);
    ys.push_back(p.y);
  }
  return powcal::crps_average(ensembles, ys, powcal::Exec::Serial);
}

}  // namespace fixture
