#include "powcal/harness.hpp"

#include <algorithm>
#include <stdexcept>

#include "powcal/rng.hpp"

namespace powcal {
namespace {

int stride_for(const OnlineConfig& config, const std::string& method) {
  const auto it = config.refit_stride.find(method);
  if (it != config.refit_stride.end()) {
    if (it->second < 1) {
      throw std::invalid_argument("refit stride must be >= 1");
    }
    return it->second;
  }
  return (method == "qrf" || method == "qrn") ? 10 : 1;
}

std::vector<std::string> resolve_methods(const OnlineConfig& config) {
  if (config.methods.empty()) return Calibrator::method_ids();
  const auto& known = Calibrator::method_ids();
  for (const std::string& m : config.methods) {
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw std::invalid_argument("unknown method: " + m);
    }
  }
  return config.methods;
}

std::vector<LeadTime> resolve_leads(const ForecastPanel& panel,
                                    const OnlineConfig& config) {
  if (config.leads.empty()) return panel.leads();
  std::vector<LeadTime> leads = config.leads;
  std::sort(leads.begin(), leads.end());
  leads.erase(std::unique(leads.begin(), leads.end()), leads.end());
  for (LeadTime l : leads) validate_lead(l);
  return leads;
}

/// Runs one (lead, method) online pass over the aligned pairs. Returns one
/// calibrated forecast per evaluation index, or an empty vector when the
/// fit fails (the failure message is appended to `warnings`).
std::vector<CalibratedEnsemble> run_method_lead(
    const std::string& method, LeadTime lead,
    std::span<const TrainingPair> pairs, const OnlineConfig& config,
    std::vector<std::string>* warnings) {
  const std::size_t n = pairs.size();
  const std::size_t warmup = static_cast<std::size_t>(config.warmup);
  std::vector<CalibratedEnsemble> out;
  out.reserve(n - warmup);
  const int stride = stride_for(config, method);
  auto cal =
      Calibrator::create(method, config.grid,
                         hash_combine(config.seed, static_cast<std::uint64_t>(lead)),
                         config.options);
  try {
    std::size_t last_fit = 0;
    for (std::size_t t = warmup; t < n; ++t) {
      if (cal->supports_update()) {
        if (t == warmup) {
          cal->fit(pairs.subspan(0, warmup));
        } else {
          cal->update(pairs[t - 1]);
        }
      } else if (t == warmup ||
                 t - last_fit >= static_cast<std::size_t>(stride)) {
        cal->fit(pairs.subspan(0, t));
        last_fit = t;
      }
      out.push_back(cal->predict(
          EnsembleForecast{pairs[t].issue, lead, pairs[t].members}));
    }
  } catch (const FitError& e) {
    warnings->push_back("lead " + std::to_string(lead) + " method " + method +
                        ": " + e.what());
    return {};
  }
  return out;
}

struct LeadScoreInputs {
  std::vector<double> ys;
  std::vector<std::vector<double>> raw;
  std::vector<std::vector<double>> clim;
  std::vector<std::vector<double>> boot;
};

void append_scores(ScoreTable* table, LeadTime lead, const std::string& method,
                   const std::vector<std::vector<double>>& ensembles,
                   std::span<const double> ys, double crps_ref,
                   double mse_ref) {
  ScoreRow row;
  row.lead = lead;
  row.method = method;
  row.crps = crps_average(ensembles, ys);
  row.crpss = skill_score(row.crps, crps_ref);
  row.mse_ens = mse_ensemble_mean(ensembles, ys);
  row.msess = skill_score(row.mse_ens, mse_ref);
  table->rows.push_back(std::move(row));
}

}  // namespace

OnlineResult run_online(const ForecastPanel& panel,
                        const ObservationSeries& obs,
                        const OnlineConfig& config) {
  if (config.warmup < 2) {
    throw std::invalid_argument("warmup must be at least 2");
  }
  if (config.bootstrap_members < 1 || config.climatology_window < 0) {
    throw std::invalid_argument("invalid climatology configuration");
  }
  const std::vector<std::string> methods = resolve_methods(config);
  const std::vector<LeadTime> leads = resolve_leads(panel, config);
  const ObservationSeries& history = config.history ? *config.history : obs;
  const ClimatologyStore store(history);
  const std::vector<double> rel_levels =
      reliability_levels(config.reliability_step);

  OnlineResult result;
  for (const std::string& m : methods) result.calibrated[m];

  for (LeadTime lead : leads) {
    const std::vector<TrainingPair> pairs = align(panel, obs, lead);
    if (pairs.size() < static_cast<std::size_t>(config.warmup) + 1) {
      result.warnings.push_back(
          "lead " + std::to_string(lead) + " skipped: " +
          std::to_string(pairs.size()) + " aligned pairs, need at least " +
          std::to_string(config.warmup + 1) + " (warmup N + 1)");
      continue;
    }

    LeadScoreInputs in;
    const std::size_t warmup = static_cast<std::size_t>(config.warmup);
    for (std::size_t t = warmup; t < pairs.size(); ++t) {
      const Date valid = add_days(pairs[t].issue, lead);
      in.ys.push_back(pairs[t].y);
      in.raw.push_back(pairs[t].members);
      in.clim.push_back(
          {store.climatology_mean(valid, config.climatology_window)});
      in.boot.push_back(store.bootstrap_ensemble(
          valid, config.climatology_window, config.bootstrap_members,
          hash_combine(config.seed, static_cast<std::uint64_t>(valid.days))));
    }

    const double crps_ref = crps_average(in.clim, in.ys);
    const double mse_ref = mse_ensemble_mean(in.clim, in.ys);
    append_scores(&result.scores, lead, kClimatologyId, in.clim, in.ys,
                  crps_ref, mse_ref);
    append_scores(&result.scores, lead, kClimBootstrapId, in.boot, in.ys,
                  crps_ref, mse_ref);
    append_scores(&result.scores, lead, kRawId, in.raw, in.ys, crps_ref,
                  mse_ref);
    result.reliability.push_back(
        {lead, kClimBootstrapId,
         reliability_curve(in.boot, in.ys, rel_levels)});
    result.reliability.push_back(
        {lead, kRawId, reliability_curve(in.raw, in.ys, rel_levels)});

    for (const std::string& method : methods) {
      std::vector<CalibratedEnsemble> cal = run_method_lead(
          method, lead, pairs, config, &result.warnings);
      if (cal.empty()) continue;
      std::vector<std::vector<double>> ensembles;
      ensembles.reserve(cal.size());
      for (const CalibratedEnsemble& c : cal) ensembles.push_back(c.values);
      append_scores(&result.scores, lead, method, ensembles, in.ys, crps_ref,
                    mse_ref);
      result.reliability.push_back(
          {lead, method, reliability_curve(ensembles, in.ys, rel_levels)});
      auto& sink = result.calibrated[method];
      sink.insert(sink.end(), std::make_move_iterator(cal.begin()),
                  std::make_move_iterator(cal.end()));
    }
  }
  return result;
}

ConvergenceCurve convergence_study(const ForecastPanel& panel,
                                   const ObservationSeries& obs,
                                   const OnlineConfig& config,
                                   std::vector<int> sizes) {
  if (sizes.empty()) throw std::invalid_argument("empty size list");
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  if (sizes.front() < 2) {
    throw std::invalid_argument("training sizes must be at least 2");
  }
  const std::vector<std::string> methods = resolve_methods(config);
  const std::vector<LeadTime> leads = resolve_leads(panel, config);

  std::vector<std::vector<TrainingPair>> per_lead;
  for (LeadTime lead : leads) {
    per_lead.push_back(align(panel, obs, lead));
    if (per_lead.back().size() < static_cast<std::size_t>(sizes.back()) + 1) {
      throw std::invalid_argument(
          "lead " + std::to_string(lead) + ": largest training size " +
          std::to_string(sizes.back()) + " needs at least " +
          std::to_string(sizes.back() + 1) + " aligned pairs");
    }
  }

  ConvergenceCurve curve;
  for (int size : sizes) {
    for (const std::string& method : methods) {
      double crps_sum = 0.0;
      for (std::size_t li = 0; li < leads.size(); ++li) {
        const std::vector<TrainingPair>& pairs = per_lead[li];
        auto cal = Calibrator::create(
            method, config.grid,
            hash_combine(config.seed, static_cast<std::uint64_t>(leads[li])),
            config.options);
        cal->fit(std::span<const TrainingPair>(pairs).subspan(
            0, static_cast<std::size_t>(size)));
        std::vector<std::vector<double>> ensembles;
        std::vector<double> ys;
        for (std::size_t t = static_cast<std::size_t>(size); t < pairs.size();
             ++t) {
          ensembles.push_back(
              cal->predict(EnsembleForecast{pairs[t].issue, leads[li],
                                            pairs[t].members})
                  .values);
          ys.push_back(pairs[t].y);
        }
        crps_sum += crps_average(ensembles, ys);
      }
      curve.rows.push_back(
          {size, method, crps_sum / static_cast<double>(leads.size())});
    }
  }
  return curve;
}

}  // namespace powcal
