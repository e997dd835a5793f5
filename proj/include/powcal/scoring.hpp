#pragma once

#include <span>
#include <vector>

#include "powcal/exec.hpp"
#include "powcal/types.hpp"

namespace powcal {

/// CRPS of a finite ensemble treated as a step CDF:
///   mean |x_i - y| - (1/(2 K^2)) sum_ij |x_i - x_j|.
/// O(K log K) via sorting.
double crps_empirical(std::span<const double> members, double y);

/// Pinball (quantile) loss at the given level, level in (0,1).
double pinball(double level, double predicted, double y);

/// Per-sample empirical CRPS for a batch of ensembles.
void crps_batch(const std::vector<std::vector<double>>& ensembles,
                std::span<const double> ys, std::span<double> out,
                Exec exec = Exec::Parallel);

double crps_average(const std::vector<std::vector<double>>& ensembles,
                    std::span<const double> ys, Exec exec = Exec::Parallel);

/// Mean squared error of the ensemble means against the observations.
double mse_ensemble_mean(const std::vector<std::vector<double>>& ensembles,
                         std::span<const double> ys,
                         Exec exec = Exec::Parallel);

/// Skill score 1 - score/reference. A non-positive reference carries no
/// skill information; returns NaN as the explicit error value.
double skill_score(double score, double reference);

struct ReliabilityCurve {
  std::vector<double> levels;
  std::vector<double> frequency;  // empirical P(y <= forecast quantile)
};

std::vector<double> reliability_levels(double step = 0.05);

/// Fraction of observations at or below each forecast quantile. Ensembles
/// need not be pre-sorted; quantiles are read with plotting positions
/// i/(K+1) and linear interpolation.
ReliabilityCurve reliability_curve(
    const std::vector<std::vector<double>>& ensembles,
    std::span<const double> ys, const std::vector<double>& levels,
    Exec exec = Exec::Parallel);

/// Largest absolute gap between observed frequency and nominal level.
double reliability_max_deviation(const ReliabilityCurve& curve);

struct ScoreRow {
  LeadTime lead = kMinLead;
  std::string method;
  double crps = 0.0;
  double crpss = 0.0;
  double mse_ens = 0.0;
  double msess = 0.0;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;
  const ScoreRow* find(LeadTime lead, const std::string& method) const;
};

}  // namespace powcal
