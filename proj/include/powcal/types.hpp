#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "powcal/date.hpp"

namespace powcal {

/// Forecast horizon in days.
using LeadTime = int;
inline constexpr LeadTime kMinLead = 1;
inline constexpr LeadTime kMaxLead = 46;

void validate_lead(LeadTime lead);

/// One raw ensemble: the members issued on `issue` valid `lead` days later.
struct EnsembleForecast {
  Date issue;
  LeadTime lead = kMinLead;
  std::vector<double> members;

  Date valid() const { return add_days(issue, lead); }
};

/// Daily observed power, date-sorted with unique dates and values >= 0.
class ObservationSeries {
 public:
  ObservationSeries() = default;
  /// Accepts unsorted input; throws on duplicate dates or negative values.
  ObservationSeries(std::vector<Date> dates, std::vector<double> values);

  void insert(Date d, double value);
  std::optional<double> at(Date d) const;
  std::size_t size() const { return dates_.size(); }
  bool empty() const { return dates_.empty(); }
  const std::vector<Date>& dates() const { return dates_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<Date> dates_;
  std::vector<double> values_;
};

/// All raw ensembles of a run, keyed by (issue date, lead). Member counts
/// must agree across the whole panel; ragged entries are rejected.
class ForecastPanel {
 public:
  void add(EnsembleForecast f);
  const std::vector<double>* find(Date issue, LeadTime lead) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t members_per_forecast() const { return members_; }
  std::vector<LeadTime> leads() const;
  std::vector<Date> issues(LeadTime lead) const;

  const std::map<std::pair<Date, LeadTime>, std::vector<double>>& entries()
      const {
    return entries_;
  }

 private:
  std::map<std::pair<Date, LeadTime>, std::vector<double>> entries_;
  std::size_t members_ = 0;
};

/// Ordered quantile levels, strictly increasing inside (0,1).
struct QuantileGrid {
  std::vector<double> levels;

  /// Regular grid q_i = i/(k+1), i = 1..k.
  static QuantileGrid regular(int k);
  std::size_t size() const { return levels.size(); }
};

/// Post-processed forecast: values on a quantile grid, nondecreasing, >= 0.
struct CalibratedEnsemble {
  Date issue;
  LeadTime lead = kMinLead;
  std::string method;
  std::vector<double> values;
};

/// A raw ensemble paired with its verifying observation.
struct TrainingPair {
  Date issue;
  LeadTime lead = kMinLead;
  std::vector<double> members;
  double y = 0.0;
};

/// Pairs forecasts at one lead with observations at the valid date, dropping
/// issues whose observation is missing. Result is issue-date ordered.
std::vector<TrainingPair> align(const ForecastPanel& panel,
                                const ObservationSeries& obs, LeadTime lead);

/// Linear-interpolation empirical quantile of a sorted sample using plotting
/// positions i/(n+1); clamps beyond the end positions.
double empirical_quantile(std::span<const double> sorted, double q);

double mean_of(std::span<const double> xs);

/// Sample variance (denominator n-1); zero for fewer than two points.
double variance_of(std::span<const double> xs);

}  // namespace powcal
