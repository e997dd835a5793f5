#include "powcal/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace powcal {

void validate_lead(LeadTime lead) {
  if (lead < kMinLead || lead > kMaxLead)
    throw std::invalid_argument("lead time " + std::to_string(lead) +
                                " outside [" + std::to_string(kMinLead) +
                                ", " + std::to_string(kMaxLead) + "]");
}

ObservationSeries::ObservationSeries(std::vector<Date> dates,
                                     std::vector<double> values) {
  if (dates.size() != values.size())
    throw std::invalid_argument("observation dates/values length mismatch");
  std::vector<std::size_t> order(dates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return dates[a] < dates[b]; });
  dates_.reserve(dates.size());
  values_.reserve(values.size());
  for (std::size_t i : order) {
    if (!dates_.empty() && dates_.back() == dates[i])
      throw std::invalid_argument("duplicate observation date " +
                                  format_date(dates[i]));
    if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
      throw std::invalid_argument("observation at " + format_date(dates[i]) +
                                  " must be finite and >= 0");
    dates_.push_back(dates[i]);
    values_.push_back(values[i]);
  }
}

void ObservationSeries::insert(Date d, double value) {
  if (!(value >= 0.0) || !std::isfinite(value))
    throw std::invalid_argument("observation at " + format_date(d) +
                                " must be finite and >= 0");
  const auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it != dates_.end() && *it == d)
    throw std::invalid_argument("duplicate observation date " +
                                format_date(d));
  const auto pos = static_cast<std::size_t>(it - dates_.begin());
  dates_.insert(it, d);
  values_.insert(values_.begin() + static_cast<std::ptrdiff_t>(pos), value);
}

std::optional<double> ObservationSeries::at(Date d) const {
  const auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end() || *it != d) return std::nullopt;
  return values_[static_cast<std::size_t>(it - dates_.begin())];
}

void ForecastPanel::add(EnsembleForecast f) {
  validate_lead(f.lead);
  if (f.members.size() < 2)
    throw std::invalid_argument("ensemble needs at least two members");
  for (double m : f.members)
    if (!std::isfinite(m))
      throw std::invalid_argument("non-finite member in forecast issued " +
                                  format_date(f.issue));
  if (members_ == 0)
    members_ = f.members.size();
  else if (f.members.size() != members_)
    throw std::invalid_argument(
        "ragged member count: panel holds " + std::to_string(members_) +
        " members but forecast issued " + format_date(f.issue) + " lead " +
        std::to_string(f.lead) + " has " + std::to_string(f.members.size()));
  const auto key = std::make_pair(f.issue, f.lead);
  if (entries_.count(key))
    throw std::invalid_argument("duplicate forecast for issue " +
                                format_date(f.issue) + " lead " +
                                std::to_string(f.lead));
  entries_.emplace(key, std::move(f.members));
}

const std::vector<double>* ForecastPanel::find(Date issue,
                                               LeadTime lead) const {
  const auto it = entries_.find(std::make_pair(issue, lead));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<LeadTime> ForecastPanel::leads() const {
  std::vector<LeadTime> out;
  for (const auto& [key, members] : entries_)
    if (out.empty() || std::find(out.begin(), out.end(), key.second) == out.end())
      out.push_back(key.second);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Date> ForecastPanel::issues(LeadTime lead) const {
  std::vector<Date> out;
  for (const auto& [key, members] : entries_)
    if (key.second == lead) out.push_back(key.first);
  return out;  // map order is already (issue, lead) sorted
}

QuantileGrid QuantileGrid::regular(int k) {
  if (k < 1) throw std::invalid_argument("quantile grid needs k >= 1");
  QuantileGrid g;
  g.levels.reserve(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i)
    g.levels.push_back(static_cast<double>(i) / (k + 1));
  return g;
}

std::vector<TrainingPair> align(const ForecastPanel& panel,
                                const ObservationSeries& obs, LeadTime lead) {
  validate_lead(lead);
  std::vector<TrainingPair> out;
  for (const auto& [key, members] : panel.entries()) {
    if (key.second != lead) continue;
    const auto y = obs.at(add_days(key.first, lead));
    if (!y) continue;
    out.push_back(TrainingPair{key.first, lead, members, *y});
  }
  return out;
}

double empirical_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty())
    throw std::invalid_argument("empirical_quantile: empty sample");
  const auto n = static_cast<double>(sorted.size());
  const double pos = q * (n + 1.0);  // plotting position of level q
  if (pos <= 1.0) return sorted.front();
  if (pos >= n) return sorted.back();
  const auto lo = static_cast<std::size_t>(pos) - 1;  // position i -> index i-1
  const double frac = pos - static_cast<double>(lo + 1);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

}  // namespace powcal
