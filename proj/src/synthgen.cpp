#include "powcal/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "powcal/rng.hpp"

namespace powcal {

namespace {

constexpr std::uint64_t kTruthStream = 0x517;
constexpr std::uint64_t kEtaStream = 0xE7A;
constexpr std::uint64_t kXiStream = 0x319;
constexpr double kTwoPi = 6.283185307179586476925;

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

void check_config(const ScenarioConfig& c) {
  if (c.n_dates < 1) throw std::invalid_argument("scenario needs n_dates >= 1");
  if (c.members < 2) throw std::invalid_argument("scenario needs members >= 2");
  if (c.leads.empty()) throw std::invalid_argument("scenario needs leads");
  for (LeadTime l : c.leads) validate_lead(l);
  if (!(c.target_mean > 0.0))
    throw std::invalid_argument("scenario target_mean must be positive");
  if (!(std::fabs(c.ar_coef) < 1.0))
    throw std::invalid_argument("scenario AR coefficient must satisfy |phi| < 1");
  if (c.history_years < 1)
    throw std::invalid_argument("scenario needs history_years >= 1");
}

Date history_start(const ScenarioConfig& c, int years) {
  const Ymd s = to_ymd(c.start);
  int day = s.day;
  // clamp Feb 29 starts back to the 28th in non-leap anchor years
  while (true) {
    try {
      return make_date(s.year - years, s.month, day);
    } catch (const std::invalid_argument&) {
      --day;
    }
  }
}

/// Deterministic truth path over [from, to], scaled so its mean over the
/// whole span equals target_mean. The AR recursion always starts at the
/// history anchor so any sub-span of the same scenario sees the same path.
std::vector<double> truth_path(const ScenarioConfig& c, Date from, Date to,
                               double* scale_out) {
  const int n = to.days - from.days + 1;
  if (n <= 0) throw std::invalid_argument("truth span is empty");
  std::vector<double> raw(static_cast<std::size_t>(n));
  double x = std::fabs(c.ar_coef) < 1.0
                 ? c.ar_std / std::sqrt(1.0 - c.ar_coef * c.ar_coef) *
                       normal_at(c.seed, kTruthStream, from.days - 1)
                 : 0.0;
  for (int i = 0; i < n; ++i) {
    const Date d = add_days(from, i);
    x = c.ar_coef * x + c.ar_std * normal_at(c.seed, kTruthStream, d.days);
    const double season =
        c.seasonal_amplitude *
        std::cos(kTwoPi * (canonical_doy(d) - 15.0) / 365.25);
    raw[static_cast<std::size_t>(i)] = softplus(1.0 + season + x);
  }
  double mean = 0.0;
  for (double v : raw) mean += v;
  mean /= static_cast<double>(n);
  const double scale = c.target_mean / mean;
  for (double& v : raw) v *= scale;
  if (scale_out) *scale_out = scale;
  return raw;
}

}  // namespace

double Schedule::at(LeadTime lead) const {
  if (sat_lead <= 1 || lead >= sat_lead) return end;
  if (lead <= 1) return start;
  const double frac =
      static_cast<double>(lead - 1) / static_cast<double>(sat_lead - 1);
  return start + (end - start) * frac;
}

std::vector<LeadTime> all_leads() {
  std::vector<LeadTime> out;
  for (LeadTime l = kMinLead; l <= kMaxLead; ++l) out.push_back(l);
  return out;
}

Scenario generate(const ScenarioConfig& config) {
  check_config(config);
  const LeadTime max_lead =
      *std::max_element(config.leads.begin(), config.leads.end());
  const Date h0 = history_start(config, config.history_years);
  const Date obs_end = add_days(config.start, config.n_dates - 1 + max_lead);

  Scenario sc;
  const auto truth = truth_path(config, h0, obs_end, &sc.scale);
  auto truth_at = [&](Date d) {
    return truth[static_cast<std::size_t>(d.days - h0.days)];
  };

  {
    std::vector<Date> dates;
    std::vector<double> values;
    for (Date d = config.start; d <= obs_end; d = add_days(d, 1)) {
      dates.push_back(d);
      values.push_back(truth_at(d));
    }
    sc.obs = ObservationSeries(std::move(dates), std::move(values));
  }

  for (int i = 0; i < config.n_dates; ++i) {
    const Date issue = add_days(config.start, i);
    for (LeadTime lead : config.leads) {
      const Date valid = add_days(issue, lead);
      const double y = truth_at(valid);
      const double b = config.bias.at(lead);
      const double rho = config.dispersion.at(lead);
      const double s = config.error_scale.at(lead);
      const double eta = config.shared_error_scale * s *
                         normal_at(config.seed, kEtaStream, valid.days);
      EnsembleForecast f;
      f.issue = issue;
      f.lead = lead;
      f.members.reserve(static_cast<std::size_t>(config.members));
      for (int m = 0; m < config.members; ++m) {
        const double xi =
            normal_at(config.seed, hash_combine(kXiStream, static_cast<std::uint64_t>(m)),
                      valid.days);
        f.members.push_back(std::max(0.0, y + b + rho * s * xi + eta));
      }
      sc.panel.add(std::move(f));
    }
  }
  return sc;
}

ObservationSeries history(const ScenarioConfig& config, int years) {
  check_config(config);
  if (years < 1) throw std::invalid_argument("history needs years >= 1");
  if (years > config.history_years)
    throw std::invalid_argument(
        "history: requested " + std::to_string(years) +
        " years but the scenario anchors only " +
        std::to_string(config.history_years) +
        "; raise ScenarioConfig::history_years");
  // The truth path is always anchored at the scenario's full history span so
  // generate() and history() agree on every shared date.
  const LeadTime max_lead =
      *std::max_element(config.leads.begin(), config.leads.end());
  const Date h0 = history_start(config, config.history_years);
  const Date obs_end = add_days(config.start, config.n_dates - 1 + max_lead);
  const auto truth = truth_path(config, h0, obs_end, nullptr);

  const Date first = history_start(config, years);
  std::vector<Date> dates;
  std::vector<double> values;
  for (Date d = first; d < config.start; d = add_days(d, 1)) {
    dates.push_back(d);
    values.push_back(truth[static_cast<std::size_t>(d.days - h0.days)]);
  }
  return ObservationSeries(std::move(dates), std::move(values));
}

}  // namespace powcal
