#include "powcal/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace powcal {

double crps_empirical(std::span<const double> members, double y) {
  if (members.empty()) throw std::invalid_argument("crps of empty ensemble");
  if (!std::isfinite(y)) throw std::invalid_argument("crps: y not finite");
  std::vector<double> x(members.begin(), members.end());
  std::sort(x.begin(), x.end());
  const auto k = static_cast<double>(x.size());
  double mad = 0.0;     // mean |x_i - y|
  double spread = 0.0;  // sum_j x_(j) (2j - K + 1), equals sum_{i<j} (x_j-x_i)
  for (std::size_t j = 0; j < x.size(); ++j) {
    mad += std::fabs(x[j] - y);
    spread += x[j] * (2.0 * static_cast<double>(j) - k + 1.0);
  }
  return mad / k - spread / (k * k);
}

double pinball(double level, double predicted, double y) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("pinball: level must lie in (0,1)");
  const double diff = y - predicted;
  return diff >= 0.0 ? level * diff : (level - 1.0) * diff;
}

namespace {

void check_batch(const std::vector<std::vector<double>>& ensembles,
                 std::span<const double> ys) {
  if (ensembles.size() != ys.size())
    throw std::invalid_argument("batch size mismatch between ensembles and observations");
  if (ensembles.empty()) throw std::invalid_argument("empty score batch");
}

}  // namespace

void crps_batch(const std::vector<std::vector<double>>& ensembles,
                std::span<const double> ys, std::span<double> out, Exec exec) {
  check_batch(ensembles, ys);
  if (out.size() != ensembles.size())
    throw std::invalid_argument("crps_batch: output size mismatch");
  const auto n = static_cast<std::ptrdiff_t>(ensembles.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] =
          crps_empirical(ensembles[static_cast<std::size_t>(i)],
                         ys[static_cast<std::size_t>(i)]);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        crps_empirical(ensembles[static_cast<std::size_t>(i)],
                       ys[static_cast<std::size_t>(i)]);
}

double crps_average(const std::vector<std::vector<double>>& ensembles,
                    std::span<const double> ys, Exec exec) {
  std::vector<double> per(ensembles.size());
  crps_batch(ensembles, ys, per, exec);
  double acc = 0.0;  // index-ordered reduction keeps modes bit-identical
  for (double v : per) acc += v;
  return acc / static_cast<double>(per.size());
}

double mse_ensemble_mean(const std::vector<std::vector<double>>& ensembles,
                         std::span<const double> ys, Exec exec) {
  check_batch(ensembles, ys);
  const auto n = static_cast<std::ptrdiff_t>(ensembles.size());
  std::vector<double> per(ensembles.size());
  auto one = [&](std::ptrdiff_t i) {
    const auto& e = ensembles[static_cast<std::size_t>(i)];
    const double d = mean_of(e) - ys[static_cast<std::size_t>(i)];
    per[static_cast<std::size_t>(i)] = d * d;
  };
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  }
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc / static_cast<double>(per.size());
}

double skill_score(double score, double reference) {
  if (!(reference > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - score / reference;
}

std::vector<double> reliability_levels(double step) {
  if (!(step > 0.0 && step < 0.5))
    throw std::invalid_argument("reliability step must lie in (0, 0.5)");
  std::vector<double> levels;
  for (int i = 1; i * step < 1.0 - 1e-9; ++i) levels.push_back(i * step);
  return levels;
}

ReliabilityCurve reliability_curve(
    const std::vector<std::vector<double>>& ensembles,
    std::span<const double> ys, const std::vector<double>& levels, Exec exec) {
  check_batch(ensembles, ys);
  for (double q : levels)
    if (!(q > 0.0 && q < 1.0))
      throw std::invalid_argument("reliability level outside (0,1)");
  const auto n = static_cast<std::ptrdiff_t>(ensembles.size());
  std::vector<std::vector<int>> hits(
      ensembles.size(), std::vector<int>(levels.size(), 0));
  auto one = [&](std::ptrdiff_t i) {
    const auto idx = static_cast<std::size_t>(i);
    std::vector<double> sorted = ensembles[idx];
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < levels.size(); ++j)
      hits[idx][j] = ys[idx] <= empirical_quantile(sorted, levels[j]) ? 1 : 0;
  };
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  }
  ReliabilityCurve curve;
  curve.levels = levels;
  curve.frequency.assign(levels.size(), 0.0);
  for (std::size_t i = 0; i < ensembles.size(); ++i)
    for (std::size_t j = 0; j < levels.size(); ++j)
      curve.frequency[j] += hits[i][j];
  for (double& f : curve.frequency) f /= static_cast<double>(ensembles.size());
  return curve;
}

double reliability_max_deviation(const ReliabilityCurve& curve) {
  double dev = 0.0;
  for (std::size_t j = 0; j < curve.levels.size(); ++j)
    dev = std::max(dev, std::fabs(curve.frequency[j] - curve.levels[j]));
  return dev;
}

const ScoreRow* ScoreTable::find(LeadTime lead,
                                 const std::string& method) const {
  for (const auto& row : rows)
    if (row.lead == lead && row.method == method) return &row;
  return nullptr;
}

}  // namespace powcal
