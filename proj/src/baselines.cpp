#include "powcal/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "powcal/rng.hpp"

namespace powcal {

ClimatologyStore::ClimatologyStore(const ObservationSeries& history) {
  if (history.empty())
    throw std::invalid_argument("climatology needs a non-empty history");
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double key2 = 2.0 * canonical_doy(history.dates()[i]);
    buckets_[static_cast<std::size_t>(std::lround(key2))].push_back(
        history.values()[i]);
  }
  n_ = history.size();
}

std::vector<double> ClimatologyStore::window_pool(Date target, int w) const {
  if (w < 0) throw std::invalid_argument("window half-width must be >= 0");
  const double t2 = 2.0 * canonical_doy(target);
  const auto lo = static_cast<long>(std::ceil(t2 - 2.0 * w - 1e-9));
  const auto hi = static_cast<long>(std::floor(t2 + 2.0 * w + 1e-9));
  std::vector<double> pool;
  for (long k = lo; k <= hi; ++k) {
    long kk = (k - 2) % 730;
    if (kk < 0) kk += 730;
    kk += 2;
    for (double v : buckets_[static_cast<std::size_t>(kk)])
      pool.push_back(v);
  }
  return pool;
}

double ClimatologyStore::climatology_mean(Date target, int w) const {
  const auto pool = window_pool(target, w);
  if (pool.empty())
    throw std::runtime_error("climatology window around " +
                             format_date(target) + " is empty");
  double s = 0.0;
  for (double v : pool) s += v;
  return s / static_cast<double>(pool.size());
}

std::vector<double> ClimatologyStore::bootstrap_ensemble(
    Date target, int w, int size, std::uint64_t seed) const {
  if (size < 1) throw std::invalid_argument("bootstrap size must be >= 1");
  const auto pool = window_pool(target, w);
  if (pool.empty())
    throw std::runtime_error("climatology window around " +
                             format_date(target) + " is empty");
  CounterRng rng(seed, 0xB007);
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i)
    draws.push_back(pool[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(pool.size())))]);
  return draws;
}

}  // namespace powcal
