#pragma once

#include <cstdint>
#include <vector>

#include "powcal/types.hpp"

namespace powcal {

/// Day-of-year indexed view of a multi-year observation history, used for
/// the climatological point forecast and the climatological bootstrap
/// ensemble. Feb 29 sits at canonical day 59.5, so a window of +-w days
/// around it picks up Feb 28 and Mar 1 in every year.
class ClimatologyStore {
 public:
  explicit ClimatologyStore(const ObservationSeries& history);

  /// All history values whose canonical day-of-year lies within +-w days of
  /// the target's (circular over the year). Order is deterministic:
  /// ascending day key, insertion (date) order within a key.
  std::vector<double> window_pool(Date target, int w) const;

  /// Mean of the window pool; the climatological point forecast.
  double climatology_mean(Date target, int w) const;

  /// `size` draws with replacement from the window pool.
  std::vector<double> bootstrap_ensemble(Date target, int w, int size,
                                         std::uint64_t seed) const;

  std::size_t history_size() const { return n_; }

 private:
  // buckets keyed by 2 * canonical_doy (integers 2..730; the only odd key in
  // use is 119 = Feb 29). Index 731 is the empty half-day slot the circular
  // wrap can land on between Dec 31 and Jan 1.
  std::vector<std::vector<double>> buckets_{732};
  std::size_t n_ = 0;
};

}  // namespace powcal
