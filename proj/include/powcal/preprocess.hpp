#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "powcal/date.hpp"

namespace powcal {

/// Dense 2-D field on a lat/lon index grid, row-major in lat index.
struct GridField {
  int ni = 0;
  int nj = 0;
  std::vector<double> values;

  double at(int i, int j) const;
  double& at(int i, int j);
};

GridField make_grid(int ni, int nj, double fill = 0.0);

/// Power-law extrapolation of 10 m wind speed to hub height (100 m):
/// u100 = u10 * (100/10)^alpha. Negative speeds are rejected.
GridField shear_extrapolate(const GridField& u10, double alpha = 1.0 / 7.0);

struct CapacityRecord {
  int lat_index = 0;
  int lon_index = 0;
  Date date;
  double capacity_mw = 0.0;
};

/// Installed-capacity records per grid cell and date.
class CapacityMap {
 public:
  void add(const CapacityRecord& rec);
  const std::vector<CapacityRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

 private:
  std::vector<CapacityRecord> records_;
};

/// Columns: lat_index,lon_index,date,capacity_mw. Errors cite line numbers.
CapacityMap load_capacity_csv(const std::string& path);

struct CellWeight {
  int lat_index = 0;
  int lon_index = 0;
  double weight = 0.0;
};

/// Aggregation weights w_ij = sum_t P_ij(t) / sum_ijt P_ij(t); the total
/// over all cells and dates normalises, so the weights sum to one. Cells
/// are emitted in (lat, lon) index order.
std::vector<CellWeight> capacity_weights(const CapacityMap& map);

struct DatedCellWeights {
  Date date;
  std::vector<CellWeight> weights;
};

/// Per-date variant: each date's weights are normalised by that date's
/// total capacity instead of the grand total.
std::vector<DatedCellWeights> capacity_weights_per_date(const CapacityMap& map);

/// Uniform subsample of m members without replacement, preserving the
/// original member order. Deterministic in the seed.
std::vector<double> thin_ensemble(std::span<const double> members, int m,
                                  std::uint64_t seed);

}  // namespace powcal
