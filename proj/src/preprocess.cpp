#include "powcal/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "powcal/rng.hpp"

namespace powcal {

double GridField::at(int i, int j) const {
  return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(nj) +
                static_cast<std::size_t>(j)];
}

double& GridField::at(int i, int j) {
  return values[static_cast<std::size_t>(i) * static_cast<std::size_t>(nj) +
                static_cast<std::size_t>(j)];
}

GridField make_grid(int ni, int nj, double fill) {
  if (ni <= 0 || nj <= 0)
    throw std::invalid_argument("grid dimensions must be positive");
  GridField g;
  g.ni = ni;
  g.nj = nj;
  g.values.assign(static_cast<std::size_t>(ni) * static_cast<std::size_t>(nj),
                  fill);
  return g;
}

GridField shear_extrapolate(const GridField& u10, double alpha) {
  if (u10.values.size() !=
      static_cast<std::size_t>(u10.ni) * static_cast<std::size_t>(u10.nj))
    throw std::invalid_argument("shear_extrapolate: malformed grid");
  const double factor = std::pow(10.0, alpha);
  GridField out = u10;
  for (double& v : out.values) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument(
          "shear_extrapolate: wind speed must be finite and >= 0");
    v *= factor;
  }
  return out;
}

void CapacityMap::add(const CapacityRecord& rec) {
  if (!(rec.capacity_mw >= 0.0) || !std::isfinite(rec.capacity_mw))
    throw std::invalid_argument("capacity must be finite and >= 0");
  records_.push_back(rec);
}

CapacityMap load_capacity_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open capacity file " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty capacity file");
  auto strip = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](char c) { return c == ' ' || c == '\r'; }),
            s.end());
    return s;
  };
  if (strip(line) != "lat_index,lon_index,date,capacity_mw")
    throw std::runtime_error(
        path + ":1: expected header lat_index,lon_index,date,capacity_mw");
  CapacityMap map;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = strip(line);
    if (s.empty()) continue;
    std::istringstream row(s);
    std::string lat, lon, date, mw;
    if (!std::getline(row, lat, ',') || !std::getline(row, lon, ',') ||
        !std::getline(row, date, ',') || !std::getline(row, mw))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 4 comma-separated fields");
    try {
      CapacityRecord rec;
      rec.lat_index = std::stoi(lat);
      rec.lon_index = std::stoi(lon);
      rec.date = parse_date(date);
      std::size_t used = 0;
      rec.capacity_mw = std::stod(mw, &used);
      if (used != mw.size()) throw std::invalid_argument("trailing junk");
      map.add(rec);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return map;
}

std::vector<CellWeight> capacity_weights(const CapacityMap& map) {
  if (map.empty()) throw std::invalid_argument("capacity map is empty");
  std::map<std::pair<int, int>, double> per_cell;
  double total = 0.0;
  for (const auto& rec : map.records()) {
    per_cell[{rec.lat_index, rec.lon_index}] += rec.capacity_mw;
    total += rec.capacity_mw;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("capacity weights undefined: total capacity is zero");
  std::vector<CellWeight> out;
  out.reserve(per_cell.size());
  for (const auto& [cell, mw] : per_cell)
    out.push_back(CellWeight{cell.first, cell.second, mw / total});
  return out;
}

std::vector<DatedCellWeights> capacity_weights_per_date(
    const CapacityMap& map) {
  if (map.empty()) throw std::invalid_argument("capacity map is empty");
  std::map<Date, std::map<std::pair<int, int>, double>> by_date;
  for (const auto& rec : map.records())
    by_date[rec.date][{rec.lat_index, rec.lon_index}] += rec.capacity_mw;
  std::vector<DatedCellWeights> out;
  for (const auto& [date, cells] : by_date) {
    double total = 0.0;
    for (const auto& [cell, mw] : cells) total += mw;
    if (!(total > 0.0))
      throw std::invalid_argument("capacity weights undefined on " +
                                  format_date(date) + ": total is zero");
    DatedCellWeights dated;
    dated.date = date;
    for (const auto& [cell, mw] : cells)
      dated.weights.push_back(CellWeight{cell.first, cell.second, mw / total});
    out.push_back(std::move(dated));
  }
  return out;
}

std::vector<double> thin_ensemble(std::span<const double> members, int m,
                                  std::uint64_t seed) {
  const int k = static_cast<int>(members.size());
  if (m < 1 || m > k)
    throw std::invalid_argument("thin_ensemble: subsample size " +
                                std::to_string(m) + " outside [1, " +
                                std::to_string(k) + "]");
  std::vector<int> idx(members.size());
  std::iota(idx.begin(), idx.end(), 0);
  CounterRng rng(seed, 0x7411);
  // partial Fisher-Yates: the first m slots end up a uniform subset
  for (int i = 0; i < m; ++i) {
    const int j = i + rng.uniform_int(k - i);
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i : idx) out.push_back(members[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace powcal
