#include "powcal/csv_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace powcal {
namespace {

[[noreturn]] void fail(const std::string& path, std::size_t line,
                       const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c >> 5) == 0x6) {
      extra = 1;
    } else if ((c >> 4) == 0xE) {
      extra = 2;
    } else if ((c >> 3) == 0x1E) {
      extra = 3;
    } else {
      return false;
    }
    if (extra > 0 && i + extra >= s.size()) return false;
    for (std::size_t j = 1; j <= extra; ++j) {
      if ((static_cast<unsigned char>(s[i + j]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double_field(const std::string& s, const std::string& path,
                          std::size_t line) {
  if (s.empty()) fail(path, line, "empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  // Overflow comes back as +-inf and trips the finiteness check; gradual
  // underflow to subnormals (ERANGE on glibc) is a valid parse.
  if (end != s.c_str() + s.size() || !std::isfinite(v)) {
    fail(path, line, "bad numeric value '" + s + "'");
  }
  return v;
}

long parse_int_field(const std::string& s, const std::string& path,
                     std::size_t line) {
  if (s.empty()) fail(path, line, "empty integer field");
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    fail(path, line, "bad integer value '" + s + "'");
  }
  return v;
}

Date parse_date_field(const std::string& s, const std::string& path,
                      std::size_t line) {
  try {
    return parse_date(s);
  } catch (const std::exception& e) {
    fail(path, line, e.what());
  }
}

struct CsvReader {
  std::ifstream in;
  std::string path;
  std::size_t line_no = 0;

  CsvReader(const std::string& p, const std::string& header) : path(p) {
    in.open(p);
    if (!in) throw std::runtime_error("cannot open " + p);
    std::string head;
    if (!std::getline(in, head)) fail(path, 1, "missing header");
    ++line_no;
    if (!head.empty() && head.back() == '\r') head.pop_back();
    if (!valid_utf8(head)) fail(path, line_no, "invalid UTF-8");
    if (head != header) {
      fail(path, 1, "expected header '" + header + "', got '" + head + "'");
    }
  }

  bool next(std::vector<std::string>* fields, std::size_t n_fields) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (!valid_utf8(line)) fail(path, line_no, "invalid UTF-8");
      *fields = split_fields(line);
      if (fields->size() != n_fields) {
        fail(path, line_no,
             "expected " + std::to_string(n_fields) + " fields, got " +
                 std::to_string(fields->size()));
      }
      return true;
    }
    return false;
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

ForecastPanel load_forecasts(const std::string& path) {
  CsvReader reader(path, "issue_date,lead_days,member,value");
  // (issue, lead) -> member id -> value; member ids must end up 1..K.
  std::map<std::pair<Date, LeadTime>, std::map<long, double>> staged;
  std::vector<std::string> f;
  while (reader.next(&f, 4)) {
    const Date issue = parse_date_field(f[0], path, reader.line_no);
    const long lead = parse_int_field(f[1], path, reader.line_no);
    try {
      validate_lead(static_cast<LeadTime>(lead));
    } catch (const std::exception& e) {
      fail(path, reader.line_no, e.what());
    }
    const long member = parse_int_field(f[2], path, reader.line_no);
    if (member < 1) fail(path, reader.line_no, "member ids start at 1");
    const double value = parse_double_field(f[3], path, reader.line_no);
    auto& entry = staged[{issue, static_cast<LeadTime>(lead)}];
    if (!entry.emplace(member, value).second) {
      fail(path, reader.line_no,
           "duplicate row for issue " + format_date(issue) + ", lead " +
               std::to_string(lead) + ", member " + std::to_string(member));
    }
  }
  ForecastPanel panel;
  for (const auto& [key, members] : staged) {
    std::vector<double> values;
    values.reserve(members.size());
    long expect = 1;
    for (const auto& [idx, v] : members) {
      if (idx != expect) {
        throw std::runtime_error(
            path + ": issue " + format_date(key.first) + ", lead " +
            std::to_string(key.second) + ": member ids not contiguous from 1");
      }
      ++expect;
      values.push_back(v);
    }
    panel.add(EnsembleForecast{key.first, key.second, std::move(values)});
  }
  return panel;
}

void write_forecasts(const std::string& path, const ForecastPanel& panel) {
  std::ofstream out = open_out(path);
  out << "issue_date,lead_days,member,value\n";
  for (const auto& [key, members] : panel.entries()) {
    const std::string date = format_date(key.first);
    for (std::size_t i = 0; i < members.size(); ++i) {
      out << date << ',' << key.second << ',' << i + 1 << ','
          << fmt(members[i]) << '\n';
    }
  }
}

ObservationSeries load_observations(const std::string& path) {
  CsvReader reader(path, "date,value");
  std::vector<Date> dates;
  std::vector<double> values;
  std::set<Date> seen;
  std::vector<std::string> f;
  while (reader.next(&f, 2)) {
    const Date d = parse_date_field(f[0], path, reader.line_no);
    const double v = parse_double_field(f[1], path, reader.line_no);
    if (v < 0.0) fail(path, reader.line_no, "negative observation");
    if (!seen.insert(d).second) {
      fail(path, reader.line_no, "duplicate date " + format_date(d));
    }
    dates.push_back(d);
    values.push_back(v);
  }
  return ObservationSeries(std::move(dates), std::move(values));
}

void write_observations(const std::string& path,
                        const ObservationSeries& obs) {
  std::ofstream out = open_out(path);
  out << "date,value\n";
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out << format_date(obs.dates()[i]) << ',' << fmt(obs.values()[i]) << '\n';
  }
}

void write_scores(const std::string& path, const ScoreTable& table) {
  std::ofstream out = open_out(path);
  out << "lead_days,method,crps,crpss,mse_ens,msess\n";
  for (const ScoreRow& r : table.rows) {
    out << r.lead << ',' << r.method << ',' << fmt(r.crps) << ','
        << fmt(r.crpss) << ',' << fmt(r.mse_ens) << ',' << fmt(r.msess)
        << '\n';
  }
}

void write_reliability(const std::string& path,
                       const std::vector<ReliabilityResult>& rows) {
  std::ofstream out = open_out(path);
  out << "lead_days,method,quantile,frequency\n";
  for (const ReliabilityResult& r : rows) {
    for (std::size_t i = 0; i < r.curve.levels.size(); ++i) {
      out << r.lead << ',' << r.method << ',' << fmt(r.curve.levels[i]) << ','
          << fmt(r.curve.frequency[i]) << '\n';
    }
  }
}

void write_convergence(const std::string& path,
                       const ConvergenceCurve& curve) {
  std::ofstream out = open_out(path);
  out << "training_size,method,crps\n";
  for (const ConvergenceRow& r : curve.rows) {
    out << r.training_size << ',' << r.method << ',' << fmt(r.crps) << '\n';
  }
}

void write_calibrated(
    const std::string& path,
    const std::map<std::string, std::vector<CalibratedEnsemble>>& calibrated,
    const QuantileGrid& grid) {
  std::ofstream out = open_out(path);
  out << "issue_date,lead_days,method,quantile,value\n";
  for (const auto& [method, forecasts] : calibrated) {
    for (const CalibratedEnsemble& c : forecasts) {
      const std::string date = format_date(c.issue);
      for (std::size_t i = 0; i < c.values.size(); ++i) {
        out << date << ',' << c.lead << ',' << method << ','
            << fmt(grid.levels[i]) << ',' << fmt(c.values[i]) << '\n';
      }
    }
  }
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw std::runtime_error(path + ": manifest must be a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_primitive()) {
      throw std::runtime_error(path + ": manifest key '" + key +
                               "' must be a scalar");
    }
  }
  return RunManifest{.flags = std::move(doc)};
}

}  // namespace powcal
