#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "powcal/csv_io.hpp"
#include "powcal/synthgen.hpp"

using namespace powcal;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("csvio_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }

  void fill(const std::string& content) const {
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  std::string slurp() const {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }
};

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("forecast and observation files survive a write/load round trip") {
  ScenarioConfig cfg;
  cfg.n_dates = 12;
  cfg.leads = {1, 3};
  cfg.members = 5;
  cfg.seed = 0xC1;
  const Scenario sc = generate(cfg);

  TempFile fc("roundtrip_fc.csv");
  TempFile ob("roundtrip_ob.csv");
  write_forecasts(fc.path, sc.panel);
  write_observations(ob.path, sc.obs);

  const ForecastPanel panel = load_forecasts(fc.path);
  CHECK(panel.entries() == sc.panel.entries());

  const ObservationSeries obs = load_observations(ob.path);
  CHECK(obs.dates() == sc.obs.dates());
  CHECK(obs.values() == sc.obs.values());
}

TEST_CASE("awkward doubles round trip exactly through the text format") {
  std::vector<Date> dates;
  std::vector<double> values{0.1, 1.0 / 3.0, 12345.678901234567, 5e-324,
                             1.7976931348623157e308, 0.0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    dates.push_back(Date{16436 + static_cast<int>(i)});
  }
  TempFile ob("doubles.csv");
  write_observations(ob.path, ObservationSeries(dates, values));
  const ObservationSeries back = load_observations(ob.path);
  CHECK(back.values() == values);
}

TEST_CASE("duplicate forecast rows are rejected with the offending line") {
  TempFile f("dup.csv");
  f.fill(
      "issue_date,lead_days,member,value\n"
      "2015-01-01,1,1,10.5\n"
      "2015-01-01,1,2,11.0\n"
      "2015-01-01,1,2,11.5\n");
  const std::string msg = message_of([&] { load_forecasts(f.path); });
  CHECK(msg.find(f.path + ":4:") != std::string::npos);
  CHECK(msg.find("duplicate row") != std::string::npos);
  CHECK(msg.find("member 2") != std::string::npos);
}

TEST_CASE("forecast domain errors carry file and line context") {
  TempFile zero_lead("lead0.csv");
  zero_lead.fill(
      "issue_date,lead_days,member,value\n"
      "2015-01-01,0,1,10.5\n");
  std::string msg = message_of([&] { load_forecasts(zero_lead.path); });
  CHECK(msg.find(zero_lead.path + ":2:") != std::string::npos);
  CHECK(msg.find("lead time 0 outside [1, 46]") != std::string::npos);

  TempFile gap("gap.csv");
  gap.fill(
      "issue_date,lead_days,member,value\n"
      "2015-01-01,1,1,10.5\n"
      "2015-01-01,1,3,11.5\n");
  msg = message_of([&] { load_forecasts(gap.path); });
  CHECK(msg.find("member ids not contiguous") != std::string::npos);

  TempFile member0("member0.csv");
  member0.fill(
      "issue_date,lead_days,member,value\n"
      "2015-01-01,1,0,10.5\n");
  msg = message_of([&] { load_forecasts(member0.path); });
  CHECK(msg.find("member ids start at 1") != std::string::npos);

  TempFile badnum("badnum.csv");
  badnum.fill(
      "issue_date,lead_days,member,value\n"
      "2015-01-01,1,1,10q5\n");
  msg = message_of([&] { load_forecasts(badnum.path); });
  CHECK(msg.find(badnum.path + ":2:") != std::string::npos);
  CHECK(msg.find("bad numeric value '10q5'") != std::string::npos);

  TempFile short_row("short.csv");
  short_row.fill(
      "issue_date,lead_days,member,value\n"
      "2015-01-01,1,1\n");
  msg = message_of([&] { load_forecasts(short_row.path); });
  CHECK(msg.find("expected 4 fields, got 3") != std::string::npos);

  TempFile header("header.csv");
  header.fill("issue,lead,member,value\n");
  msg = message_of([&] { load_forecasts(header.path); });
  CHECK(msg.find("expected header") != std::string::npos);

  TempFile binary("binary.csv");
  binary.fill(
      "issue_date,lead_days,member,value\n"
      "2015-01-\xff,1,1,10.5\n");
  msg = message_of([&] { load_forecasts(binary.path); });
  CHECK(msg.find("invalid UTF-8") != std::string::npos);

  const std::string missing =
      message_of([&] { load_forecasts("does_not_exist.csv"); });
  CHECK(missing.find("does_not_exist.csv") != std::string::npos);
}

TEST_CASE("observation files reject negatives and duplicates, accept unsorted") {
  TempFile neg("neg.csv");
  neg.fill(
      "date,value\n"
      "2015-01-01,5.0\n"
      "2015-01-02,-0.5\n");
  std::string msg = message_of([&] { load_observations(neg.path); });
  CHECK(msg.find(neg.path + ":3:") != std::string::npos);
  CHECK(msg.find("negative observation") != std::string::npos);

  TempFile dup("dupobs.csv");
  dup.fill(
      "date,value\n"
      "2015-01-01,5.0\n"
      "2015-01-01,6.0\n");
  msg = message_of([&] { load_observations(dup.path); });
  CHECK(msg.find("duplicate date 2015-01-01") != std::string::npos);

  TempFile unsorted("unsorted.csv");
  unsorted.fill(
      "date,value\n"
      "2015-01-03,3.0\n"
      "2015-01-01,1.0\n"
      "2015-01-02,2.0\n");
  const ObservationSeries obs = load_observations(unsorted.path);
  REQUIRE(obs.size() == 3);
  CHECK(obs.dates().front().days < obs.dates().back().days);
  CHECK(obs.values() == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("result writers emit their documented headers") {
  ScoreTable table;
  table.rows.push_back({1, "emos", 1.25, 0.5, 3.0, 0.25});
  TempFile sc("scores.csv");
  write_scores(sc.path, table);
  CHECK(sc.slurp() ==
        "lead_days,method,crps,crpss,mse_ens,msess\n"
        "1,emos,1.25,0.5,3,0.25\n");

  std::vector<ReliabilityResult> rel;
  rel.push_back({2, "raw", ReliabilityCurve{{0.25, 0.5}, {0.125, 0.4375}}});
  TempFile re("reliability.csv");
  write_reliability(re.path, rel);
  CHECK(re.slurp() ==
        "lead_days,method,quantile,frequency\n"
        "2,raw,0.25,0.125\n"
        "2,raw,0.5,0.4375\n");

  ConvergenceCurve curve;
  curve.rows.push_back({30, "qr", 2.5});
  TempFile cv("convergence.csv");
  write_convergence(cv.path, curve);
  CHECK(cv.slurp() ==
        "training_size,method,crps\n"
        "30,qr,2.5\n");

  std::map<std::string, std::vector<CalibratedEnsemble>> calibrated;
  calibrated["emos"].push_back(
      CalibratedEnsemble{Date{16436}, 1, "emos", {1.0, 2.0}});
  TempFile ca("calibrated.csv");
  write_calibrated(ca.path, calibrated, QuantileGrid{{0.25, 0.75}});
  CHECK(ca.slurp() ==
        "issue_date,lead_days,method,quantile,value\n"
        "2015-01-01,1,emos,0.25,1\n"
        "2015-01-01,1,emos,0.75,2\n");
}

TEST_CASE("manifest files must be flat objects of scalars") {
  TempFile ok("manifest_ok.json");
  ok.fill("{\"dates\": 100, \"seed\": 5, \"out\": \"x.csv\", \"bma-full\": true}");
  const RunManifest m = RunManifest::load(ok.path);
  CHECK(m.flags.at("dates").get<int>() == 100);
  CHECK(m.flags.at("out").get<std::string>() == "x.csv");
  CHECK(m.flags.at("bma-full").get<bool>() == true);

  TempFile arr("manifest_arr.json");
  arr.fill("{\"sizes\": [30, 100]}");
  std::string msg = message_of([&] { RunManifest::load(arr.path); });
  CHECK(msg.find("manifest key 'sizes'") != std::string::npos);

  TempFile top("manifest_top.json");
  top.fill("[1, 2]");
  msg = message_of([&] { RunManifest::load(top.path); });
  CHECK(msg.find("must be a JSON object") != std::string::npos);

  TempFile broken("manifest_broken.json");
  broken.fill("{\"dates\": ");
  msg = message_of([&] { RunManifest::load(broken.path); });
  CHECK(msg.find(broken.path) != std::string::npos);
}
