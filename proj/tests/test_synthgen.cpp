#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "powcal/scoring.hpp"
#include "powcal/synthgen.hpp"

using namespace powcal;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.n_dates = 60;
  c.leads = {1, 5, 10};
  c.members = 15;
  c.history_years = 3;
  c.seed = 77;
  return c;
}

}  // namespace

TEST_CASE("schedule ramps linearly then saturates") {
  const Schedule s{0.0, -5.0, 21};
  CHECK(s.at(1) == 0.0);
  CHECK(s.at(11) == doctest::Approx(-2.5));
  CHECK(s.at(21) == -5.0);
  CHECK(s.at(46) == -5.0);
  CHECK(Schedule::constant(2.0).at(13) == 2.0);
}

TEST_CASE("generation is deterministic in the seed") {
  const auto a = generate(small_config());
  const auto b = generate(small_config());
  CHECK(a.scale == b.scale);
  CHECK(a.obs.values() == b.obs.values());
  CHECK(a.panel.entries() == b.panel.entries());
  auto cfg = small_config();
  cfg.seed = 78;
  const auto c = generate(cfg);
  CHECK(a.panel.entries() != c.panel.entries());
}

TEST_CASE("observations cover every valid date and stay nonnegative") {
  const auto sc = generate(small_config());
  for (LeadTime lead : {1, 5, 10}) {
    const auto pairs = align(sc.panel, sc.obs, lead);
    CHECK(pairs.size() == 60);
  }
  for (double v : sc.obs.values()) CHECK(v >= 0.0);
  for (const auto& [key, members] : sc.panel.entries())
    for (double m : members) CHECK(m >= 0.0);
}

TEST_CASE("target mean is roughly honoured") {
  auto cfg = small_config();
  cfg.n_dates = 200;
  cfg.target_mean = 50.0;
  const auto sc = generate(cfg);
  CHECK(mean_of(sc.obs.values()) == doctest::Approx(50.0).epsilon(0.2));
}

TEST_CASE("history ends the day before the scenario start and is consistent") {
  auto cfg = small_config();
  const auto h = history(cfg, 3);
  CHECK(h.dates().back() == add_days(cfg.start, -1));
  CHECK(h.dates().front() == make_date(2012, 1, 1));
  CHECK(h.size() == 1096);  // 2012 is a leap year
  const auto h2 = history(cfg, 2);
  // shorter request is a suffix of the longer one
  CHECK(h2.dates().front() == make_date(2013, 1, 1));
  CHECK(h2.at(make_date(2014, 7, 1)) == h.at(make_date(2014, 7, 1)));
  CHECK_THROWS_AS(history(cfg, 10), std::invalid_argument);
}

TEST_CASE("lead-dependent bias shifts the ensemble mean") {
  auto cfg = small_config();
  cfg.n_dates = 150;
  cfg.leads = {10};
  cfg.bias = Schedule::constant(-5.0);
  cfg.dispersion = Schedule::constant(1.0);
  cfg.error_scale = Schedule::constant(4.0);
  const auto sc = generate(cfg);
  const auto pairs = align(sc.panel, sc.obs, 10);
  double gap = 0.0;
  for (const auto& p : pairs) gap += mean_of(p.members) - p.y;
  gap /= static_cast<double>(pairs.size());
  CHECK(gap == doctest::Approx(-5.0).epsilon(0.25));
}

TEST_CASE("unit dispersion with shared error gives calibrated raw ensembles") {
  ScenarioConfig cfg;
  cfg.n_dates = 1200;
  cfg.leads = {5};
  cfg.members = 51;
  cfg.history_years = 2;
  cfg.bias = Schedule::constant(0.0);
  cfg.dispersion = Schedule::constant(1.0);
  cfg.error_scale = Schedule::constant(5.0);
  cfg.shared_error_scale = 1.0;
  cfg.seed = 3;
  const auto sc = generate(cfg);
  const auto pairs = align(sc.panel, sc.obs, 5);
  std::vector<std::vector<double>> ens;
  std::vector<double> ys;
  for (const auto& p : pairs) {
    ens.push_back(p.members);
    ys.push_back(p.y);
  }
  const auto curve = reliability_curve(ens, ys, reliability_levels(0.05));
  CHECK(reliability_max_deviation(curve) <= 0.04);
}

TEST_CASE("halved dispersion breaks reliability") {
  ScenarioConfig cfg;
  cfg.n_dates = 1200;
  cfg.leads = {5};
  cfg.members = 51;
  cfg.history_years = 2;
  cfg.dispersion = Schedule::constant(0.5);
  cfg.error_scale = Schedule::constant(5.0);
  cfg.seed = 4;
  const auto sc = generate(cfg);
  const auto pairs = align(sc.panel, sc.obs, 5);
  std::vector<std::vector<double>> ens;
  std::vector<double> ys;
  for (const auto& p : pairs) {
    ens.push_back(p.members);
    ys.push_back(p.y);
  }
  const auto curve = reliability_curve(ens, ys, reliability_levels(0.05));
  CHECK(reliability_max_deviation(curve) >= 0.1);
}

TEST_CASE("beyond saturation all leads verifying the same day coincide") {
  ScenarioConfig cfg;
  cfg.n_dates = 50;
  cfg.leads = {40, 42, 45};
  cfg.members = 9;
  cfg.history_years = 2;
  cfg.bias = Schedule{0.0, -4.0, 20};
  cfg.dispersion = Schedule{1.0, 0.6, 20};
  cfg.error_scale = Schedule{2.0, 6.0, 20};
  const auto sc = generate(cfg);
  const Date valid = add_days(cfg.start, 45);
  const auto* m40 = sc.panel.find(add_days(valid, -40), 40);
  const auto* m42 = sc.panel.find(add_days(valid, -42), 42);
  const auto* m45 = sc.panel.find(add_days(valid, -45), 45);
  REQUIRE(m40 != nullptr);
  REQUIRE(m42 != nullptr);
  REQUIRE(m45 != nullptr);
  CHECK(*m40 == *m42);
  CHECK(*m40 == *m45);
}

TEST_CASE("scenario validation") {
  auto cfg = small_config();
  cfg.leads = {};
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.members = 1;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.ar_coef = 1.0;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.leads = {47};
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  CHECK(all_leads().size() == 46);
}
