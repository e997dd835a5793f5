#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "powcal/calibrator.hpp"
#include "powcal/scoring.hpp"

using namespace powcal;

TEST_CASE("factory validates method ids and grids") {
  const QuantileGrid grid = QuantileGrid::regular(11);
  CHECK_THROWS_AS(Calibrator::create("nope", grid, 1), std::invalid_argument);
  CHECK_THROWS_AS(Calibrator::create("emos", QuantileGrid{{0.2, 0.2}}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(Calibrator::create("emos", QuantileGrid{{0.0, 0.5}}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(Calibrator::create("emos", QuantileGrid{{0.5, 1.0}}, 1),
                  std::invalid_argument);
  CHECK(Calibrator::method_ids() ==
        std::vector<std::string>{"emos", "bma", "mbm", "qr", "drn", "qrn",
                                 "qrf", "moe"});
}

TEST_CASE("predict contract: unfitted, member mismatch, update support") {
  fixture::Conditioned c;
  c.n = 60;
  c.members = 5;
  c.noise_abs = 2.0;
  const auto pairs = fixture::conditioned_pairs(c);

  auto cal = Calibrator::create("emos", QuantileGrid::regular(11), 1);
  EnsembleForecast raw;
  raw.issue = Date{30000};
  raw.members = {1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK_THROWS_AS(cal->predict(raw), std::logic_error);

  cal->fit(pairs);
  CHECK(cal->predict(raw).values.size() == 11);
  EnsembleForecast wrong = raw;
  wrong.members.push_back(6.0);
  CHECK_THROWS_AS(cal->predict(wrong), std::invalid_argument);
  CHECK_FALSE(cal->supports_update());
  CHECK_THROWS_AS(cal->update(pairs.front()), std::logic_error);

  // Refitting with a different ensemble size is a caller bug.
  fixture::Conditioned c2 = c;
  c2.members = 7;
  CHECK_THROWS_AS(cal->fit(fixture::conditioned_pairs(c2)),
                  std::invalid_argument);
}

TEST_CASE("fit rejects malformed training data") {
  auto cal = Calibrator::create("qr", QuantileGrid::regular(11), 1);
  std::vector<TrainingPair> pairs;
  CHECK_THROWS_AS(cal->fit(pairs), std::invalid_argument);

  TrainingPair p;
  p.issue = Date{20000};
  p.members = {1.0, 2.0, 3.0};
  p.y = 1.0;
  pairs.assign(40, p);
  pairs[7].y = -0.5;
  CHECK_THROWS_AS(cal->fit(pairs), std::invalid_argument);
  pairs[7].y = 1.0;
  pairs[9].members[1] = std::nan("");
  CHECK_THROWS_AS(cal->fit(pairs), std::invalid_argument);
  pairs[9].members[1] = 2.0;
  pairs[3].members.pop_back();
  CHECK_THROWS_AS(cal->fit(pairs), std::invalid_argument);
}

TEST_CASE("output length equals the grid size for a 51-level grid") {
  fixture::Conditioned c;
  c.n = 120;
  c.members = 51;
  c.noise_abs = 3.0;
  const auto pairs = fixture::conditioned_pairs(c);
  CounterRng rng(4242);
  const auto raw = fixture::random_ensemble(rng, 51, 50.0, 3.0);
  for (const std::string& method : Calibrator::method_ids()) {
    MethodOptions opts;
    opts.qrf_trees = 30;
    opts.net_max_iter = 60;
    auto cal = Calibrator::create(method, QuantileGrid::regular(51), 3, opts);
    cal->fit(pairs);
    CHECK(cal->predict(raw).values.size() == 51);
  }
}

TEST_CASE("every method emits sorted nonnegative grids under input fuzzing") {
  fixture::Conditioned c;
  c.n = 120;
  c.members = 7;
  c.seed = 17;
  c.noise_abs = 3.0;
  c.noise_mult = 0.5;
  const auto pairs = fixture::conditioned_pairs(c);
  const QuantileGrid grid = QuantileGrid::regular(51);

  const int cases_per_method = 1250;  // x 8 methods = 10,000 fuzz cases
  for (const std::string& method : Calibrator::method_ids()) {
    MethodOptions opts;
    opts.qrf_trees = 50;
    opts.net_max_iter = 150;
    auto cal = Calibrator::create(method, grid, 23, opts);
    cal->fit(pairs);

    CounterRng rng(0xF022 + std::hash<std::string>{}(method));
    int violations = 0;
    for (int trial = 0; trial < cases_per_method; ++trial) {
      EnsembleForecast raw;
      raw.issue = Date{30000 + trial};
      raw.lead = 1;
      raw.members.resize(7);
      const double center = 200.0 * rng.uniform() - 40.0;
      const double spread = std::pow(10.0, 3.0 * rng.uniform() - 2.0);
      for (double& m : raw.members) {
        m = std::max(0.0, center + spread * rng.normal());
        if (rng.uniform() < 0.1) m = std::floor(m);  // inject ties
      }
      if (rng.uniform() < 0.05) {
        raw.members.assign(7, std::max(0.0, center));  // zero spread
      }
      const CalibratedEnsemble out = cal->predict(raw);
      if (out.values.size() != grid.levels.size()) ++violations;
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (!(out.values[i] >= 0.0) || !std::isfinite(out.values[i])) {
          ++violations;
        }
        if (i > 0 && out.values[i] < out.values[i - 1]) ++violations;
      }
    }
    CAPTURE(method);
    CHECK(violations == 0);
  }
}

TEST_CASE("all methods except moe cut mean crps over raw by 20%") {
  const auto pairs = fixture::scenario_pairs(2600, 21, -5.0, 0.5, 29);
  REQUIRE(pairs.size() == 2600);
  const std::span<const TrainingPair> train(pairs.data(), 2000);
  const std::span<const TrainingPair> eval(pairs.data() + 2000,
                                           pairs.size() - 2000);
  const double raw = fixture::raw_crps(eval);

  for (const std::string& method : Calibrator::method_ids()) {
    if (method == "moe") continue;  // convex weights cannot shift the envelope
    auto cal = Calibrator::create(method, QuantileGrid::regular(51), 37);
    cal->fit(train);
    const double post = fixture::mean_crps(*cal, eval);
    CAPTURE(method);
    CHECK(post <= 0.8 * raw);
  }
}

TEST_CASE("fitted calibrators of every method round-trip through text") {
  fixture::Conditioned c;
  c.n = 90;
  c.members = 6;
  c.seed = 53;
  c.noise_abs = 2.5;
  const auto pairs = fixture::conditioned_pairs(c);

  for (const std::string& method : Calibrator::method_ids()) {
    MethodOptions opts;
    opts.qrf_trees = 25;
    opts.net_max_iter = 80;
    auto cal = Calibrator::create(method, QuantileGrid::regular(19), 7, opts);
    cal->fit(pairs);
    auto loaded = Calibrator::load(nlohmann::json::parse(cal->save().dump()));
    CHECK(loaded->method() == method);
    CHECK(loaded->member_count() == 6);

    CounterRng rng(0x5E0 + std::hash<std::string>{}(method));
    for (int trial = 0; trial < 10; ++trial) {
      const auto raw = fixture::random_ensemble(rng, 6, 50.0, 3.0);
      const auto a = cal->predict(raw).values;
      const auto b = loaded->predict(raw).values;
      REQUIRE(a.size() == b.size());
      CAPTURE(method);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
  }
}

TEST_CASE("method options serialize losslessly") {
  MethodOptions o;
  o.emos_multistarts = 5;
  o.bma_exchangeable = false;
  o.bma_max_iter = 77;
  o.drn_hidden = 4;
  o.qrn_hidden = 9;
  o.qrn_members_feature = false;
  o.net_step = 0.01;
  o.net_max_iter = 321;
  o.net_patience = 13;
  o.qr_ridge_rel = 1e-6;
  o.moe_algorithm = "fixed_share";
  o.moe_eta = 0.5;
  o.moe_fixed_share = 0.1;
  o.qrf_trees = 42;
  o.qrf_min_leaf = 3;
  o.qrf_mtry = 2;
  o.lead_feature = true;
  const MethodOptions back = method_options_from_json(method_options_json(o));
  CHECK(back.emos_multistarts == o.emos_multistarts);
  CHECK(back.bma_exchangeable == o.bma_exchangeable);
  CHECK(back.bma_max_iter == o.bma_max_iter);
  CHECK(back.drn_hidden == o.drn_hidden);
  CHECK(back.qrn_hidden == o.qrn_hidden);
  CHECK(back.qrn_members_feature == o.qrn_members_feature);
  CHECK(back.net_step == o.net_step);
  CHECK(back.net_max_iter == o.net_max_iter);
  CHECK(back.net_patience == o.net_patience);
  CHECK(back.qr_ridge_rel == o.qr_ridge_rel);
  CHECK(back.moe_algorithm == o.moe_algorithm);
  CHECK(back.moe_eta == o.moe_eta);
  CHECK(back.moe_fixed_share == o.moe_fixed_share);
  CHECK(back.qrf_trees == o.qrf_trees);
  CHECK(back.qrf_min_leaf == o.qrf_min_leaf);
  CHECK(back.qrf_mtry == o.qrf_mtry);
  CHECK(back.lead_feature == o.lead_feature);
}
