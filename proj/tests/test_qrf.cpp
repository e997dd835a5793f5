#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "powcal/qrf.hpp"

using namespace powcal;

namespace {

QrfForest single_leaf_forest(int copies) {
  QrfForest forest;
  QrfTree tree;
  tree.nodes.push_back(QrfNode{-1, 0.0, -1, -1, {0, 1, 2}});
  for (int t = 0; t < copies; ++t) forest.trees.push_back(tree);
  forest.features = {{1.0}, {2.0}, {3.0}};
  forest.response = {1.0, 2.0, 3.0};
  return forest;
}

}  // namespace

TEST_CASE("single leaf pools its rows and reads the median off them") {
  const QrfForest forest = single_leaf_forest(1);
  const std::vector<double> levels{0.5};
  const auto out = qrf_quantiles(forest, forest.features[0], 1, levels);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == 2.0);
}

TEST_CASE("identical trees pool to the same distribution as one tree") {
  const QrfForest one = single_leaf_forest(1);
  const QrfForest five = single_leaf_forest(5);
  const std::vector<double> levels{0.05, 0.2, 0.34, 0.5, 0.66, 0.8, 0.95};
  const std::vector<double> query{2.5};
  CHECK(qrf_quantiles(one, query, 1, levels) ==
        qrf_quantiles(five, query, 1, levels));
}

TEST_CASE("forest predictions never leave the training response range") {
  fixture::Conditioned c;
  c.n = 300;
  c.members = 6;
  c.seed = 77;
  c.noise_abs = 4.0;
  const auto pairs = fixture::conditioned_pairs(c);
  double lo = pairs[0].y, hi = pairs[0].y;
  for (const TrainingPair& p : pairs) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }

  const QrfForest forest = fit_qrf(pairs, 11, 25, 5, 0, false);
  const auto levels = QuantileGrid::regular(51).levels;
  CounterRng rng(0xF1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto members =
        fixture::random_ensemble(rng, 6, 200.0 * rng.uniform() - 50.0, 5.0)
            .members;
    for (double v : qrf_quantiles(forest, members, 1, levels)) {
      CHECK(v >= lo);
      CHECK(v <= hi);
    }
  }
}

TEST_CASE("splits isolate a step in the conditional distribution") {
  CounterRng rng(0xF2);
  std::vector<TrainingPair> pairs;
  for (int t = 0; t < 400; ++t) {
    TrainingPair p;
    p.issue = Date{15000 + t};
    p.members = fixture::random_ensemble(rng, 5, t % 2 ? 80.0 : 20.0, 4.0).members;
    const double xbar = mean_of(p.members);
    p.y = xbar > 50.0 ? 10.0 : 2.0;
    pairs.push_back(std::move(p));
  }
  const QrfForest forest = fit_qrf(pairs, 3, 25, 10, 0, false);
  const std::vector<double> levels{0.5};
  const auto high = fixture::random_ensemble(rng, 5, 80.0, 4.0).members;
  const auto low = fixture::random_ensemble(rng, 5, 20.0, 4.0).members;
  CHECK(qrf_quantiles(forest, high, 1, levels)[0] == doctest::Approx(10.0).epsilon(0.05));
  CHECK(qrf_quantiles(forest, low, 1, levels)[0] == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("fits are deterministic in the seed and move with it") {
  const auto pairs = fixture::scenario_pairs(200, 7, -2.0, 0.6, 0xF3);
  const auto levels = QuantileGrid::regular(21).levels;
  const QrfForest a = fit_qrf(pairs, 42, 20, 5, 0, false);
  const QrfForest b = fit_qrf(pairs, 42, 20, 5, 0, false);
  const QrfForest c = fit_qrf(pairs, 43, 20, 5, 0, false);
  const std::vector<double> query = pairs[50].members;
  const auto qa = qrf_quantiles(a, query, 1, levels);
  CHECK(qa == qrf_quantiles(b, query, 1, levels));
  CHECK(qa != qrf_quantiles(c, query, 1, levels));
}

TEST_CASE("too little data for the leaf size is a fit error") {
  fixture::Conditioned c;
  c.n = 9;
  c.members = 4;
  c.seed = 5;
  const auto pairs = fixture::conditioned_pairs(c);
  CHECK_THROWS_AS(fit_qrf(pairs, 1, 10, 5, 0, false), FitError);
  auto cal = Calibrator::create("qrf", QuantileGrid::regular(9), 1);
  CHECK_THROWS_AS(cal->fit(pairs), FitError);
}
