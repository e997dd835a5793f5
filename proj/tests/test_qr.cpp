#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "powcal/qr.hpp"

using namespace powcal;

TEST_CASE("qr recovers an order statistic exactly") {
  // The truth is sorted member #26 of 51, so every level's conditional
  // quantile is that coordinate and the pinball loss can reach zero.
  CounterRng rng(61, 0x9);
  std::vector<TrainingPair> pairs;
  for (int t = 0; t < 1000; ++t) {
    TrainingPair p;
    p.issue = Date{20000 + t};
    p.members.resize(51);
    const double mu = 10.0 + 2.0 * rng.normal();
    const double s = 0.5 + rng.uniform();
    for (double& m : p.members) m = mu + s * rng.normal();
    std::vector<double> sorted = p.members;
    std::sort(sorted.begin(), sorted.end());
    p.y = std::max(0.0, sorted[25]);
    pairs.push_back(std::move(p));
  }

  auto cal = Calibrator::create("qr", QuantileGrid::regular(51), 3);
  cal->fit(pairs);
  double worst = 0.0;
  for (const TrainingPair& p : pairs) {
    EnsembleForecast raw{p.issue, p.lead, p.members};
    const double median = cal->predict(raw).values[25];  // level 0.5
    worst = std::max(worst, std::fabs(median - p.y));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("qr with constant features reduces to empirical quantiles") {
  CounterRng rng(71);
  std::vector<TrainingPair> pairs;
  std::vector<double> ys;
  for (int t = 0; t < 501; ++t) {
    TrainingPair p;
    p.issue = Date{20000 + t};
    p.members = {5.0, 5.0, 5.0};
    p.y = std::exp(1.5 + 0.6 * rng.normal());
    ys.push_back(p.y);
    pairs.push_back(std::move(p));
  }
  auto cal = Calibrator::create("qr", QuantileGrid::regular(51), 9);
  cal->fit(pairs);

  std::sort(ys.begin(), ys.end());
  const double median = ys[250];
  const double sd = std::sqrt(variance_of(ys));
  EnsembleForecast raw{Date{30000}, 1, {5.0, 5.0, 5.0}};
  CHECK(std::fabs(cal->predict(raw).values[25] - median) <= 1e-3 * sd);
}

TEST_CASE("qr warm start lands where the cold fit does") {
  const auto pairs = fixture::scenario_pairs(400, 9, -3.0, 0.6, 83);
  const std::vector<double> levels = QuantileGrid::regular(21).levels;

  const QrParams cold = fit_qr(pairs, levels, false, 1e-8);
  const QrParams warm = fit_qr(pairs, levels, false, 1e-8, &cold);
  // The reweighting creeps in an O(delta) neighbourhood of the kink, so
  // exact equality is not attainable; warm refits must stay materially
  // identical in prediction and in pinball loss.
  CounterRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto raw = fixture::random_ensemble(rng, 9, 50.0, 3.0);
    const auto a = qr_predict(cold, raw.members, 1);
    const auto b = qr_predict(warm, raw.members, 1);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(5e-3));
    }
  }
  double cold_loss = 0.0;
  double warm_loss = 0.0;
  for (const TrainingPair& p : pairs) {
    const auto a = qr_predict(cold, p.members, p.lead);
    const auto b = qr_predict(warm, p.members, p.lead);
    for (std::size_t i = 0; i < levels.size(); ++i) {
      cold_loss += pinball(levels[i], a[i], p.y);
      warm_loss += pinball(levels[i], b[i], p.y);
    }
  }
  CHECK(warm_loss == doctest::Approx(cold_loss).epsilon(5e-3));
}

TEST_CASE("qr lead feature shifts predictions by the learned slope") {
  CounterRng rng(91, 0xA);
  std::vector<TrainingPair> pairs;
  for (int t = 0; t < 800; ++t) {
    TrainingPair p;
    p.issue = Date{20000 + t};
    p.lead = 1 + static_cast<LeadTime>(rng.uniform_int(5));
    p.members.resize(5);
    const double mu = 30.0 + 4.0 * rng.normal();
    for (double& m : p.members) m = mu + rng.normal();
    p.y = std::max(0.0, mean_of(p.members) + static_cast<double>(p.lead) +
                            0.3 * rng.normal());
    pairs.push_back(std::move(p));
  }
  MethodOptions opts;
  opts.lead_feature = true;
  auto cal = Calibrator::create("qr", QuantileGrid::regular(51), 5, opts);
  cal->fit(pairs);

  EnsembleForecast at_lead1{Date{30000}, 1, {29.0, 30.0, 30.5, 31.0, 32.0}};
  EnsembleForecast at_lead5 = at_lead1;
  at_lead5.lead = 5;
  const double m1 = cal->predict(at_lead1).values[25];
  const double m5 = cal->predict(at_lead5).values[25];
  CHECK(m5 - m1 == doctest::Approx(4.0).epsilon(0.1));
}
