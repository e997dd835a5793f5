#include "powcal/qrf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "powcal/rng.hpp"

namespace powcal {
namespace {

constexpr std::uint64_t kQrfStream = 0x06F0;

std::vector<double> make_features(std::span<const double> members,
                                  LeadTime lead, bool lead_feature) {
  std::vector<double> x(members.begin(), members.end());
  std::sort(x.begin(), x.end());
  if (lead_feature) x.push_back(static_cast<double>(lead));
  return x;
}

struct TreeBuilder {
  const QrfForest& forest;
  int min_leaf;
  int mtry;
  CounterRng rng;
  QrfTree tree;
  // scratch shared across nodes
  std::vector<int> feat_order;
  std::vector<std::pair<double, double>> sorted;  // (feature value, response)

  int grow(std::vector<int> rows) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::size_t n = rows.size();

    double sum = 0.0;
    double sumsq = 0.0;
    for (int r : rows) {
      const double y = forest.response[static_cast<std::size_t>(r)];
      sum += y;
      sumsq += y * y;
    }
    const double sse = sumsq - sum * sum / static_cast<double>(n);
    if (n < 2 * static_cast<std::size_t>(min_leaf) || sse <= 1e-12) {
      tree.nodes[id].rows = std::move(rows);
      return id;
    }

    // Random feature subset, then exhaustive threshold search per feature.
    const int f_all = static_cast<int>(forest.features.front().size());
    feat_order.resize(f_all);
    std::iota(feat_order.begin(), feat_order.end(), 0);
    const int tries = std::min(mtry, f_all);
    for (int i = 0; i < tries; ++i) {
      const int j =
          i + static_cast<int>(rng.uniform_int(
                  static_cast<std::uint64_t>(f_all - i)));
      std::swap(feat_order[i], feat_order[j]);
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = sse;
    for (int fi = 0; fi < tries; ++fi) {
      const int f = feat_order[fi];
      sorted.clear();
      for (int r : rows) {
        sorted.emplace_back(
            forest.features[static_cast<std::size_t>(r)][static_cast<std::size_t>(f)],
            forest.response[static_cast<std::size_t>(r)]);
      }
      std::sort(sorted.begin(), sorted.end());
      double lsum = 0.0;
      double lsq = 0.0;
      for (std::size_t i = 0; i + 1 + static_cast<std::size_t>(min_leaf) <= n;
           ++i) {
        lsum += sorted[i].second;
        lsq += sorted[i].second * sorted[i].second;
        const std::size_t nl = i + 1;
        if (nl < static_cast<std::size_t>(min_leaf)) continue;
        if (sorted[i].first == sorted[i + 1].first) continue;
        const std::size_t nr = n - nl;
        const double rsum = sum - lsum;
        const double rsq = sumsq - lsq;
        const double score =
            (lsq - lsum * lsum / static_cast<double>(nl)) +
            (rsq - rsum * rsum / static_cast<double>(nr));
        if (score < best_score - 1e-12) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        }
      }
    }
    if (best_feature < 0) {
      tree.nodes[id].rows = std::move(rows);
      return id;
    }

    std::vector<int> left;
    std::vector<int> right;
    for (int r : rows) {
      const double v =
          forest.features[static_cast<std::size_t>(r)]
                         [static_cast<std::size_t>(best_feature)];
      (v <= best_threshold ? left : right).push_back(r);
    }
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    const int l = grow(std::move(left));
    const int r = grow(std::move(right));
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }
};

const QrfNode& descend(const QrfTree& tree, std::span<const double> x) {
  int id = 0;
  while (tree.nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const QrfNode& n = tree.nodes[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                               : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(id)];
}

}  // namespace

QrfForest fit_qrf(std::span<const TrainingPair> pairs, std::uint64_t seed,
                  int n_trees, int min_leaf, int mtry, bool lead_feature,
                  FitReport* report) {
  if (n_trees < 1) throw std::invalid_argument("qrf: need at least one tree");
  if (min_leaf < 1) throw std::invalid_argument("qrf: min_leaf must be >= 1");
  const std::size_t n = pairs.size();
  if (n < 2 * static_cast<std::size_t>(min_leaf)) {
    throw FitError("qrf: needs at least 2*min_leaf training pairs");
  }
  QrfForest forest;
  forest.lead_feature = lead_feature;
  forest.features.reserve(n);
  forest.response.reserve(n);
  for (const TrainingPair& p : pairs) {
    forest.features.push_back(make_features(p.members, p.lead, lead_feature));
    forest.response.push_back(p.y);
  }
  const int f = static_cast<int>(forest.features.front().size());
  const int eff_mtry =
      mtry > 0 ? mtry
               : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(f))));

  forest.trees.reserve(static_cast<std::size_t>(n_trees));
  for (int t = 0; t < n_trees; ++t) {
    TreeBuilder builder{forest,
                        min_leaf,
                        eff_mtry,
                        CounterRng(hash_combine(seed, static_cast<std::uint64_t>(t)),
                                   kQrfStream),
                        {},
                        {},
                        {}};
    std::vector<int> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i] = static_cast<int>(builder.rng.uniform_int(n));
    }
    builder.grow(std::move(rows));
    forest.trees.push_back(std::move(builder.tree));
  }
  if (report) {
    report->converged = true;
    report->iterations = n_trees;
  }
  return forest;
}

std::vector<double> qrf_quantiles(const QrfForest& forest,
                                  std::span<const double> members,
                                  LeadTime lead,
                                  std::span<const double> levels) {
  const std::vector<double> x = make_features(members, lead, forest.lead_feature);
  // Pool the leaf distributions: each tree contributes total weight 1/B
  // spread uniformly over its leaf's training rows.
  std::vector<std::pair<double, double>> pooled;
  const double tree_w = 1.0 / static_cast<double>(forest.trees.size());
  for (const QrfTree& tree : forest.trees) {
    const QrfNode& leaf = descend(tree, x);
    const double w = tree_w / static_cast<double>(leaf.rows.size());
    for (int r : leaf.rows) {
      pooled.emplace_back(forest.response[static_cast<std::size_t>(r)], w);
    }
  }
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> cum(pooled.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    total += pooled[i].second;
    cum[i] = total;
  }
  std::vector<double> out;
  out.reserve(levels.size());
  for (double q : levels) {
    const double target = q * total;
    const auto it = std::lower_bound(cum.begin(), cum.end(), target);
    const std::size_t idx =
        it == cum.end() ? pooled.size() - 1
                        : static_cast<std::size_t>(it - cum.begin());
    out.push_back(pooled[idx].first);
  }
  return out;
}

void QrfCalibrator::do_fit(std::span<const TrainingPair> pairs) {
  forest_ = fit_qrf(pairs, seed(), options().qrf_trees, options().qrf_min_leaf,
                    options().qrf_mtry, options().lead_feature, &report_);
}

std::vector<double> QrfCalibrator::do_predict(
    const EnsembleForecast& raw) const {
  return qrf_quantiles(forest_, raw.members, raw.lead, grid().levels);
}

nlohmann::json QrfCalibrator::params_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const QrfTree& t : forest_.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const QrfNode& n : t.nodes) {
      nodes.push_back(nlohmann::json{{"f", n.feature},
                                     {"t", n.threshold},
                                     {"l", n.left},
                                     {"r", n.right},
                                     {"rows", n.rows}});
    }
    trees.push_back(std::move(nodes));
  }
  return nlohmann::json{{"trees", std::move(trees)},
                        {"features", forest_.features},
                        {"response", forest_.response},
                        {"lead_feature", forest_.lead_feature}};
}

void QrfCalibrator::load_params(const nlohmann::json& j) {
  forest_ = QrfForest{};
  for (const auto& tj : j.at("trees")) {
    QrfTree tree;
    for (const auto& nj : tj) {
      QrfNode n;
      n.feature = nj.at("f").get<int>();
      n.threshold = nj.at("t").get<double>();
      n.left = nj.at("l").get<int>();
      n.right = nj.at("r").get<int>();
      n.rows = nj.at("rows").get<std::vector<int>>();
      tree.nodes.push_back(std::move(n));
    }
    forest_.trees.push_back(std::move(tree));
  }
  forest_.features = j.at("features").get<std::vector<std::vector<double>>>();
  forest_.response = j.at("response").get<std::vector<double>>();
  forest_.lead_feature = j.at("lead_feature").get<bool>();
}

}  // namespace powcal
