#include "powcal/qrn.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace powcal {
namespace {

constexpr std::uint64_t kQrnStream = 0x09F;

Eigen::VectorXd raw_features(std::span<const double> members, LeadTime lead,
                             bool members_feature, bool lead_feature) {
  const std::size_t km = members_feature ? members.size() : 0;
  Eigen::VectorXd x(static_cast<Eigen::Index>(km) + (lead_feature ? 1 : 0));
  if (members_feature) {
    std::vector<double> sorted(members.begin(), members.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < km; ++i) {
      x[static_cast<Eigen::Index>(i)] = sorted[i];
    }
  }
  if (lead_feature) x[x.size() - 1] = static_cast<double>(lead);
  return x;
}

// Reconstructs quantile values from network outputs: a free base level plus
// softplus increments, cumulated.
void reconstruct(const Eigen::VectorXd& out, double y_mean, double y_std,
                 std::vector<double>& v) {
  v.resize(out.size());
  v[0] = y_mean + y_std * out[0];
  for (Eigen::Index j = 1; j < out.size(); ++j) {
    v[j] = v[j - 1] + y_std * softplus(out[j]);
  }
}

}  // namespace

Eigen::VectorXd qrn_features(const QrnModel& model,
                             std::span<const double> members, LeadTime lead) {
  return model.in_std.apply(
      raw_features(members, lead, model.members_feature, model.lead_feature));
}

std::vector<double> qrn_predict(const QrnModel& model,
                                std::span<const double> members,
                                LeadTime lead) {
  const Eigen::VectorXd out =
      mlp_forward(model.spec, model.theta, qrn_features(model, members, lead));
  std::vector<double> v;
  reconstruct(out, model.y_mean, model.y_std, v);
  return v;
}

Objective qrn_objective(const QrnModel& model,
                        std::span<const TrainingPair> pairs) {
  const MlpSpec spec = model.spec;
  const double y_mean = model.y_mean;
  const double y_std = model.y_std;
  const std::vector<double> levels = model.levels;
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  xs.reserve(pairs.size());
  ys.reserve(pairs.size());
  for (const TrainingPair& p : pairs) {
    xs.push_back(qrn_features(model, p.members, p.lead));
    ys.push_back(p.y);
  }
  return [spec, y_mean, y_std, levels, xs = std::move(xs),
          ys = std::move(ys)](const Eigen::VectorXd& theta,
                              Eigen::VectorXd* grad) {
    if (grad) grad->setZero(theta.size());
    const std::size_t m = levels.size();
    const double denom = static_cast<double>(ys.size()) * static_cast<double>(m);
    MlpTape tape;
    std::vector<double> v;
    std::vector<double> dv(m);
    Eigen::VectorXd dout(static_cast<Eigen::Index>(m));
    double total = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const Eigen::VectorXd out =
          mlp_forward(spec, theta, xs[i], grad ? &tape : nullptr);
      reconstruct(out, y_mean, y_std, v);
      const double y = ys[i];
      for (std::size_t j = 0; j < m; ++j) {
        const double q = levels[j];
        if (v[j] > y) {
          total += (1.0 - q) * (v[j] - y);
          dv[j] = 1.0 - q;
        } else {
          total += q * (y - v[j]);
          dv[j] = -q;
        }
      }
      if (grad) {
        // v_j depends on outputs 0..j, so each output collects the suffix
        // sum of the per-quantile subgradients.
        double suffix = 0.0;
        for (std::size_t j = m; j-- > 0;) {
          suffix += dv[j];
          dout[static_cast<Eigen::Index>(j)] =
              j == 0 ? suffix * y_std
                     : suffix * y_std *
                           softplus_deriv(out[static_cast<Eigen::Index>(j)]);
        }
        mlp_backward(spec, theta, tape, dout, *grad);
      }
    }
    if (grad) *grad /= denom;
    return total / denom;
  };
}

QrnModel fit_qrn(std::span<const TrainingPair> pairs,
                 std::span<const double> levels, std::uint64_t seed,
                 const MethodOptions& opts, const QrnModel* warm,
                 FitReport* report) {
  const bool members_feat = opts.qrn_members_feature;
  const bool lead_feat = opts.lead_feature;
  const int k = static_cast<int>(pairs.front().members.size());
  const int in_dim = (members_feat ? k : 0) + (lead_feat ? 1 : 0);
  const int m = static_cast<int>(levels.size());

  QrnModel model;
  if (warm && warm->spec.inputs == in_dim &&
      warm->spec.hidden == opts.qrn_hidden && warm->spec.outputs == m &&
      warm->members_feature == members_feat &&
      warm->lead_feature == lead_feat &&
      std::equal(warm->levels.begin(), warm->levels.end(), levels.begin(),
                 levels.end())) {
    model = *warm;
  } else {
    model.members_feature = members_feat;
    model.lead_feature = lead_feat;
    model.levels.assign(levels.begin(), levels.end());
    model.spec = MlpSpec{in_dim, opts.qrn_hidden, m};
    std::vector<double> y;
    y.reserve(pairs.size());
    for (const TrainingPair& p : pairs) y.push_back(p.y);
    model.y_mean = mean_of(y);
    model.y_std = std::max(std::sqrt(std::max(variance_of(y), 0.0)),
                           1e-8 * (std::abs(model.y_mean) + 1.0));
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(pairs.size()), in_dim);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      rows.row(static_cast<Eigen::Index>(i)) =
          raw_features(pairs[i].members, pairs[i].lead, members_feat,
                       lead_feat);
    }
    model.in_std = Standardizer::fit(rows);
    CounterRng rng(seed, kQrnStream);
    model.theta = mlp_init(model.spec, rng);
    // Output biases start at the climatological quantiles, encoded through
    // the base + softplus-increment construction.
    std::sort(y.begin(), y.end());
    const int b2 = model.spec.hidden > 0
                       ? model.spec.hidden * (model.spec.inputs + 1) +
                             m * model.spec.hidden
                       : m * model.spec.inputs;
    double prev = empirical_quantile(y, levels[0]);
    model.theta[b2] = (prev - model.y_mean) / model.y_std;
    for (int j = 1; j < m; ++j) {
      const double cur = empirical_quantile(y, levels[static_cast<std::size_t>(j)]);
      const double gap = std::max((cur - prev) / model.y_std, 1e-3);
      model.theta[b2 + j] = softplus_inv(gap);
      prev = cur;
    }
  }

  const Objective fn = qrn_objective(model, pairs);
  GdOptions g;
  g.step = opts.net_step;
  g.max_iter = opts.net_max_iter;
  g.patience = opts.net_patience;
  const GdReport r = gd_train(fn, model.theta, g);
  if (!std::isfinite(r.best_loss)) {
    throw FitError("qrn: training loss is not finite");
  }
  if (report) {
    report->converged = true;
    report->iterations = r.iterations;
    report->objective_trace = r.loss_trace;
  }
  return model;
}

void QrnCalibrator::do_fit(std::span<const TrainingPair> pairs) {
  const QrnModel* warm = fitted() ? &model_ : nullptr;
  model_ = fit_qrn(pairs, grid().levels, seed(), options(), warm, &report_);
}

std::vector<double> QrnCalibrator::do_predict(
    const EnsembleForecast& raw) const {
  return qrn_predict(model_, raw.members, raw.lead);
}

nlohmann::json QrnCalibrator::params_json() const {
  return nlohmann::json{
      {"inputs", model_.spec.inputs},
      {"hidden", model_.spec.hidden},
      {"outputs", model_.spec.outputs},
      {"theta", std::vector<double>(model_.theta.begin(), model_.theta.end())},
      {"in_mean",
       std::vector<double>(model_.in_std.mean.begin(), model_.in_std.mean.end())},
      {"in_scale", std::vector<double>(model_.in_std.scale.begin(),
                                       model_.in_std.scale.end())},
      {"y_mean", model_.y_mean},
      {"y_std", model_.y_std},
      {"levels", model_.levels},
      {"members_feature", model_.members_feature},
      {"lead_feature", model_.lead_feature}};
}

void QrnCalibrator::load_params(const nlohmann::json& j) {
  model_.spec = MlpSpec{j.at("inputs").get<int>(), j.at("hidden").get<int>(),
                        j.at("outputs").get<int>()};
  const auto theta = j.at("theta").get<std::vector<double>>();
  model_.theta = Eigen::Map<const Eigen::VectorXd>(
      theta.data(), static_cast<Eigen::Index>(theta.size()));
  const auto im = j.at("in_mean").get<std::vector<double>>();
  const auto is = j.at("in_scale").get<std::vector<double>>();
  model_.in_std.mean = Eigen::Map<const Eigen::VectorXd>(
      im.data(), static_cast<Eigen::Index>(im.size()));
  model_.in_std.scale = Eigen::Map<const Eigen::VectorXd>(
      is.data(), static_cast<Eigen::Index>(is.size()));
  model_.y_mean = j.at("y_mean").get<double>();
  model_.y_std = j.at("y_std").get<double>();
  model_.levels = j.at("levels").get<std::vector<double>>();
  model_.members_feature = j.at("members_feature").get<bool>();
  model_.lead_feature = j.at("lead_feature").get<bool>();
}

}  // namespace powcal
