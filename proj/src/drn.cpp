#include "powcal/drn.hpp"

#include <cmath>
#include <vector>

namespace powcal {
namespace {

constexpr std::uint64_t kDrnStream = 0x0D7;

// sigma = softplus(o1)*y_std + floor keeps the scale strictly positive for
// any parameter setting.
constexpr double kSigmaFloorRel = 1e-3;

}  // namespace

Eigen::VectorXd drn_features(std::span<const double> members, LeadTime lead,
                             bool lead_feature) {
  Eigen::VectorXd x(lead_feature ? 3 : 2);
  x[0] = mean_of(members);
  x[1] = std::sqrt(std::max(variance_of(members), 0.0));
  if (lead_feature) x[2] = static_cast<double>(lead);
  return x;
}

TruncNormalParams drn_predictive(const DrnModel& model,
                                 std::span<const double> members,
                                 LeadTime lead) {
  const Eigen::VectorXd x =
      model.in_std.apply(drn_features(members, lead, model.lead_feature));
  const Eigen::VectorXd out = mlp_forward(model.spec, model.theta, x);
  const double mu = model.y_mean + model.y_std * out[0];
  const double sigma =
      softplus(out[1]) * model.y_std + kSigmaFloorRel * model.y_std;
  return TruncNormalParams{mu, sigma};
}

Objective drn_objective(const DrnModel& model,
                        std::span<const TrainingPair> pairs) {
  const MlpSpec spec = model.spec;
  const double y_mean = model.y_mean;
  const double y_std = model.y_std;
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  xs.reserve(pairs.size());
  ys.reserve(pairs.size());
  for (const TrainingPair& p : pairs) {
    xs.push_back(
        model.in_std.apply(drn_features(p.members, p.lead, model.lead_feature)));
    ys.push_back(p.y);
  }
  return [spec, y_mean, y_std, xs = std::move(xs),
          ys = std::move(ys)](const Eigen::VectorXd& theta,
                              Eigen::VectorXd* grad) {
    if (grad) grad->setZero(theta.size());
    const double n = static_cast<double>(ys.size());
    MlpTape tape;
    Eigen::VectorXd dout(2);
    double total = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const Eigen::VectorXd out =
          mlp_forward(spec, theta, xs[i], grad ? &tape : nullptr);
      const double mu = y_mean + y_std * out[0];
      const double sigma =
          softplus(out[1]) * y_std + kSigmaFloorRel * y_std;
      const TnCrpsGrad g = tn_crps_grad({mu, sigma}, ys[i]);
      total += g.value;
      if (grad) {
        dout[0] = g.dmu * y_std;
        dout[1] = g.dsigma * y_std * softplus_deriv(out[1]);
        mlp_backward(spec, theta, tape, dout, *grad);
      }
    }
    if (grad) *grad /= n;
    return total / n;
  };
}

DrnModel fit_drn(std::span<const TrainingPair> pairs, std::uint64_t seed,
                 const MethodOptions& opts, const DrnModel* warm,
                 FitReport* report) {
  const bool lead_feat = opts.lead_feature;
  const int in_dim = lead_feat ? 3 : 2;
  DrnModel model;
  if (warm && warm->spec.inputs == in_dim &&
      warm->spec.hidden == opts.drn_hidden &&
      warm->lead_feature == lead_feat) {
    // Standardizers and target statistics stay frozen at their first-fit
    // values so the warm parameters keep their meaning.
    model = *warm;
  } else {
    model.lead_feature = lead_feat;
    model.spec = MlpSpec{in_dim, opts.drn_hidden, 2};
    std::vector<double> y;
    y.reserve(pairs.size());
    for (const TrainingPair& p : pairs) y.push_back(p.y);
    model.y_mean = mean_of(y);
    model.y_std = std::max(std::sqrt(std::max(variance_of(y), 0.0)),
                           1e-8 * (std::abs(model.y_mean) + 1.0));
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(pairs.size()), in_dim);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      rows.row(static_cast<Eigen::Index>(i)) =
          drn_features(pairs[i].members, pairs[i].lead, lead_feat);
    }
    model.in_std = Standardizer::fit(rows);
    CounterRng rng(seed, kDrnStream);
    model.theta = mlp_init(model.spec, rng);
    // Start at the climatological forecast: mu = mean(y), sigma = sd(y).
    const int b2 = model.spec.hidden > 0
                       ? model.spec.hidden * (model.spec.inputs + 1) +
                             2 * model.spec.hidden
                       : 2 * model.spec.inputs;
    model.theta[b2] = 0.0;
    model.theta[b2 + 1] = softplus_inv(1.0);
  }

  const Objective fn = drn_objective(model, pairs);
  GdOptions g;
  g.step = opts.net_step;
  g.max_iter = opts.net_max_iter;
  g.patience = opts.net_patience;
  const GdReport r = gd_train(fn, model.theta, g);
  if (!std::isfinite(r.best_loss)) {
    throw FitError("drn: training loss is not finite");
  }
  if (report) {
    report->converged = true;
    report->iterations = r.iterations;
    report->objective_trace = r.loss_trace;
  }
  return model;
}

void DrnCalibrator::do_fit(std::span<const TrainingPair> pairs) {
  const DrnModel* warm = fitted() ? &model_ : nullptr;
  model_ = fit_drn(pairs, seed(), options(), warm, &report_);
}

std::vector<double> DrnCalibrator::do_predict(
    const EnsembleForecast& raw) const {
  const TruncNormalParams tn = drn_predictive(model_, raw.members, raw.lead);
  std::vector<double> out;
  out.reserve(grid().levels.size());
  for (double q : grid().levels) out.push_back(tn_quantile(tn, q));
  return out;
}

nlohmann::json DrnCalibrator::params_json() const {
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
      {"lead_feature", model_.lead_feature}};
}

void DrnCalibrator::load_params(const nlohmann::json& j) {
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
  model_.lead_feature = j.at("lead_feature").get<bool>();
}

}  // namespace powcal
