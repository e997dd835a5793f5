#include "powcal/qr.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace powcal {
namespace {

// Design matrix: intercept, sorted members, optionally lead time.
Eigen::MatrixXd build_design(std::span<const TrainingPair> pairs,
                             bool lead_feature) {
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  const Eigen::Index k = static_cast<Eigen::Index>(pairs.front().members.size());
  Eigen::MatrixXd x(n, 1 + k + (lead_feature ? 1 : 0));
  std::vector<double> sorted;
  for (Eigen::Index t = 0; t < n; ++t) {
    sorted.assign(pairs[t].members.begin(), pairs[t].members.end());
    std::sort(sorted.begin(), sorted.end());
    x(t, 0) = 1.0;
    for (Eigen::Index j = 0; j < k; ++j) x(t, 1 + j) = sorted[j];
    if (lead_feature) x(t, 1 + k) = static_cast<double>(pairs[t].lead);
  }
  return x;
}

Eigen::VectorXd feature_row(std::span<const double> members, LeadTime lead,
                            bool lead_feature) {
  std::vector<double> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  Eigen::VectorXd x(1 + sorted.size() + (lead_feature ? 1 : 0));
  x[0] = 1.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    x[1 + j] = sorted[j];
  }
  if (lead_feature) x[x.size() - 1] = static_cast<double>(lead);
  return x;
}

}  // namespace

QrParams fit_qr(std::span<const TrainingPair> pairs,
                std::span<const double> levels, bool lead_feature,
                double ridge_rel, const QrParams* warm, FitReport* report) {
  const Eigen::MatrixXd x_full = build_design(pairs, lead_feature);
  const Eigen::Index n = x_full.rows();
  const Eigen::Index f_full = x_full.cols();
  Eigen::VectorXd y(n);
  for (Eigen::Index t = 0; t < n; ++t) y[t] = pairs[t].y;

  // Constant columns (beyond the intercept) make the normal equations
  // singular regardless of ridge choice; solve without them.
  std::vector<Eigen::Index> keep = {0};
  for (Eigen::Index j = 1; j < f_full; ++j) {
    const double lo = x_full.col(j).minCoeff();
    const double hi = x_full.col(j).maxCoeff();
    if (hi - lo > 1e-12 * (std::abs(hi) + std::abs(lo) + 1.0)) {
      keep.push_back(j);
    }
  }
  const Eigen::Index f = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd x(n, f);
  for (Eigen::Index j = 0; j < f; ++j) x.col(j) = x_full.col(keep[j]);
  const Eigen::VectorXd colsum = x.colwise().sum();

  const double sd_y = std::sqrt(std::max(variance_of(
      std::span<const double>(y.data(), static_cast<std::size_t>(n))), 0.0));
  const double delta_min = 1e-8 * std::max(sd_y, 1.0);
  const double delta0 = std::max(0.1 * sd_y, delta_min);

  const bool warm_ok = warm && warm->beta.rows() == f_full &&
                       warm->beta.cols() == static_cast<Eigen::Index>(levels.size()) &&
                       warm->lead_feature == lead_feature;
  const int iters = warm_ok ? 2 : 60;
  // Anneal geometrically from delta0 down to delta_min, then hold there for
  // a few sweeps so cold and warm fits share the same fixed point.
  const int anneal_span = std::max(iters - 5, 1);
  const double anneal_rate =
      std::pow(delta_min / delta0, 1.0 / static_cast<double>(anneal_span));

  QrParams out;
  out.levels.assign(levels.begin(), levels.end());
  out.lead_feature = lead_feature;
  out.beta = Eigen::MatrixXd::Zero(f_full, static_cast<Eigen::Index>(levels.size()));

  // Sorted-member columns are strongly collinear, so the normal equations
  // square an already large condition number. Solve each reweighted problem
  // by column-pivoted QR of the weighted design instead: sqrt(W)X P = Q R
  // gives X'WX = P R'R P', and the tilted system X'WX b = X'Wy + t reduces
  // to two triangular solves. Underdetermined windows (n < 2F) add decaying
  // Tikhonov rows; otherwise the rank-revealing threshold alone handles
  // duplicate columns.
  Eigen::VectorXd sw(n);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const double q = levels[l];
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(f);
    if (warm_ok) {
      for (Eigen::Index j = 0; j < f; ++j) {
        beta[j] = warm->beta(keep[j], static_cast<Eigen::Index>(l));
      }
    }
    for (int it = 0; it < iters; ++it) {
      const double delta =
          warm_ok ? delta_min
                  : std::max(delta_min, delta0 * std::pow(anneal_rate, it));
      const Eigen::VectorXd resid = y - x * beta;
      for (Eigen::Index t = 0; t < n; ++t) {
        sw[t] = 1.0 / std::sqrt(std::abs(resid[t]) + delta);
      }
      const double shrink =
          n < 2 * f ? ridge_rel + 1e-3 * std::pow(0.5, it) : 0.0;
      Eigen::MatrixXd design(n + (shrink > 0.0 ? f : 0), f);
      design.topRows(n) = sw.asDiagonal() * x;
      if (shrink > 0.0) {
        design.bottomRows(f) =
            (std::sqrt(shrink) * design.topRows(n).colwise().norm())
                .asDiagonal();
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
      const Eigen::Index rank = qr.rank();
      const Eigen::VectorXd rhs =
          design.topRows(n).transpose() * sw.cwiseProduct(y) +
          (2.0 * q - 1.0) * colsum;
      Eigen::VectorXd v = qr.colsPermutation().transpose() * rhs;
      const auto r_block = qr.matrixQR().topLeftCorner(rank, rank);
      v.head(rank) =
          r_block.triangularView<Eigen::Upper>().transpose().solve(
              v.head(rank));
      v.head(rank) =
          r_block.triangularView<Eigen::Upper>().solve(v.head(rank));
      v.tail(f - rank).setZero();
      beta = qr.colsPermutation() * v;
    }
    for (Eigen::Index j = 0; j < f; ++j) {
      out.beta(keep[j], static_cast<Eigen::Index>(l)) = beta[j];
    }
  }
  if (report) {
    report->converged = true;
    report->iterations = iters;
  }
  return out;
}

std::vector<double> qr_predict(const QrParams& params,
                               std::span<const double> members, LeadTime lead) {
  const Eigen::VectorXd x = feature_row(members, lead, params.lead_feature);
  if (x.size() != params.beta.rows()) {
    throw std::invalid_argument("qr: feature size mismatch");
  }
  Eigen::VectorXd v = params.beta.transpose() * x;
  std::vector<double> out(v.data(), v.data() + v.size());
  // Independent per-level regressions can cross; restore monotonicity.
  std::sort(out.begin(), out.end());
  return out;
}

void QrCalibrator::do_fit(std::span<const TrainingPair> pairs) {
  const QrParams* warm = fitted() ? &params_ : nullptr;
  params_ = fit_qr(pairs, grid().levels, options().lead_feature,
                   options().qr_ridge_rel, warm, &report_);
}

std::vector<double> QrCalibrator::do_predict(
    const EnsembleForecast& raw) const {
  return qr_predict(params_, raw.members, raw.lead);
}

nlohmann::json QrCalibrator::params_json() const {
  std::vector<std::vector<double>> rows(params_.beta.rows());
  for (Eigen::Index i = 0; i < params_.beta.rows(); ++i) {
    rows[i].assign(params_.beta.row(i).begin(), params_.beta.row(i).end());
  }
  return nlohmann::json{{"levels", params_.levels},
                        {"beta", rows},
                        {"lead_feature", params_.lead_feature}};
}

void QrCalibrator::load_params(const nlohmann::json& j) {
  params_.levels = j.at("levels").get<std::vector<double>>();
  params_.lead_feature = j.at("lead_feature").get<bool>();
  const auto rows = j.at("beta").get<std::vector<std::vector<double>>>();
  params_.beta.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(params_.levels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t l = 0; l < rows[i].size(); ++l) {
      params_.beta(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>(l)) = rows[i][l];
    }
  }
}

}  // namespace powcal
