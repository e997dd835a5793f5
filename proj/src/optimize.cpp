#include "powcal/optimize.hpp"

#include <cmath>
#include <stdexcept>

namespace powcal {

BfgsResult bfgs_minimize(const Objective& fn, Eigen::VectorXd x0,
                         const BfgsOptions& opts) {
  const auto n = x0.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian
  Eigen::VectorXd g(n), g_new(n);
  double f = fn(x0, &g);
  if (!std::isfinite(f))
    throw std::runtime_error("bfgs: objective not finite at the start point");

  BfgsResult res;
  res.x = x0;
  res.f = f;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -h * g;
    double slope = dir.dot(g);
    if (!(slope < 0.0)) {  // lost positive definiteness; restart
      h.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0;
    double f_new = f;
    Eigen::VectorXd x_new = res.x;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = res.x + step * dir;
      f_new = fn(x_new, nullptr);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = g.lpNorm<Eigen::Infinity>() <= 1e2 * opts.grad_tol;
      break;
    }
    fn(x_new, &g_new);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      h = (eye - rho * s * yv.transpose()) * h *
              (eye - rho * yv * s.transpose()) +
          rho * s * s.transpose();
    }
    const double dx = s.lpNorm<Eigen::Infinity>();
    const double fx = std::fabs(f - f_new);
    res.x = x_new;
    f = f_new;
    res.f = f_new;
    g = g_new;
    res.iterations = it + 1;
    if (dx <= opts.step_tol * (1.0 + res.x.lpNorm<Eigen::Infinity>()) ||
        fx <= opts.step_tol * (1.0 + std::fabs(f))) {
      res.converged = true;
      break;
    }
  }
  if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) res.converged = true;
  return res;
}

GdReport gd_train(const Objective& fn, Eigen::VectorXd& params,
                  const GdOptions& opts) {
  Eigen::VectorXd grad(params.size());
  Eigen::VectorXd best = params;
  double step = opts.step;
  int since_improve = 0;
  int halvings = 0;

  GdReport rep;
  double loss = fn(params, &grad);
  if (!std::isfinite(loss))
    throw std::runtime_error("gd: loss not finite at the start point");
  rep.best_loss = loss;
  rep.loss_trace.push_back(loss);

  for (int it = 0; it < opts.max_iter; ++it) {
    params -= step * grad;
    loss = fn(params, &grad);
    rep.iterations = it + 1;
    if (!std::isfinite(loss)) {
      // step too aggressive: back off and restart from the best point
      params = best;
      loss = fn(params, &grad);
      step *= 0.5;
      if (++halvings > opts.max_halvings) break;
      continue;
    }
    if (loss < rep.best_loss * (1.0 - opts.min_rel_improve) ||
        (loss < rep.best_loss && rep.best_loss == 0.0)) {
      since_improve = 0;
    } else {
      ++since_improve;
    }
    if (loss < rep.best_loss) {
      rep.best_loss = loss;
      best = params;
    }
    rep.loss_trace.push_back(rep.best_loss);
    if (since_improve >= opts.patience) {
      if (++halvings > opts.max_halvings) break;
      step *= 0.5;
      params = best;
      since_improve = 0;
    }
  }
  params = best;
  return rep;
}

}  // namespace powcal
