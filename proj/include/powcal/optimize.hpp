#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace powcal {

/// Objective callback: returns f(x) and, when grad is non-null, writes the
/// gradient into it.
using Objective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct BfgsOptions {
  int max_iter = 300;
  double grad_tol = 1e-9;   // on the max-norm of the gradient
  double step_tol = 1e-14;  // on the relative parameter change
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Dense BFGS with Armijo backtracking. Deterministic; suitable for the
/// small smooth objectives used by the parametric fitters.
BfgsResult bfgs_minimize(const Objective& fn, Eigen::VectorXd x0,
                         const BfgsOptions& opts = {});

struct GdOptions {
  double step = 0.05;
  int max_iter = 2000;
  int patience = 40;            // plateau length before halving the step
  double min_rel_improve = 1e-5;
  int max_halvings = 4;
};

struct GdReport {
  std::vector<double> loss_trace;  // best-so-far after each iteration
  int iterations = 0;
  double best_loss = 0.0;
};

/// Full-batch gradient descent with plateau-triggered step halving as the
/// early-stopping rule. Keeps and restores the best parameters seen.
GdReport gd_train(const Objective& fn, Eigen::VectorXd& params,
                  const GdOptions& opts = {});

}  // namespace powcal
