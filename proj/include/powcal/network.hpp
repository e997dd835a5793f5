#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "powcal/rng.hpp"

namespace powcal {

/// Affine standardization fitted on training data and replayed at predict
/// time. A zero-variance column standardizes to zero.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // 1/sd, or 0 for constant columns

  static Standardizer fit(const Eigen::MatrixXd& rows);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

/// One-hidden-layer perceptron with tanh activation, parameters kept in a
/// single flat vector so generic optimizers and finite-difference checks
/// can treat the model as an ordinary R^n -> R objective.
///
/// Flat layout: W1 (hidden x in, column-major), b1, W2 (out x hidden,
/// column-major), b2. With hidden == 0 the model degenerates to an affine
/// map W (out x in), b.
struct MlpSpec {
  int inputs = 1;
  int hidden = 0;
  int outputs = 1;
};

int mlp_param_count(const MlpSpec& spec);

/// Scratch kept by forward for reuse by backward.
struct MlpTape {
  Eigen::VectorXd x;
  Eigen::VectorXd h;  // tanh activations (empty when hidden == 0)
};

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& x, MlpTape* tape = nullptr);

/// Accumulates d(loss)/d(theta) into `grad` given d(loss)/d(outputs).
void mlp_backward(const MlpSpec& spec, const Eigen::VectorXd& theta,
                  const MlpTape& tape, const Eigen::VectorXd& dout,
                  Eigen::VectorXd& grad);

/// Small deterministic random init (uniform in +-1/sqrt(fan_in)); biases
/// start at zero so callers can overwrite them with data-driven values.
Eigen::VectorXd mlp_init(const MlpSpec& spec, CounterRng& rng);

/// softplus and its inverse, stable for large |x|.
double softplus(double x);
double softplus_inv(double y);
double softplus_deriv(double x);

}  // namespace powcal
