#include "powcal/network.hpp"

#include <cmath>
#include <stdexcept>

namespace powcal {

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 1) throw std::invalid_argument("standardizer: no rows");
  Standardizer s;
  s.mean = rows.colwise().mean();
  s.scale.resize(rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double var =
        (rows.col(j).array() - s.mean[j]).square().sum() /
        std::max<double>(1.0, static_cast<double>(rows.rows() - 1));
    s.scale[j] = var > 1e-24 ? 1.0 / std::sqrt(var) : 0.0;
  }
  return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) {
    throw std::invalid_argument("standardizer: size mismatch");
  }
  return (x - mean).cwiseProduct(scale);
}

int mlp_param_count(const MlpSpec& spec) {
  if (spec.hidden > 0) {
    return spec.hidden * spec.inputs + spec.hidden +
           spec.outputs * spec.hidden + spec.outputs;
  }
  return spec.outputs * spec.inputs + spec.outputs;
}

namespace {

struct Views {
  Eigen::Map<const Eigen::MatrixXd> w1;
  Eigen::Map<const Eigen::VectorXd> b1;
  Eigen::Map<const Eigen::MatrixXd> w2;
  Eigen::Map<const Eigen::VectorXd> b2;
};

Views split(const MlpSpec& spec, const Eigen::VectorXd& theta) {
  const double* p = theta.data();
  if (spec.hidden > 0) {
    return Views{{p, spec.hidden, spec.inputs},
                 {p + spec.hidden * spec.inputs, spec.hidden},
                 {p + spec.hidden * (spec.inputs + 1), spec.outputs,
                  spec.hidden},
                 {p + spec.hidden * (spec.inputs + 1) +
                      spec.outputs * spec.hidden,
                  spec.outputs}};
  }
  return Views{{p, spec.outputs, spec.inputs},
               {p + spec.outputs * spec.inputs, spec.outputs},
               {nullptr, 0, 0},
               {nullptr, 0}};
}

}  // namespace

Eigen::VectorXd mlp_forward(const MlpSpec& spec, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& x, MlpTape* tape) {
  if (theta.size() != mlp_param_count(spec)) {
    throw std::invalid_argument("mlp: parameter vector size mismatch");
  }
  if (x.size() != spec.inputs) {
    throw std::invalid_argument("mlp: input size mismatch");
  }
  const Views v = split(spec, theta);
  if (tape) tape->x = x;
  if (spec.hidden == 0) {
    if (tape) tape->h.resize(0);
    return v.w1 * x + v.b1;
  }
  const Eigen::VectorXd h = (v.w1 * x + v.b1).array().tanh();
  if (tape) tape->h = h;
  return v.w2 * h + v.b2;
}

void mlp_backward(const MlpSpec& spec, const Eigen::VectorXd& theta,
                  const MlpTape& tape, const Eigen::VectorXd& dout,
                  Eigen::VectorXd& grad) {
  if (grad.size() != theta.size()) {
    throw std::invalid_argument("mlp: gradient size mismatch");
  }
  double* g = grad.data();
  if (spec.hidden == 0) {
    Eigen::Map<Eigen::MatrixXd> dw(g, spec.outputs, spec.inputs);
    Eigen::Map<Eigen::VectorXd> db(g + spec.outputs * spec.inputs,
                                   spec.outputs);
    dw.noalias() += dout * tape.x.transpose();
    db += dout;
    return;
  }
  const Views v = split(spec, theta);
  Eigen::Map<Eigen::MatrixXd> dw1(g, spec.hidden, spec.inputs);
  Eigen::Map<Eigen::VectorXd> db1(g + spec.hidden * spec.inputs, spec.hidden);
  Eigen::Map<Eigen::MatrixXd> dw2(g + spec.hidden * (spec.inputs + 1),
                                  spec.outputs, spec.hidden);
  Eigen::Map<Eigen::VectorXd> db2(
      g + spec.hidden * (spec.inputs + 1) + spec.outputs * spec.hidden,
      spec.outputs);
  dw2.noalias() += dout * tape.h.transpose();
  db2 += dout;
  const Eigen::VectorXd dh = v.w2.transpose() * dout;
  const Eigen::VectorXd dpre =
      dh.array() * (1.0 - tape.h.array().square());
  dw1.noalias() += dpre * tape.x.transpose();
  db1 += dpre;
}

Eigen::VectorXd mlp_init(const MlpSpec& spec, CounterRng& rng) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(mlp_param_count(spec));
  const auto fill = [&rng](double* p, int count, int fan_in) {
    const double r = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
    for (int i = 0; i < count; ++i) p[i] = r * (2.0 * rng.uniform() - 1.0);
  };
  if (spec.hidden > 0) {
    fill(theta.data(), spec.hidden * spec.inputs, spec.inputs);
    fill(theta.data() + spec.hidden * (spec.inputs + 1),
         spec.outputs * spec.hidden, spec.hidden);
  } else {
    fill(theta.data(), spec.outputs * spec.inputs, spec.inputs);
  }
  return theta;
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double softplus_inv(double y) {
  if (y <= 0.0) throw std::invalid_argument("softplus_inv: y must be positive");
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

double softplus_deriv(double x) {
  if (x > 30.0) return 1.0;
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace powcal
