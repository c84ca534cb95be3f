// SGD and AMSGrad over dense parameter blocks.

#ifndef UDDAG_OPTIMIZER_HPP
#define UDDAG_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uddag {

struct AmsgradHyper {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One AMSGrad update of a scalar. No bias correction.
inline void amsgrad_step(double& param, double grad, double& m, double& v, double& vhat, const AmsgradHyper& h) {
  m = h.beta1 * m + (1 - h.beta1) * grad;
  v = h.beta2 * v + (1 - h.beta2) * grad * grad;
  vhat = std::max(vhat, v);
  param -= h.alpha * m / (std::sqrt(vhat) + h.eps);
}

struct Param {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd m, v, vhat;  // AMSGrad moments, allocated lazily
  bool frozen_first_column = false;  // embedding tables: column 0 stays zero

  Param() = default;
  Param(std::string n, Eigen::MatrixXd init, bool zero_col = false)
      : name(std::move(n)), value(std::move(init)), grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())),
        frozen_first_column(zero_col) {}

  std::size_t size() const { return static_cast<std::size_t>(value.size()); }
};

inline void zero_grads(std::vector<Param>& params) {
  for (auto& p : params) p.grad.setZero();
}

/// Multiplies every weight by (1 - decay), as a separate step after the
/// gradient update.
inline void decay_weights(std::vector<Param>& params, double decay) {
  if (decay <= 0) return;
  for (auto& p : params) p.value *= (1 - decay);
}

inline void sgd_update(std::vector<Param>& params, double lr, double scale) {
  for (auto& p : params) {
    p.value.noalias() -= (lr * scale) * p.grad;
    if (p.frozen_first_column && p.value.cols() > 0) p.value.col(0).setZero();
  }
}

inline void amsgrad_update(std::vector<Param>& params, const AmsgradHyper& h, double scale) {
  for (auto& p : params) {
    if (p.m.size() != p.value.size()) {
      p.m = Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols());
      p.v = p.m;
      p.vhat = p.m;
    }
    double* w = p.value.data();
    const double* g = p.grad.data();
    double* m = p.m.data();
    double* v = p.v.data();
    double* vh = p.vhat.data();
    for (Eigen::Index i = 0; i < p.value.size(); ++i) amsgrad_step(w[i], g[i] * scale, m[i], v[i], vh[i], h);
    if (p.frozen_first_column && p.value.cols() > 0) p.value.col(0).setZero();
  }
}

}  // namespace uddag

#endif  // UDDAG_OPTIMIZER_HPP
