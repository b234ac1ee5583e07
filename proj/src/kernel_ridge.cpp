#include "cdm/kernel_ridge.hpp"

#include <cmath>
#include <stdexcept>

namespace cdm {

KernelRidge::KernelRidge(KernelParams params)
    : params_(params), inv_two_l2_(0.0) {
  if (!(params_.length_scale > 0.0)) throw std::invalid_argument("kernel length-scale must be > 0");
  if (!(params_.ridge > 0.0)) throw std::invalid_argument("kernel ridge must be > 0");
  inv_two_l2_ = 1.0 / (2.0 * params_.length_scale * params_.length_scale);
}

double KernelRidge::kernel(Context a, Context b) const {
  const double dx = a.x0 - b.x0;
  const double dy = a.x1 - b.x1;
  return std::exp(-(dx * dx + dy * dy) * inv_two_l2_);
}

void KernelRidge::fill_kernel_column(Context x, Eigen::VectorXd& out) const {
  out.resize(static_cast<Eigen::Index>(xs_.size()));
  for (std::size_t i = 0; i < xs_.size(); ++i) out[static_cast<Eigen::Index>(i)] = kernel(xs_[i], x);
}

void KernelRidge::add(Context x, double y) {
  const auto n = static_cast<Eigen::Index>(xs_.size());
  Eigen::VectorXd k;
  fill_kernel_column(x, k);
  const double diag = 1.0 + params_.ridge;

  if (n == 0) {
    inverse_.resize(1, 1);
    inverse_(0, 0) = 1.0 / diag;
  } else {
    const Eigen::VectorXd u = inverse_ * k;
    const double schur = diag - k.dot(u);
    if (!(schur > 0.0) || !std::isfinite(schur)) {
      throw NumericError("kernel ridge: singular update");
    }
    Eigen::MatrixXd next(n + 1, n + 1);
    next.topLeftCorner(n, n) = inverse_ + (u * u.transpose()) / schur;
    next.topRightCorner(n, 1) = -u / schur;
    next.bottomLeftCorner(1, n) = -u.transpose() / schur;
    next(n, n) = 1.0 / schur;
    inverse_ = std::move(next);
  }
  xs_.push_back(x);
  ys_.push_back(y);
  const Eigen::Map<const Eigen::VectorXd> yv(ys_.data(), n + 1);
  weights_ = inverse_ * yv;
}

double KernelRidge::mean(Context x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    acc += weights_[static_cast<Eigen::Index>(i)] * kernel(xs_[i], x);
  }
  return acc;
}

std::pair<double, double> KernelRidge::mean_and_stddev(Context x) const {
  if (xs_.empty()) return {0.0, 1.0};
  Eigen::VectorXd k;
  fill_kernel_column(x, k);
  const double m = weights_.dot(k);
  const double var = 1.0 - k.dot(inverse_.selfadjointView<Eigen::Upper>() * k);
  return {m, std::sqrt(std::max(var, 0.0))};
}

double KernelRidge::stddev(Context x) const { return mean_and_stddev(x).second; }

}  // namespace cdm
