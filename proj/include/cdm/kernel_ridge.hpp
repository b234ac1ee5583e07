#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cdm/perlin.hpp"

namespace cdm {

struct KernelParams {
  double length_scale = 0.2;  // RBF length-scale in context units
  double ridge = 1.0;         // lambda, added to the kernel diagonal
  double exploration = 1.0;   // UCB multiplier on the posterior std
};

/// RBF kernel ridge regression on 2-d contexts with a zero prior mean.
///
/// Keeps (K + lambda I)^-1 up to date with a block-inverse update, so adding
/// a sample and evaluating the posterior are both O(n^2).
class KernelRidge {
 public:
  explicit KernelRidge(KernelParams params = {});

  void add(Context x, double y);

  double mean(Context x) const;
  double stddev(Context x) const;
  /// Posterior mean and std in a single kernel sweep.
  std::pair<double, double> mean_and_stddev(Context x) const;

  std::size_t size() const { return ys_.size(); }
  const KernelParams& params() const { return params_; }

 private:
  double kernel(Context a, Context b) const;
  void fill_kernel_column(Context x, Eigen::VectorXd& out) const;

  KernelParams params_;
  double inv_two_l2_;
  std::vector<Context> xs_;
  std::vector<double> ys_;
  Eigen::MatrixXd inverse_;  // (K + lambda I)^-1
  Eigen::VectorXd weights_;  // inverse_ * y
};

}  // namespace cdm
