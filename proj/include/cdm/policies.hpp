#pragma once

// Advice-aggregation policies: weighted majority vote, meta-MAB (Thompson
// sampling over experts), EXP4.P with confidence priors, and meta-CMAB
// (LinUCB over per-arm meta-contexts built from the advice).

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cdm/experts.hpp"
#include "cdm/rng.hpp"

namespace cdm {

enum class Algorithm { Wmv, MetaMab, Exp4p, MetaCmab, Random };
std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view text);
inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::Wmv, Algorithm::MetaMab,
                                               Algorithm::Exp4p, Algorithm::MetaCmab,
                                               Algorithm::Random};

/// Advice for one step, optionally with a matching N x K confidence matrix.
struct AdviceSet {
  AdviceMatrix values;
  std::optional<ConfidenceMatrix> confidence;

  std::size_t experts() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t arms() const { return static_cast<std::size_t>(values.cols()); }
};

/// Appends one expert with i.i.d. uniform advice (and confidence 0.5).
AdviceSet with_random_expert(const AdviceSet& advice, Rng& rng);

/// Divides each row by its sum; all-zero rows become uniform.
Eigen::MatrixXd normalize_rows(const AdviceMatrix& advice);

// --- weighted majority vote -------------------------------------------------

inline constexpr double kWmvEpsilon = 1e-6;

/// Per-arm sum_n w_n * advice(n, k). With confidence w = logit(c) (c clamped
/// to [eps, 1-eps]); without it every expert votes with weight 1.
std::vector<double> wmv_scores(const AdviceSet& advice);
std::size_t wmv_select(const AdviceSet& advice, Rng& rng);

// --- EXP4.P with confidence priors ------------------------------------------

class Exp4p {
 public:
  /// `experts` counts every advice row the policy will see, including any
  /// appended random expert.
  Exp4p(std::size_t experts, std::size_t arms, std::size_t horizon, double delta = 0.1,
        double prior_strength = 100.0);

  /// Per-arm probabilities from row-stochastic advice. The confidence prior
  /// term is dropped when `confidence` is null.
  std::vector<double> probabilities(const Eigen::MatrixXd& distributions,
                                    const ConfidenceMatrix* confidence) const;

  void update(const Eigen::MatrixXd& distributions, std::span<const double> probabilities,
              std::size_t arm, double reward);

  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  double prior_strength() const { return prior_strength_; }
  const Eigen::VectorXd& log_weights() const { return w_; }
  void set_log_weights(const Eigen::VectorXd& w);

  /// Softmax of the first `count` log-weights, summing to 1.
  std::vector<double> normalized_weights(std::size_t count) const;

 private:
  std::size_t arms_;
  std::size_t horizon_;
  double delta_;
  double prior_strength_;
  double gamma_;
  Eigen::VectorXd w_;
};

std::size_t sample_from(std::span<const double> probabilities, Rng& rng);

// --- meta-MAB ----------------------------------------------------------------

class MetaMab {
 public:
  MetaMab(std::size_t experts, double prior_strength = 100.0);

  struct Choice {
    std::size_t arm;
    std::size_t expert;
  };

  /// Thompson-samples an expert from Beta(alpha + M c, beta + M (1 - c)) and
  /// follows its greedy arm. c is the expert's mean confidence over arms.
  Choice select(const AdviceSet& advice, Rng& rng) const;
  std::size_t sample_expert(const std::vector<double>* confidence, Rng& rng) const;
  void update(std::size_t expert, double reward);

  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& beta() const { return beta_; }
  void set_posterior(std::size_t expert, double alpha, double beta);
  double prior_strength() const { return prior_strength_; }

 private:
  double prior_strength_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
};

// --- meta-CMAB / LinUCB ------------------------------------------------------

/// (advice_1, [conf_1,] ..., advice_N, [conf_N,] 1) for one arm.
Eigen::VectorXd build_meta_context(const Eigen::VectorXd& advice_column,
                                   const Eigen::VectorXd* confidence_column);
/// One meta-context per arm, stacked as rows (K x D).
Eigen::MatrixXd build_meta_contexts(const AdviceSet& advice);
std::size_t meta_context_dim(std::size_t experts, bool with_confidence);

class LinUcb {
 public:
  LinUcb(std::size_t dim, double ridge = 1.0, double alpha = 1.0);

  /// theta . y_k + alpha * sqrt(y_k' A^-1 y_k) for every row y_k.
  std::vector<double> scores(const Eigen::MatrixXd& contexts) const;
  std::size_t select(const Eigen::MatrixXd& contexts, Rng& rng) const;
  void update(const Eigen::VectorXd& y, double reward);

  Eigen::VectorXd theta() const;
  const Eigen::MatrixXd& design() const { return a_; }
  const Eigen::VectorXd& response() const { return b_; }
  std::size_t dim() const { return static_cast<std::size_t>(b_.size()); }
  double ridge() const { return ridge_; }

 private:
  double ridge_;
  double alpha_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
};

/// theta on the advice features divided by the sum of their magnitudes.
std::vector<double> normalized_advice_weights(const Eigen::VectorXd& theta, std::size_t experts,
                                              bool with_confidence);

// --- common interface ---------------------------------------------------------

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Algorithm algorithm() const = 0;
  virtual std::size_t select(const AdviceSet& advice, Rng& rng) = 0;
  /// Called once after every select with the same advice and the observed reward.
  virtual void update(const AdviceSet& advice, std::size_t arm, double reward) = 0;
  /// Per-expert weights over the raw panel; empty where undefined.
  virtual std::vector<double> weights_snapshot() const { return {}; }
};

struct PolicyParams {
  std::size_t arms = 4;
  std::size_t experts = 4;  // raw panel size, without the random expert
  std::size_t horizon = 1000;
  double delta = 0.1;
  double prior_strength = 100.0;
  double ucb_alpha = 1.0;
  double ridge = 1.0;
  bool with_confidence = false;
};

std::unique_ptr<Policy> make_policy(Algorithm algorithm, const PolicyParams& params);

std::size_t random_policy_select(std::size_t arms, Rng& rng);

}  // namespace cdm
