#include "cdm/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/random/beta_distribution.hpp>

namespace cdm {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string(what) + ": non-finite weights");
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Wmv: return "wmv";
    case Algorithm::MetaMab: return "metamab";
    case Algorithm::Exp4p: return "exp4p";
    case Algorithm::MetaCmab: return "metacmab";
    case Algorithm::Random: return "random";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  for (Algorithm a : kAllAlgorithms) {
    if (to_string(a) == text) return a;
  }
  throw std::invalid_argument("unknown algorithm: " + std::string(text));
}

AdviceSet with_random_expert(const AdviceSet& advice, Rng& rng) {
  const Index n = advice.values.rows();
  const Index k = advice.values.cols();
  AdviceSet out;
  out.values.resize(n + 1, k);
  out.values.topRows(n) = advice.values;
  for (Index a = 0; a < k; ++a) out.values(n, a) = uniform01(rng);
  if (advice.confidence) {
    ConfidenceMatrix c(n + 1, k);
    c.topRows(n) = *advice.confidence;
    c.row(n).setConstant(0.5);
    out.confidence = std::move(c);
  }
  return out;
}

Eigen::MatrixXd normalize_rows(const AdviceMatrix& advice) {
  Eigen::MatrixXd out = advice;
  for (Index n = 0; n < out.rows(); ++n) {
    const double s = out.row(n).sum();
    if (s > 0.0) {
      out.row(n) /= s;
    } else {
      out.row(n).setConstant(1.0 / static_cast<double>(out.cols()));
    }
  }
  return out;
}

std::vector<double> wmv_scores(const AdviceSet& advice) {
  std::vector<double> scores(advice.arms(), 0.0);
  for (Index n = 0; n < advice.values.rows(); ++n) {
    for (Index k = 0; k < advice.values.cols(); ++k) {
      double w = 1.0;
      if (advice.confidence) {
        const double c = std::clamp((*advice.confidence)(n, k), kWmvEpsilon, 1.0 - kWmvEpsilon);
        w = std::log(c / (1.0 - c));
      }
      scores[static_cast<std::size_t>(k)] += w * advice.values(n, k);
    }
  }
  return scores;
}

std::size_t wmv_select(const AdviceSet& advice, Rng& rng) {
  return argmax_random_tie(wmv_scores(advice), rng);
}

// --- EXP4.P --------------------------------------------------------------------

Exp4p::Exp4p(std::size_t experts, std::size_t arms, std::size_t horizon, double delta,
             double prior_strength)
    : arms_(arms), horizon_(horizon), delta_(delta), prior_strength_(prior_strength) {
  if (experts < 1 || arms < 1 || horizon < 1) throw std::invalid_argument("Exp4p: counts must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("Exp4p: delta must be > 0");
  if (!(prior_strength >= 0.0)) throw std::invalid_argument("Exp4p: M must be >= 0");
  gamma_ = std::sqrt(std::log(static_cast<double>(experts)) /
                     (static_cast<double>(arms) * static_cast<double>(horizon)));
  w_ = Eigen::VectorXd::Ones(idx(experts));
}

void Exp4p::set_log_weights(const Eigen::VectorXd& w) {
  if (w.size() != w_.size()) throw std::invalid_argument("Exp4p: weight size mismatch");
  w_ = w;
}

std::vector<double> Exp4p::probabilities(const Eigen::MatrixXd& distributions,
                                         const ConfidenceMatrix* confidence) const {
  if (distributions.rows() != w_.size() || distributions.cols() != idx(arms_)) {
    throw std::invalid_argument("Exp4p: advice shape mismatch");
  }
  require_finite(w_, "Exp4p");
  std::vector<double> p(arms_);
  Eigen::VectorXd logits(w_.size());
  for (Index k = 0; k < idx(arms_); ++k) {
    logits = w_;
    if (confidence) logits += (0.5 * gamma_ * prior_strength_) * confidence->col(k);
    const double top = logits.maxCoeff();
    const Eigen::VectorXd e = (logits.array() - top).exp().matrix();
    p[static_cast<std::size_t>(k)] = e.dot(distributions.col(k)) / e.sum();
  }
  // Per-arm confidences give each arm its own mixture, so the sum can drift from 1.
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(total > 0.0)) throw NumericError("Exp4p: probabilities vanish");
  for (double& v : p) v /= total;
  return p;
}

void Exp4p::update(const Eigen::MatrixXd& distributions, std::span<const double> probabilities,
                   std::size_t arm, double reward) {
  if (probabilities.size() != arms_ || arm >= arms_) throw std::invalid_argument("Exp4p::update: bad arm or probabilities");
  if (!(probabilities[arm] > 0.0)) throw NumericError("Exp4p::update: chosen arm has zero probability");
  const double bonus = std::sqrt(std::log(static_cast<double>(w_.size()) / delta_) /
                                 (static_cast<double>(arms_) * static_cast<double>(horizon_)));
  for (Index n = 0; n < w_.size(); ++n) {
    const double y_hat = distributions(n, idx(arm)) * reward / probabilities[arm];
    double v_hat = 0.0;
    for (std::size_t k = 0; k < arms_; ++k) {
      const double xi = distributions(n, idx(k));
      if (xi == 0.0) continue;
      if (!(probabilities[k] > 0.0)) throw NumericError("Exp4p::update: zero probability on advised arm");
      v_hat += xi / probabilities[k];
    }
    w_[n] += 0.5 * gamma_ * (y_hat + v_hat * bonus);
  }
  require_finite(w_, "Exp4p");
}

std::vector<double> Exp4p::normalized_weights(std::size_t count) const {
  if (count < 1 || idx(count) > w_.size()) throw std::invalid_argument("Exp4p: bad expert count");
  const Eigen::VectorXd head = w_.head(idx(count));
  const double top = head.maxCoeff();
  const Eigen::VectorXd e = (head.array() - top).exp().matrix();
  const double s = e.sum();
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = e[idx(i)] / s;
  return out;
}

std::size_t sample_from(std::span<const double> probabilities, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    if (probabilities[k] <= 0.0) continue;
    acc += probabilities[k];
    last_positive = k;
    if (u < acc) return k;
  }
  return last_positive;
}

// --- meta-MAB ------------------------------------------------------------------

MetaMab::MetaMab(std::size_t experts, double prior_strength)
    : prior_strength_(prior_strength), alpha_(experts, 1.0), beta_(experts, 1.0) {
  if (experts < 1) throw std::invalid_argument("MetaMab: need at least one expert");
  if (!(prior_strength >= 0.0)) throw std::invalid_argument("MetaMab: M must be >= 0");
}

void MetaMab::set_posterior(std::size_t expert, double alpha, double beta) {
  if (!(alpha >= 1.0 && beta >= 1.0)) throw std::invalid_argument("MetaMab: alpha, beta must be >= 1");
  alpha_.at(expert) = alpha;
  beta_.at(expert) = beta;
}

std::size_t MetaMab::sample_expert(const std::vector<double>* confidence, Rng& rng) const {
  if (confidence && confidence->size() != alpha_.size()) {
    throw std::invalid_argument("MetaMab: confidence size mismatch");
  }
  std::vector<double> theta(alpha_.size());
  for (std::size_t n = 0; n < alpha_.size(); ++n) {
    double a = alpha_[n];
    double b = beta_[n];
    if (confidence) {
      const double c = std::clamp((*confidence)[n], 0.0, 1.0);
      a += prior_strength_ * c;
      b += prior_strength_ * (1.0 - c);
    }
    theta[n] = boost::random::beta_distribution<double>(a, b)(rng);
  }
  return argmax_random_tie(theta, rng);
}

MetaMab::Choice MetaMab::select(const AdviceSet& advice, Rng& rng) const {
  if (advice.experts() != alpha_.size()) throw std::invalid_argument("MetaMab: advice rows != experts");
  std::optional<std::vector<double>> conf;
  if (advice.confidence) {
    conf.emplace(alpha_.size());
    for (std::size_t n = 0; n < alpha_.size(); ++n) (*conf)[n] = advice.confidence->row(idx(n)).mean();
  }
  const std::size_t expert = sample_expert(conf ? &*conf : nullptr, rng);
  const Eigen::VectorXd row = advice.values.row(idx(expert)).transpose();
  const std::size_t arm = argmax_random_tie(std::span<const double>(row.data(), advice.arms()), rng);
  return {arm, expert};
}

void MetaMab::update(std::size_t expert, double reward) {
  if (!(reward >= 0.0 && reward <= 1.0)) throw std::invalid_argument("MetaMab: reward outside [0,1]");
  alpha_.at(expert) += reward;
  beta_.at(expert) += 1.0 - reward;
}

// --- meta-CMAB -----------------------------------------------------------------

std::size_t meta_context_dim(std::size_t experts, bool with_confidence) {
  return (with_confidence ? 2 * experts : experts) + 1;
}

Eigen::VectorXd build_meta_context(const Eigen::VectorXd& advice_column,
                                   const Eigen::VectorXd* confidence_column) {
  const auto n = static_cast<std::size_t>(advice_column.size());
  if (confidence_column && confidence_column->size() != advice_column.size()) {
    throw std::invalid_argument("meta-context: confidence length mismatch");
  }
  Eigen::VectorXd y(idx(meta_context_dim(n, confidence_column != nullptr)));
  Index j = 0;
  for (Index i = 0; i < advice_column.size(); ++i) {
    y[j++] = advice_column[i];
    if (confidence_column) y[j++] = (*confidence_column)[i];
  }
  y[j] = 1.0;
  return y;
}

Eigen::MatrixXd build_meta_contexts(const AdviceSet& advice) {
  const bool conf = advice.confidence.has_value();
  Eigen::MatrixXd out(idx(advice.arms()), idx(meta_context_dim(advice.experts(), conf)));
  for (Index k = 0; k < advice.values.cols(); ++k) {
    const Eigen::VectorXd a = advice.values.col(k);
    if (conf) {
      const Eigen::VectorXd c = advice.confidence->col(k);
      out.row(k) = build_meta_context(a, &c).transpose();
    } else {
      out.row(k) = build_meta_context(a, nullptr).transpose();
    }
  }
  return out;
}

LinUcb::LinUcb(std::size_t dim, double ridge, double alpha) : ridge_(ridge), alpha_(alpha) {
  if (dim < 1) throw std::invalid_argument("LinUcb: dimension must be positive");
  if (!(ridge > 0.0)) throw std::invalid_argument("LinUcb: ridge must be > 0");
  a_ = ridge * Eigen::MatrixXd::Identity(idx(dim), idx(dim));
  b_ = Eigen::VectorXd::Zero(idx(dim));
}

std::vector<double> LinUcb::scores(const Eigen::MatrixXd& contexts) const {
  if (contexts.cols() != b_.size()) throw std::invalid_argument("LinUcb: meta-context dimension mismatch");
  const Eigen::LLT<Eigen::MatrixXd> llt(a_);
  if (llt.info() != Eigen::Success) throw NumericError("LinUcb: design matrix not positive definite");
  const Eigen::VectorXd theta = llt.solve(b_);
  const Eigen::MatrixXd solved = llt.solve(contexts.transpose());  // A^-1 Y'
  std::vector<double> out(static_cast<std::size_t>(contexts.rows()));
  for (Index k = 0; k < contexts.rows(); ++k) {
    const double width = contexts.row(k).dot(solved.col(k));
    out[static_cast<std::size_t>(k)] =
        contexts.row(k).dot(theta) + alpha_ * std::sqrt(std::max(width, 0.0));
  }
  return out;
}

std::size_t LinUcb::select(const Eigen::MatrixXd& contexts, Rng& rng) const {
  return argmax_random_tie(scores(contexts), rng);
}

void LinUcb::update(const Eigen::VectorXd& y, double reward) {
  if (y.size() != b_.size()) throw std::invalid_argument("LinUcb: meta-context dimension mismatch");
  a_.noalias() += y * y.transpose();
  b_ += reward * y;
}

Eigen::VectorXd LinUcb::theta() const {
  const Eigen::LLT<Eigen::MatrixXd> llt(a_);
  if (llt.info() != Eigen::Success) throw NumericError("LinUcb: design matrix not positive definite");
  return llt.solve(b_);
}

std::vector<double> normalized_advice_weights(const Eigen::VectorXd& theta, std::size_t experts,
                                              bool with_confidence) {
  if (theta.size() != idx(meta_context_dim(experts, with_confidence))) {
    throw std::invalid_argument("normalized weights: theta dimension mismatch");
  }
  const std::size_t stride = with_confidence ? 2 : 1;
  std::vector<double> w(experts);
  double total = 0.0;
  for (std::size_t n = 0; n < experts; ++n) {
    w[n] = theta[idx(n * stride)];
    total += std::abs(w[n]);
  }
  if (total > 0.0) {
    for (double& v : w) v /= total;
  }
  return w;
}

std::size_t random_policy_select(std::size_t arms, Rng& rng) { return uniform_index(arms, rng); }

// --- Policy adapters -------------------------------------------------------------

namespace {

void check_reward(double reward) {
  if (!(reward >= 0.0 && reward <= 1.0)) throw std::invalid_argument("reward outside [0,1]");
}

class WmvPolicy final : public Policy {
 public:
  Algorithm algorithm() const override { return Algorithm::Wmv; }
  std::size_t select(const AdviceSet& advice, Rng& rng) override { return wmv_select(advice, rng); }
  void update(const AdviceSet&, std::size_t, double reward) override { check_reward(reward); }
};

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::size_t arms) : arms_(arms) {}
  Algorithm algorithm() const override { return Algorithm::Random; }
  std::size_t select(const AdviceSet&, Rng& rng) override { return random_policy_select(arms_, rng); }
  void update(const AdviceSet&, std::size_t, double reward) override { check_reward(reward); }

 private:
  std::size_t arms_;
};

class Exp4pPolicy final : public Policy {
 public:
  explicit Exp4pPolicy(const PolicyParams& p)
      : experts_(p.experts), state_(p.experts + 1, p.arms, p.horizon, p.delta, p.prior_strength) {}

  Algorithm algorithm() const override { return Algorithm::Exp4p; }

  std::size_t select(const AdviceSet& advice, Rng& rng) override {
    const AdviceSet augmented = with_random_expert(advice, rng);
    distributions_ = normalize_rows(augmented.values);
    probabilities_ = state_.probabilities(
        distributions_, augmented.confidence ? &*augmented.confidence : nullptr);
    return sample_from(probabilities_, rng);
  }

  void update(const AdviceSet&, std::size_t arm, double reward) override {
    check_reward(reward);
    state_.update(distributions_, probabilities_, arm, reward);
  }

  std::vector<double> weights_snapshot() const override { return state_.normalized_weights(experts_); }

 private:
  std::size_t experts_;
  Exp4p state_;
  Eigen::MatrixXd distributions_;
  std::vector<double> probabilities_;
};

class MetaMabPolicy final : public Policy {
 public:
  explicit MetaMabPolicy(const PolicyParams& p) : experts_(p.experts), state_(p.experts + 1, p.prior_strength) {}

  Algorithm algorithm() const override { return Algorithm::MetaMab; }

  std::size_t select(const AdviceSet& advice, Rng& rng) override {
    const auto choice = state_.select(with_random_expert(advice, rng), rng);
    chosen_expert_ = choice.expert;
    return choice.arm;
  }

  void update(const AdviceSet&, std::size_t, double reward) override {
    state_.update(chosen_expert_, reward);
  }

  std::vector<double> weights_snapshot() const override {
    std::vector<double> out(experts_);
    for (std::size_t n = 0; n < experts_; ++n) {
      out[n] = state_.alpha()[n] / (state_.alpha()[n] + state_.beta()[n]);
    }
    return out;
  }

 private:
  std::size_t experts_;
  MetaMab state_;
  std::size_t chosen_expert_ = 0;
};

class MetaCmabPolicy final : public Policy {
 public:
  explicit MetaCmabPolicy(const PolicyParams& p)
      : experts_(p.experts),
        with_confidence_(p.with_confidence),
        model_(meta_context_dim(p.experts, p.with_confidence), p.ridge, p.ucb_alpha) {}

  Algorithm algorithm() const override { return Algorithm::MetaCmab; }

  std::size_t select(const AdviceSet& advice, Rng& rng) override {
    check_shape(advice);
    contexts_ = build_meta_contexts(advice);
    return model_.select(contexts_, rng);
  }

  void update(const AdviceSet&, std::size_t arm, double reward) override {
    check_reward(reward);
    model_.update(contexts_.row(idx(arm)).transpose(), reward);
  }

  std::vector<double> weights_snapshot() const override {
    return normalized_advice_weights(model_.theta(), experts_, with_confidence_);
  }

 private:
  void check_shape(const AdviceSet& advice) const {
    if (advice.experts() != experts_ || advice.confidence.has_value() != with_confidence_) {
      throw std::invalid_argument("MetaCmab: advice does not match the configured meta-context");
    }
  }

  std::size_t experts_;
  bool with_confidence_;
  LinUcb model_;
  Eigen::MatrixXd contexts_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(Algorithm algorithm, const PolicyParams& params) {
  switch (algorithm) {
    case Algorithm::Wmv: return std::make_unique<WmvPolicy>();
    case Algorithm::MetaMab: return std::make_unique<MetaMabPolicy>(params);
    case Algorithm::Exp4p: return std::make_unique<Exp4pPolicy>(params);
    case Algorithm::MetaCmab: return std::make_unique<MetaCmabPolicy>(params);
    case Algorithm::Random: return std::make_unique<RandomPolicy>(params.arms);
  }
  throw std::invalid_argument("make_policy: unknown algorithm");
}

}  // namespace cdm
