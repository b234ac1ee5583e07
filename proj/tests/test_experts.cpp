#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "cdm/experts.hpp"
#include "cdm/metrics.hpp"

using namespace cdm;

namespace {

double rbf(Context a, Context b, double l) {
  const double dx = a.x0 - b.x0, dy = a.x1 - b.x1;
  return std::exp(-(dx * dx + dy * dy) / (2 * l * l));
}

double random_policy_mean(const PerlinBandit& truth, const std::vector<Context>& xs) {
  double acc = 0.0;
  for (const Context& x : xs) {
    const auto v = truth.values(x);
    for (double f : v) acc += f / v.size();
  }
  return acc / xs.size();
}

}  // namespace

TEST_CASE("kernel ridge posterior matches a direct solve") {
  Rng rng(1);
  KernelParams p;
  KernelRidge model(p);
  auto [m0, s0] = model.mean_and_stddev({0.3, 0.3});
  CHECK(m0 == 0.0);
  CHECK(s0 == 1.0);

  std::vector<Context> xs;
  std::vector<double> ys;
  for (int i = 0; i < 60; ++i) {
    xs.push_back(sample_context(rng));
    ys.push_back(uniform01(rng) < 0.5 ? 0.0 : 1.0);
    model.add(xs.back(), ys.back());
  }
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = rbf(xs[i], xs[j], p.length_scale);
  }
  k.diagonal().array() += p.ridge;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
  const Eigen::VectorXd alpha = ldlt.solve(Eigen::Map<Eigen::VectorXd>(ys.data(), n));
  for (int t = 0; t < 20; ++t) {
    const Context x = sample_context(rng);
    Eigen::VectorXd kx(n);
    for (Eigen::Index i = 0; i < n; ++i) kx[i] = rbf(x, xs[i], p.length_scale);
    const double mean = kx.dot(alpha);
    const double var = 1.0 - kx.dot(ldlt.solve(kx));
    const auto [m, s] = model.mean_and_stddev(x);
    CHECK(m == doctest::Approx(mean).epsilon(1e-9));
    CHECK(s == doctest::Approx(std::sqrt(std::max(var, 0.0))).epsilon(1e-7));
    CHECK(model.mean(x) == doctest::Approx(m).epsilon(1e-12));
  }
}

TEST_CASE("untrained estimators advise zero") {
  Rng rng(2);
  const Expert e(Expert::Trained{std::vector<KernelRidge>(3)});
  const auto a = e.advise({0.2, 0.7}, rng);
  CHECK(a == std::vector<double>(3, 0.0));
  CHECK_THROWS_AS(train_expert(sample_bandit(3, 5, rng), 0, TrainingBackend::KernelUcb, {}, rng),
                  std::invalid_argument);
}

TEST_CASE("trained experts: advice bounded, deterministic, better than random, backends agree") {
  Rng rng(3);
  const PerlinBandit truth = sample_bandit(4, 5, rng);
  const Expert ucb = train_expert(truth, 400, TrainingBackend::KernelUcb, {}, rng);
  const Expert reg = train_expert(truth, 400, TrainingBackend::Regression, {}, rng);
  const Context x{0.41, 0.63};
  const auto a1 = ucb.advise(x, rng);
  CHECK(a1 == ucb.advise(x, rng));
  for (double v : a1) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const auto xs = sample_contexts(512, rng);
  const double r_ucb = expert_expected_reward(ucb, truth, xs, rng);
  const double r_reg = expert_expected_reward(reg, truth, xs, rng);
  CHECK(r_ucb > random_policy_mean(truth, xs));
  CHECK(std::abs(r_ucb - r_reg) <= 0.05);
}

TEST_CASE("oracle, anti-oracle and random experts") {
  Rng rng(4);
  const PerlinBandit truth = sample_bandit(4, 5, rng);
  const auto xs = sample_contexts(1024, rng);
  double best = 0.0, worst = 0.0;
  for (const Context& x : xs) {
    const auto v = truth.values(x);
    best += *std::max_element(v.begin(), v.end());
    worst += *std::min_element(v.begin(), v.end());
  }
  const Context x = xs.front();
  CHECK(oracle_expert(truth).advise(x, rng) == truth.values(x));
  CHECK(expert_expected_reward(oracle_expert(truth), truth, xs, rng) == doctest::Approx(best / xs.size()));
  CHECK(expert_expected_reward(anti_oracle_expert(truth), truth, xs, rng) == doctest::Approx(worst / xs.size()));

  const Expert r = random_expert(4);
  CHECK(r.is_random());
  CHECK(r.advise(x, rng) != r.advise(x, rng));
  CHECK(std::abs(expert_expected_reward(r, truth, xs, rng) - random_policy_mean(truth, xs)) <= 0.05);
  CHECK(hindsight_confidence(r, truth, xs, rng) == 0.5);

  // A constant expert ties on every arm, so its greedy value is the arm mean.
  CHECK(expert_expected_reward(constant_expert(4, 0.3), truth, xs, rng) ==
        doctest::Approx(random_policy_mean(truth, xs)).epsilon(1e-12));
}

TEST_CASE("greedy value averages over tied maxima") {
  const std::vector<double> advice{0.4, 0.9, 0.9};
  const std::vector<double> truth{0.1, 0.2, 0.6};
  CHECK(greedy_expected_value(advice, truth) == doctest::Approx(0.4));
}

TEST_CASE("confidence from totals satisfies its properties") {
  const double lo = 200, hi = 700, uni = 380;
  CHECK(confidence_from_totals(uni, lo, hi, uni) == 0.5);
  CHECK(confidence_from_totals(hi, lo, hi, uni) == 1.0);
  CHECK(confidence_from_totals(lo, lo, hi, uni) == 0.0);
  double prev = -1;
  for (double r = lo; r <= hi; r += 5) {
    const double c = confidence_from_totals(r, lo, hi, uni);
    CHECK(c > prev);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    prev = c;
  }
  CHECK_THROWS_AS(confidence_from_totals(300, 500, 500, 500), NumericError);

  Rng rng(5);
  const PerlinBandit truth = sample_bandit(4, 5, rng);
  const auto xs = sample_contexts(500, rng);
  CHECK(hindsight_confidence(oracle_expert(truth), truth, xs, rng) == 1.0);
  CHECK(hindsight_confidence(anti_oracle_expert(truth), truth, xs, rng) == 0.0);
}

TEST_CASE("noisy confidence") {
  Rng rng(6);
  CHECK(noisy_confidence(0.73, 0.0, rng) == 0.73);

  for (double eta : {0.1, 1.0, 10.0}) {
    double acc = 0.0;
    for (int i = 0; i < 10000; ++i) acc += noisy_confidence(0.5, eta, rng);
    CHECK(std::abs(acc / 10000 - 0.5) <= 0.02);
  }

  // eta = 10: KS distance to the analytic Beta CDF, and near-uniformity.
  for (double c : {0.1, 0.9}) {
    const double a = 1 + c / 10, b = 1 + (1 - c) / 10;
    std::vector<double> s(5000);
    for (double& v : s) v = noisy_confidence(c, 10.0, rng);
    std::sort(s.begin(), s.end());
    double ks_beta = 0.0, ks_uniform = 0.0;
    const double n = static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double f = boost::math::ibeta(a, b, s[i]);
      ks_beta = std::max({ks_beta, std::abs((i + 1) / n - f), std::abs(i / n - f)});
      ks_uniform = std::max({ks_uniform, std::abs((i + 1) / n - s[i]), std::abs(i / n - s[i])});
    }
    CHECK(ks_beta < 1.63 / std::sqrt(n));  // 1% critical value
    CHECK(ks_uniform < 0.05);
  }
}

TEST_CASE("panel targets") {
  const auto het = panel_targets(ConfigKind::Heterogeneous, 1.0 / 6, 4);
  REQUIRE(het.size() == 4);
  CHECK(het.front() == doctest::Approx(0.0));
  CHECK(het.back() == doctest::Approx(1.0 / 3));
  CHECK(het[1] - het[0] == doctest::Approx(het[2] - het[1]));

  const auto pol = panel_targets(ConfigKind::Polarized, 1.0 / 6, 8);
  CHECK(std::count_if(pol.begin(), pol.end(), [](double d) { return std::abs(d) < 1e-12; }) == 4);
  CHECK(std::count_if(pol.begin(), pol.end(), [](double d) { return std::abs(d - 1.0 / 3) < 1e-12; }) == 4);

  const auto odd = panel_targets(ConfigKind::Polarized, 0.5, 5);
  CHECK(std::count(odd.begin(), odd.end(), 0.0) == 3);

  const auto hom = panel_targets(ConfigKind::Homogeneous, 0.4, 3);
  CHECK(hom == std::vector<double>(3, 0.4));
}

TEST_CASE("make_panel calibrates every prior") {
  Rng rng(7);
  const PerlinBandit truth = sample_bandit(4, 5, rng);
  PanelOptions o;
  o.training_steps = 200;
  const ExpertPanel p = make_panel(ConfigKind::Heterogeneous, 0.5, 4, truth, o, rng);
  REQUIRE(p.size() == 4);
  for (const Expert& e : p.experts) {
    CHECK(std::abs(e.achieved_distance - e.target_distance) <= o.tolerance);
    CHECK(e.trained_steps == 200);
  }
  const ExpertPanel zero = make_panel(ConfigKind::Homogeneous, 0.0, 4, truth, o, rng);
  const auto xs = sample_contexts(512, rng);
  for (const Expert& e : zero.experts) {
    CHECK(e.achieved_distance <= o.tolerance);
    CHECK(expert_expected_reward(e, truth, xs, rng) > random_policy_mean(truth, xs));
  }
  const AdviceMatrix a = p.advise(xs.front(), rng);
  CHECK(a.rows() == 4);
  CHECK(a.cols() == 4);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() <= 1.0);
}

TEST_CASE("top fraction keeps the best experts in order") {
  Rng rng(8);
  const PerlinBandit truth = sample_bandit(4, 5, rng);
  ExpertPanel p;
  p.experts = {anti_oracle_expert(truth), oracle_expert(truth), anti_oracle_expert(truth), oracle_expert(truth)};
  p.confidences = {0.0, 1.0, 0.0, 1.0};
  const ExpertPanel top = top_fraction(p, truth, 0.5, rng);
  REQUIRE(top.size() == 2);
  CHECK(top.confidences == std::vector<double>{1.0, 1.0});
  CHECK(top_fraction(p, truth, 1.0, rng).size() == 4);

  ExpertPanel big;
  for (int i = 0; i < 32; ++i) big.experts.push_back(constant_expert(4, 0.1 * (i % 7)));
  std::vector<double> rewards(32);
  for (int i = 0; i < 32; ++i) rewards[i] = i;
  CHECK(top_fraction(big, rewards, 0.5).size() == 16);
  CHECK_THROWS(top_fraction(big, rewards, 0.0));
}

TEST_CASE("Delta 1/2 experts are close to random") {
  Rng rng(9);
  const PerlinBandit truth = sample_bandit(4, 5, rng);
  PanelOptions o;
  const ExpertPanel p = make_panel(ConfigKind::Homogeneous, 0.5, 3, truth, o, rng);
  const auto xs = sample_contexts(1024, rng);
  const double base = random_policy_mean(truth, xs);
  for (const Expert& e : p.experts) CHECK(std::abs(expert_expected_reward(e, truth, xs, rng) - base) <= 0.1);
}
