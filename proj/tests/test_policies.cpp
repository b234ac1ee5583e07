#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "cdm/policies.hpp"

using namespace cdm;

namespace {

AdviceSet make_advice(std::initializer_list<std::initializer_list<double>> rows) {
  AdviceSet a;
  a.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) a.values(i, j++) = v;
    ++i;
  }
  return a;
}

ConfidenceMatrix constant_rows(const std::vector<double>& c, std::size_t arms) {
  ConfidenceMatrix m(static_cast<Eigen::Index>(c.size()), static_cast<Eigen::Index>(arms));
  for (std::size_t n = 0; n < c.size(); ++n) m.row(static_cast<Eigen::Index>(n)).setConstant(c[n]);
  return m;
}

double chi_square(const std::vector<int>& counts, double expected) {
  double s = 0.0;
  for (int c : counts) s += (c - expected) * (c - expected) / expected;
  return s;
}

}  // namespace

TEST_CASE("WMV hand example") {
  AdviceSet a = make_advice({{0.2, 0.8}, {0.7, 0.3}});
  a.confidence = constant_rows({0.9, 0.6}, 2);
  const auto s = wmv_scores(a);
  CHECK(s[0] == doctest::Approx(0.723).epsilon(1e-3));
  CHECK(s[1] == doctest::Approx(1.879).epsilon(1e-3));
  Rng rng(1);
  CHECK(wmv_select(a, rng) == 1);
}

TEST_CASE("WMV weights follow the sign of the logit") {
  Rng rng(2);
  AdviceSet a = make_advice({{0.1, 0.9, 0.4}});
  a.confidence = constant_rows({0.8}, 3);
  CHECK(wmv_select(a, rng) == 1);
  a.confidence = constant_rows({0.2}, 3);
  CHECK(wmv_select(a, rng) == 0);

  // Confidence 0.5 gives zero weights: uniform choice.
  AdviceSet z = make_advice({{0.1, 0.9, 0.4}, {0.5, 0.3, 0.2}});
  z.confidence = constant_rows({0.5, 0.5}, 3);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 9000; ++i) ++counts[wmv_select(z, rng)];
  CHECK(chi_square(counts, 3000) < 9.21);

  // Clamping keeps 0 and 1 finite.
  AdviceSet e = make_advice({{0.1, 0.9}, {0.9, 0.1}});
  e.confidence = constant_rows({1.0, 0.0}, 2);
  for (double s : wmv_scores(e)) CHECK(std::isfinite(s));
  CHECK(wmv_select(e, rng) == 1);

  // Without confidence every expert votes with weight one.
  AdviceSet plain = make_advice({{0.1, 0.6}, {0.7, 0.3}});
  const auto s = wmv_scores(plain);
  CHECK(s[0] == doctest::Approx(0.8));
  CHECK(s[1] == doctest::Approx(0.9));
}

TEST_CASE("WMV is invariant under permuting experts") {
  AdviceSet a = make_advice({{0.2, 0.5, 0.3}, {0.6, 0.1, 0.9}, {0.3, 0.3, 0.8}});
  a.confidence = constant_rows({0.7, 0.3, 0.9}, 3);
  AdviceSet b = make_advice({{0.3, 0.3, 0.8}, {0.2, 0.5, 0.3}, {0.6, 0.1, 0.9}});
  b.confidence = constant_rows({0.9, 0.7, 0.3}, 3);
  const auto sa = wmv_scores(a), sb = wmv_scores(b);
  for (int k = 0; k < 3; ++k) CHECK(sa[k] == doctest::Approx(sb[k]));
}

TEST_CASE("EXP4.P probabilities") {
  Exp4p e(2, 2, 100);
  Eigen::MatrixXd d(2, 2);
  d << 1, 0, 0, 1;
  const auto p = e.probabilities(d, nullptr);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(e.gamma() == doctest::Approx(std::sqrt(std::log(2.0) / 200)));

  Exp4p three(3, 4, 100);
  Eigen::VectorXd w(3);
  w << 1.0, 1.5, 0.5;
  three.set_log_weights(w);
  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(3, 4, 0.25);
  for (double v : three.probabilities(uniform, nullptr)) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  w << 500.0, 0.0, 0.0;
  three.set_log_weights(w);
  Eigen::MatrixXd mixed(3, 4);
  mixed << 0.1, 0.2, 0.3, 0.4, 0.25, 0.25, 0.25, 0.25, 0.7, 0.1, 0.1, 0.1;
  const auto sat = three.probabilities(mixed, nullptr);
  for (int k = 0; k < 4; ++k) CHECK(sat[k] == doctest::Approx(mixed(0, k)).epsilon(1e-9));

  w << std::nan(""), 0.0, 0.0;
  three.set_log_weights(w);
  CHECK_THROWS_AS(three.probabilities(mixed, nullptr), NumericError);
}

TEST_CASE("EXP4.P update against a longhand evaluation") {
  const double gamma = std::sqrt(std::log(2.0) / (2.0 * 10));
  Exp4p e(2, 2, 10, 0.1, 100);
  Eigen::MatrixXd d(2, 2);
  d << 0.3, 0.7, 0.6, 0.4;
  const std::vector<double> p{0.45, 0.55};
  e.update(d, p, 1, 1.0);
  const double bonus = std::sqrt(std::log(2.0 / 0.1) / 20);
  for (int n = 0; n < 2; ++n) {
    const double y = d(n, 1) * 1.0 / 0.55;
    const double v = d(n, 0) / 0.45 + d(n, 1) / 0.55;
    CHECK(std::abs(e.log_weights()[n] - (1 + gamma / 2 * (y + v * bonus))) < 1e-12);
  }

  // Zero reward moves the weights through the exploration bonus alone.
  Exp4p z(2, 2, 10);
  z.update(d, p, 0, 0.0);
  for (int n = 0; n < 2; ++n) {
    const double v = d(n, 0) / 0.45 + d(n, 1) / 0.55;
    CHECK(std::abs(z.log_weights()[n] - (1 + gamma / 2 * v * bonus)) < 1e-12);
  }

  // Identical rows receive identical increments.
  Eigen::MatrixXd same(2, 2);
  same << 0.2, 0.8, 0.2, 0.8;
  Exp4p s(2, 2, 10);
  s.update(same, p, 1, 1.0);
  CHECK(s.log_weights()[0] == s.log_weights()[1]);

  CHECK_THROWS_AS(s.update(same, std::vector<double>{1.0, 0.0}, 1, 1.0), NumericError);
}

TEST_CASE("EXP4.P distributions stay valid and weights normalize") {
  Rng rng(3);
  Exp4p e(5, 4, 200);
  CHECK(e.normalized_weights(4) == std::vector<double>(4, 0.25));
  for (int t = 0; t < 200; ++t) {
    Eigen::MatrixXd raw = Eigen::MatrixXd::NullaryExpr(5, 4, [&] { return uniform01(rng); });
    const Eigen::MatrixXd d = normalize_rows(raw);
    const ConfidenceMatrix c = Eigen::MatrixXd::NullaryExpr(5, 4, [&] { return uniform01(rng); });
    const auto p = e.probabilities(d, &c);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : p) CHECK(v >= 0.0);
    e.update(d, p, sample_from(p, rng), uniform01(rng) < 0.5 ? 1.0 : 0.0);
  }
  const auto w = e.normalized_weights(4);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0));
  for (double v : w) CHECK(v >= 0.0);
}

TEST_CASE("normalize_rows") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 1, 2, 0, 0, 0;
  const Eigen::MatrixXd n = normalize_rows(m);
  CHECK(n(0, 2) == doctest::Approx(0.5));
  CHECK(n(1, 0) == doctest::Approx(1.0 / 3));
}

TEST_CASE("meta-MAB sampling") {
  Rng rng(4);
  MetaMab fresh(4, 0.0);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 10000; ++i) ++counts[fresh.sample_expert(nullptr, rng)];
  CHECK(chi_square(counts, 2500) < 11.34);

  MetaMab strong(4, 0.0);
  strong.set_posterior(2, 100, 1);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += strong.sample_expert(nullptr, rng) == 2;
  CHECK(hits > 9500);

  MetaMab prior(4, 100.0);
  const std::vector<double> c{1.0, 0.0, 0.0, 0.0};
  hits = 0;
  for (int i = 0; i < 10000; ++i) hits += prior.sample_expert(&c, rng) == 0;
  CHECK(hits > 9900);
}

TEST_CASE("meta-MAB follows the chosen expert and updates only it") {
  Rng rng(5);
  MetaMab m(2, 0.0);
  m.set_posterior(0, 1000, 1);
  const AdviceSet a = make_advice({{0.1, 0.8, 0.3}, {0.9, 0.1, 0.1}});
  const auto choice = m.select(a, rng);
  CHECK(choice.expert == 0);
  CHECK(choice.arm == 1);

  MetaMab u(3, 0.0);
  u.update(1, 1.0);
  CHECK(u.alpha()[1] == 2.0);
  CHECK(u.beta()[1] == 1.0);
  u.update(1, 0.0);
  CHECK(u.beta()[1] == 2.0);
  CHECK(u.alpha()[0] == 1.0);

  MetaMab hundred(1, 0.0);
  for (int i = 0; i < 100; ++i) hundred.update(0, 1.0);
  CHECK(hundred.alpha()[0] / (hundred.alpha()[0] + hundred.beta()[0]) == doctest::Approx(101.0 / 102.0));
}

TEST_CASE("meta-contexts") {
  AdviceSet a = make_advice({{0.2, 0.4}, {0.6, 0.8}});
  a.confidence = constant_rows({0.9, 0.3}, 2);
  const Eigen::MatrixXd y = build_meta_contexts(a);
  CHECK(y.rows() == 2);
  CHECK(y.cols() == 5);
  Eigen::VectorXd expect(5);
  expect << 0.4, 0.9, 0.8, 0.3, 1.0;
  CHECK((y.row(1).transpose() - expect).norm() < 1e-15);
  a.confidence.reset();
  CHECK(build_meta_contexts(a).cols() == 3);
  CHECK(meta_context_dim(2, true) == 5);
  const Eigen::VectorXd zero = build_meta_context(Eigen::VectorXd::Zero(3), nullptr);
  CHECK(zero.size() == 4);
  CHECK(zero[3] == 1.0);
  CHECK(zero.head(3).isZero());
}

TEST_CASE("LinUCB closed forms") {
  LinUcb fresh(3);
  Eigen::MatrixXd y(2, 3);
  y << 0.1, 0.2, 1.0, 0.9, 0.8, 1.0;
  const auto s = fresh.scores(y);
  CHECK(s[0] == doctest::Approx(y.row(0).norm()));
  CHECK(s[1] == doctest::Approx(y.row(1).norm()));
  Rng rng(6);
  CHECK(fresh.select(y, rng) == 1);

  LinUcb one(2);
  one.update(Eigen::Vector2d(1, 0), 1.0);
  CHECK(one.theta()[0] == doctest::Approx(0.5));
  CHECK(one.theta()[1] == doctest::Approx(0.0));

  LinUcb idle(2);
  idle.update(Eigen::Vector2d::Zero(), 1.0);
  CHECK(idle.design() == Eigen::Matrix2d::Identity());
  CHECK(idle.response().isZero());
}

TEST_CASE("LinUCB design stays positive definite") {
  Rng rng(7);
  LinUcb m(4, 1.0);
  for (int i = 0; i < 10000; ++i) {
    Eigen::Vector4d y = Eigen::Vector4d::NullaryExpr([&] { return uniform01(rng); });
    m.update(y, uniform01(rng));
  }
  CHECK((m.design() - m.design().transpose()).norm() < 1e-9);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.design());
  CHECK(eig.eigenvalues().minCoeff() >= 1.0 - 1e-9);
}

TEST_CASE("meta-CMAB learns positive and inverted experts") {
  for (bool inverted : {false, true}) {
    Rng rng(inverted ? 8 : 9);
    PolicyParams params;
    params.arms = 4;
    params.experts = 3;
    params.horizon = 3000;
    auto policy = make_policy(Algorithm::MetaCmab, params);
    for (int t = 0; t < 3000; ++t) {
      AdviceSet a;
      a.values = Eigen::MatrixXd::NullaryExpr(3, 4, [&] { return uniform01(rng); });
      const std::size_t arm = policy->select(a, rng);
      const double f = a.values(0, static_cast<Eigen::Index>(arm));
      policy->update(a, arm, inverted ? 1.0 - f : f);
    }
    const auto w = policy->weights_snapshot();
    if (inverted) {
      CHECK(w[0] < -0.8);
    } else {
      CHECK(w[0] > 0.8);
    }
    int agree = 0;
    for (int t = 0; t < 400; ++t) {
      AdviceSet a;
      a.values = Eigen::MatrixXd::NullaryExpr(3, 4, [&] { return uniform01(rng); });
      Eigen::Index best;
      if (inverted) a.values.row(0).minCoeff(&best);
      else a.values.row(0).maxCoeff(&best);
      agree += policy->select(a, rng) == static_cast<std::size_t>(best);
    }
    CHECK(agree >= 380);
  }
}

TEST_CASE("LinUCB selection is invariant to rescaling one feature") {
  // Exact only without the ridge term, so use a vanishing one.
  Rng rng(10);
  LinUcb a(3, 1e-12), b(3, 1e-12);
  const double s = 3.5;
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector3d y(uniform01(rng), uniform01(rng), 1.0);
    const double r = uniform01(rng);
    a.update(y, r);
    y[0] *= s;
    b.update(y, r);
  }
  CHECK(b.theta()[0] * s == doctest::Approx(a.theta()[0]).epsilon(1e-9));
  Eigen::MatrixXd ya = Eigen::MatrixXd::NullaryExpr(5, 3, [&] { return uniform01(rng); });
  Eigen::MatrixXd yb = ya;
  yb.col(0) *= s;
  const auto sa = a.scores(ya), sb = b.scores(yb);
  for (int k = 0; k < 5; ++k) CHECK(std::abs(sa[k] - sb[k]) < 1e-9);

  // With the default ridge the learned weight shifts slightly.
  LinUcb c(3), d(3);
  Rng again(10);
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector3d y(uniform01(again), uniform01(again), 1.0);
    const double r = uniform01(again);
    c.update(y, r);
    y[0] *= s;
    d.update(y, r);
  }
  CHECK(std::abs(d.theta()[0] * s - c.theta()[0]) > 1e-6);
}

TEST_CASE("policies through the common interface") {
  PolicyParams params;
  params.arms = 3;
  params.experts = 2;
  params.horizon = 50;
  for (Algorithm alg : kAllAlgorithms) {
    Rng r1(11), r2(11);
    auto p1 = make_policy(alg, params);
    auto p2 = make_policy(alg, params);
    CHECK(p1->algorithm() == alg);
    Rng adv(12);
    for (int t = 0; t < 50; ++t) {
      AdviceSet a;
      a.values = Eigen::MatrixXd::NullaryExpr(2, 3, [&] { return uniform01(adv); });
      const std::size_t k1 = p1->select(a, r1);
      const std::size_t k2 = p2->select(a, r2);
      REQUIRE(k1 == k2);
      REQUIRE(k1 < 3);
      p1->update(a, k1, t % 2);
      p2->update(a, k2, t % 2);
    }
    CHECK(p1->weights_snapshot() == p2->weights_snapshot());
  }
  CHECK(to_string(parse_algorithm("metacmab")) == "metacmab");
  CHECK_THROWS(parse_algorithm("exp3"));
}

TEST_CASE("random policy") {
  Rng rng(13);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 10000; ++i) ++counts[random_policy_select(4, rng)];
  CHECK(chi_square(counts, 2500) < 11.34);
  CHECK(random_policy_select(1, rng) == 0);
}

TEST_CASE("random expert appended to advice") {
  Rng rng(14);
  AdviceSet a = make_advice({{0.2, 0.4}});
  a.confidence = constant_rows({0.9}, 2);
  const AdviceSet b = with_random_expert(a, rng);
  CHECK(b.experts() == 2);
  CHECK((*b.confidence)(1, 0) == 0.5);
  CHECK((*b.confidence)(1, 1) == 0.5);
}
