#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cdm/metrics.hpp"
#include "cdm/perlin.hpp"

using namespace cdm;

namespace {

// Straight-line Perlin evaluation, written independently of the library.
double reference_value(const std::vector<double>& angles, int side, double x0, double x1) {
  const double u = x0 * (side - 1);
  const double v = x1 * (side - 1);
  const int i = std::min(static_cast<int>(std::floor(u)), side - 2);
  const int j = std::min(static_cast<int>(std::floor(v)), side - 2);
  const double tx = u - i;
  const double ty = v - j;
  auto dot = [&](int ci, int cj, double dx, double dy) {
    const double a = angles[cj * side + ci];
    return std::cos(a) * dx + std::sin(a) * dy;
  };
  const double n00 = dot(i, j, tx, ty);
  const double n10 = dot(i + 1, j, tx - 1, ty);
  const double n01 = dot(i, j + 1, tx, ty - 1);
  const double n11 = dot(i + 1, j + 1, tx - 1, ty - 1);
  auto fade = [](double t) { return t * t * t * (t * (t * 6 - 15) + 10); };
  const double sx = fade(tx), sy = fade(ty);
  const double a = n00 + sx * (n10 - n00);
  const double b = n01 + sx * (n11 - n01);
  const double raw = a + sy * (b - a);
  return std::clamp(0.5 + raw / std::sqrt(2.0), 0.0, 1.0);
}

double kuiper_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double dp = 0.0, dm = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dp = std::max(dp, (i + 1) / n - u[i]);
    dm = std::max(dm, u[i] - i / n);
  }
  return (dp + dm) * std::sqrt(n);
}

}  // namespace

TEST_CASE("sample_bandit shape, unit norms and determinism") {
  Rng r1(1);
  const PerlinBandit b = sample_bandit(4, 5, r1);
  CHECK(b.arm_count() == 4);
  for (const auto& g : b.arms()) CHECK(g.vectors().size() == 25);

  Rng r7(7);
  const PerlinBandit big = sample_bandit(32, 5, r7);
  for (const auto& g : big.arms()) {
    for (const Vec2& v : g.vectors()) CHECK(std::abs(std::hypot(v.x, v.y) - 1.0) < 1e-9);
  }
  Rng again(1);
  CHECK(sample_bandit(4, 5, again) == b);

  Rng rng(0);
  CHECK_THROWS_AS(sample_bandit(1, 5, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_bandit(4, 1, rng), std::invalid_argument);
}

TEST_CASE("landscape matches an independent evaluation") {
  Rng rng(11);
  const VectorGrid g = VectorGrid::random(5, rng);
  const auto angles = g.angles();
  for (int i = 0; i < 500; ++i) {
    const Context x = sample_context(rng);
    CHECK(landscape_value(g, x) == doctest::Approx(reference_value(angles, 5, x.x0, x.x1)).epsilon(1e-12));
  }
  // Constant (1,0) field midway between two lattice columns.
  const std::vector<double> zeros(25, 0.0);
  const VectorGrid flat = VectorGrid::from_angles(5, zeros);
  const Context mid{0.125, 0.3};
  CHECK(std::abs(landscape_value(flat, mid) - reference_value(zeros, 5, 0.125, 0.3)) < 1e-12);
}

TEST_CASE("lattice points give 0.5 and values stay in [0,1]") {
  Rng rng(2);
  const VectorGrid g = VectorGrid::random(5, rng);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) CHECK(landscape_value(g, {i / 4.0, j / 4.0}) == doctest::Approx(0.5).epsilon(1e-12));
  }
  for (int i = 0; i < 2000; ++i) {
    const double v = landscape_value(g, sample_context(rng));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(landscape_value(g, {-0.01, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(landscape_value(g, {0.5, 1.01}), std::invalid_argument);
  CHECK(perlin_fade(0.0) == 0.0);
  CHECK(perlin_fade(1.0) == 1.0);
  CHECK(perlin_fade(0.5) == doctest::Approx(0.5));
}

TEST_CASE("pull is a Bernoulli trial on the landscape value") {
  Rng rng(3);
  const PerlinBandit b = sample_bandit(3, 5, rng);
  const Context x{0.37, 0.81};
  const double p = b.value(1, x);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += pull(b, 1, x, rng);
  CHECK(std::abs(hits / 10000.0 - p) <= 3 * std::sqrt(p * (1 - p) / 10000));
  CHECK_THROWS_AS(pull(b, 3, x, rng), std::invalid_argument);
  CHECK(pull_with_uniform(b, 0, x, 0.0) == (b.value(0, x) > 0.0 ? 1 : 0));
  CHECK(pull_with_uniform(b, 0, x, 0.999999999) == 0);
}

TEST_CASE("rotation limits") {
  Rng rng(4);
  const VectorGrid g = VectorGrid::random(5, rng);
  const VectorGrid same = rotate_grid(g, 0.0, 1.0 - 1e-12, rng);
  const VectorGrid flipped = rotate_grid(g, std::numbers::pi, 1.0 - 1e-12, rng);
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(std::abs(same.vectors()[i].x - g.vectors()[i].x) < 1e-6);
    CHECK(std::abs(same.vectors()[i].y - g.vectors()[i].y) < 1e-6);
    CHECK(std::abs(flipped.vectors()[i].x + g.vectors()[i].x) < 1e-6);
    CHECK(std::abs(flipped.vectors()[i].y + g.vectors()[i].y) < 1e-6);
  }
  CHECK_THROWS_AS(rotate_grid(g, 0.0, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(rotate_grid(g, 0.0, 1.5, rng), std::invalid_argument);
}

TEST_CASE("wrapped Cauchy: uniform as rho -> 0, concentrated with mean resultant rho") {
  Rng rng(5);
  std::vector<double> u(10000);
  for (double& a : u) a = sample_wrapped_cauchy(0.0, 1e-12, rng) / (2 * std::numbers::pi);
  CHECK(kuiper_uniform(u) < 2.0);
  for (double rho : {0.3, 0.7, 0.95}) {
    double c = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) c += std::cos(sample_wrapped_cauchy(0.0, rho, rng));
    CHECK(c / n == doctest::Approx(rho).epsilon(0.03));
  }
}

TEST_CASE("inversion") {
  Rng rng(6);
  const PerlinBandit b = sample_bandit(4, 5, rng);
  const PerlinBandit inv = invert_bandit(b);
  CHECK(invert_bandit(inv) == b);
  for (int i = 0; i < 100; ++i) {
    const Context x = sample_context(rng);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(inv.value(k, x) - (1 - b.value(k, x))) < 1e-9);
  }
  const auto xs = sample_contexts(512, rng);
  CHECK(scaled_distance(b, inv, xs) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(value_pcc(b, inv, xs) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("distances") {
  Rng rng(7);
  const PerlinBandit a = sample_bandit(4, 5, rng);
  const PerlinBandit b = sample_bandit(4, 5, rng);
  const auto xs = sample_contexts(1024, rng);
  CHECK(bandit_distance(a, a, xs) == 0.0);
  CHECK(scaled_distance(a, a, xs) == 0.0);
  CHECK(value_pcc(a, a, xs) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bandit_distance(a, b, xs) == bandit_distance(b, a, xs));
  const double d = scaled_distance(a, b, xs);
  CHECK(d >= 0.0);
  CHECK(d <= 1.1);
  CHECK_THROWS_AS(bandit_distance(a, sample_bandit(3, 5, rng), xs), std::invalid_argument);

  // Independent bandits sit at scaled distance 0.5 on average.
  std::vector<double> ds;
  for (int i = 0; i < 200; ++i) {
    const PerlinBandit p = sample_bandit(4, 5, rng);
    const PerlinBandit q = sample_bandit(4, 5, rng);
    ds.push_back(scaled_distance(p, q, 512, rng));
  }
  CHECK(std::abs(mean_std(ds).mean - 0.5) <= 0.05);
}

TEST_CASE("flat landscapes are rejected by scaled distance") {
  const std::vector<double> zeros(4, 0.0);
  const PerlinBandit flat({VectorGrid::from_angles(2, zeros), VectorGrid::from_angles(2, zeros)});
  // Only lattice corners: every value is exactly 0.5.
  const std::vector<Context> corners{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  CHECK_THROWS_AS(scaled_distance(flat, flat, corners), NumericError);
}

TEST_CASE("calibration") {
  Rng rng(8);
  const PerlinBandit base = sample_bandit(4, 5, rng);
  const auto zero = calibrate_bias(base, 0.0, 0.02, rng);
  CHECK(zero.achieved <= 0.02);
  const auto one = calibrate_bias(base, 1.0, 0.02, rng);
  CHECK(one.achieved >= 0.98);
  const auto half = calibrate_bias(base, 0.5, 0.02, rng);
  CHECK(half.achieved >= 0.48);
  CHECK(half.achieved <= 0.52);
  CHECK(half.probes <= kCalibrationMaxIterations);
  // Re-measured on fresh contexts the distance stays close to the target.
  CHECK(std::abs(scaled_distance(base, half.bandit, 8192, rng) - 0.5) < 0.05);
  for (double delta : {1.0 / 6, 2.0 / 6, 4.0 / 6, 5.0 / 6}) {
    CHECK(std::abs(calibrate_bias(base, delta, 0.02, rng).achieved - delta) <= 0.02);
  }
  CHECK_THROWS_AS(calibrate_bias(base, 0.5, 0.0, rng), std::invalid_argument);
}

TEST_CASE("binned PCC falls with distance") {
  Rng rng(9);
  std::vector<double> d, p;
  for (int i = 0; i < 300; ++i) {
    const PerlinBandit a = sample_bandit(4, 5, rng);
    const double mean = uniform01(rng) < 0.5 ? 0.0 : std::numbers::pi;
    const PerlinBandit b = rotate_bandit(a, mean, 1.0 - uniform01(rng), rng);
    const auto xs = sample_contexts(256, rng);
    d.push_back(scaled_distance(a, b, xs));
    p.push_back(value_pcc(a, b, xs));
  }
  CHECK(linear_fit(d, p).slope < 0.0);
  std::vector<double> mid;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::abs(d[i] - 0.5) < 0.05) mid.push_back(p[i]);
  }
  REQUIRE(mid.size() >= 3);
  CHECK(std::abs(mean_std(mid).mean) < 0.2);
}

TEST_CASE("json round trip") {
  Rng rng(10);
  const PerlinBandit b = sample_bandit(3, 5, rng);
  const PerlinBandit back = bandit_from_json(to_json(b));
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 25; ++i) {
      CHECK(std::abs(back.arm(k).vectors()[i].x - b.arm(k).vectors()[i].x) < 1e-12);
      CHECK(std::abs(back.arm(k).vectors()[i].y - b.arm(k).vectors()[i].y) < 1e-12);
    }
  }
}
