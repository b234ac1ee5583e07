#include "cdm/perlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/random/cauchy_distribution.hpp>

#include "cdm/metrics.hpp"

namespace cdm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_context(Context x) {
  if (!(x.x0 >= 0.0 && x.x0 <= 1.0 && x.x1 >= 0.0 && x.x1 <= 1.0)) {
    throw std::invalid_argument("context outside the unit square: (" + std::to_string(x.x0) +
                                ", " + std::to_string(x.x1) + ")");
  }
}

Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }

Vec2 normalized(Vec2 v) {
  const double n = std::hypot(v.x, v.y);
  return {v.x / n, v.y / n};
}

}  // namespace

VectorGrid::VectorGrid(std::size_t side, std::vector<Vec2> vectors)
    : side_(side), vectors_(std::move(vectors)) {
  if (side < 2) throw std::invalid_argument("grid side must be at least 2");
  if (vectors_.size() != side * side) {
    throw std::invalid_argument("grid needs side*side vectors");
  }
  for (const Vec2& v : vectors_) {
    if (std::abs(std::hypot(v.x, v.y) - 1.0) > 1e-9) {
      throw std::invalid_argument("grid vectors must have unit norm");
    }
  }
}

VectorGrid VectorGrid::random(std::size_t side, Rng& rng) {
  if (side < 2) throw std::invalid_argument("grid side must be at least 2");
  std::vector<Vec2> v(side * side);
  for (Vec2& g : v) g = unit_from_angle(kTwoPi * uniform01(rng));
  return VectorGrid(side, std::move(v));
}

VectorGrid VectorGrid::from_angles(std::size_t side, std::span<const double> angles) {
  std::vector<Vec2> v;
  v.reserve(angles.size());
  for (double a : angles) v.push_back(unit_from_angle(a));
  return VectorGrid(side, std::move(v));
}

std::vector<double> VectorGrid::angles() const {
  std::vector<double> out;
  out.reserve(vectors_.size());
  for (const Vec2& v : vectors_) out.push_back(std::atan2(v.y, v.x));
  return out;
}

VectorGrid VectorGrid::negated() const {
  std::vector<Vec2> v = vectors_;
  for (Vec2& g : v) g = {-g.x, -g.y};
  return VectorGrid(side_, std::move(v));
}

double perlin_fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double raw_landscape_value(const VectorGrid& grid, Context x) {
  check_context(x);
  const std::size_t last = grid.side() - 1;
  const double u = x.x0 * static_cast<double>(last);
  const double v = x.x1 * static_cast<double>(last);
  const std::size_t i = std::min(static_cast<std::size_t>(u), last - 1);
  const std::size_t j = std::min(static_cast<std::size_t>(v), last - 1);
  const double fx = u - static_cast<double>(i);
  const double fy = v - static_cast<double>(j);

  auto dot = [&](std::size_t ci, std::size_t cj, double dx, double dy) {
    const Vec2& g = grid.at(ci, cj);
    return g.x * dx + g.y * dy;
  };
  const double n00 = dot(i, j, fx, fy);
  const double n10 = dot(i + 1, j, fx - 1.0, fy);
  const double n01 = dot(i, j + 1, fx, fy - 1.0);
  const double n11 = dot(i + 1, j + 1, fx - 1.0, fy - 1.0);

  const double s = perlin_fade(fx);
  const double t = perlin_fade(fy);
  const double bottom = n00 + s * (n10 - n00);
  const double top = n01 + s * (n11 - n01);
  return bottom + t * (top - bottom);
}

double landscape_value(const VectorGrid& grid, Context x) {
  const double raw = raw_landscape_value(grid, x);
  return std::clamp(0.5 + raw / std::numbers::sqrt2, 0.0, 1.0);
}

PerlinBandit::PerlinBandit(std::vector<VectorGrid> arms) : arms_(std::move(arms)) {
  if (arms_.size() < 2) throw std::invalid_argument("a bandit needs at least 2 arms");
  for (const VectorGrid& g : arms_) {
    if (g.side() != arms_.front().side()) {
      throw std::invalid_argument("all arms must share the grid side");
    }
  }
}

double PerlinBandit::value(std::size_t k, Context x) const {
  if (k >= arms_.size()) throw std::invalid_argument("arm index out of range");
  return landscape_value(arms_[k], x);
}

void PerlinBandit::values(Context x, std::span<double> out) const {
  if (out.size() != arms_.size()) throw std::invalid_argument("values: output size != K");
  for (std::size_t k = 0; k < arms_.size(); ++k) out[k] = landscape_value(arms_[k], x);
}

std::vector<double> PerlinBandit::values(Context x) const {
  std::vector<double> out(arms_.size());
  values(x, out);
  return out;
}

PerlinBandit sample_bandit(std::size_t arm_count, std::size_t grid_side, Rng& rng) {
  if (arm_count < 2) throw std::invalid_argument("sample_bandit: K must be >= 2");
  if (grid_side < 2) throw std::invalid_argument("sample_bandit: grid_side must be >= 2");
  std::vector<VectorGrid> arms;
  arms.reserve(arm_count);
  for (std::size_t k = 0; k < arm_count; ++k) arms.push_back(VectorGrid::random(grid_side, rng));
  return PerlinBandit(std::move(arms));
}

int pull_with_uniform(const PerlinBandit& bandit, std::size_t k, Context x, double u) {
  return u < bandit.value(k, x) ? 1 : 0;
}

int pull(const PerlinBandit& bandit, std::size_t k, Context x, Rng& rng) {
  if (k >= bandit.arm_count()) throw std::invalid_argument("pull: arm index out of range");
  return pull_with_uniform(bandit, k, x, uniform01(rng));
}

Context sample_context(Rng& rng) {
  const double a = uniform01(rng);
  const double b = uniform01(rng);
  return {a, b};
}

std::vector<Context> sample_contexts(std::size_t n, Rng& rng) {
  std::vector<Context> out(n);
  for (Context& c : out) c = sample_context(rng);
  return out;
}

double sample_wrapped_cauchy(double mean, double rho, Rng& rng) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("wrapped Cauchy concentration must be in (0,1]");
  }
  const double gamma = -std::log(rho);
  double theta = mean;
  if (gamma > 0.0) theta += boost::random::cauchy_distribution<double>(0.0, gamma)(rng);
  theta = std::fmod(theta, kTwoPi);
  if (theta < 0.0) theta += kTwoPi;
  return theta;
}

VectorGrid rotate_grid(const VectorGrid& grid, double mean, double scale, Rng& rng) {
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw std::invalid_argument("rotate_grid: scale must be in (0,1]");
  }
  std::vector<Vec2> out;
  out.reserve(grid.vectors().size());
  for (const Vec2& g : grid.vectors()) {
    const double theta = sample_wrapped_cauchy(mean, scale, rng);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    out.push_back(normalized({c * g.x - s * g.y, s * g.x + c * g.y}));
  }
  return VectorGrid(grid.side(), std::move(out));
}

PerlinBandit rotate_bandit(const PerlinBandit& bandit, double mean, double scale, Rng& rng) {
  std::vector<VectorGrid> arms;
  arms.reserve(bandit.arm_count());
  for (const VectorGrid& g : bandit.arms()) arms.push_back(rotate_grid(g, mean, scale, rng));
  return PerlinBandit(std::move(arms));
}

PerlinBandit invert_bandit(const PerlinBandit& bandit) {
  std::vector<VectorGrid> arms;
  arms.reserve(bandit.arm_count());
  for (const VectorGrid& g : bandit.arms()) arms.push_back(g.negated());
  return PerlinBandit(std::move(arms));
}

namespace {

void require_same_arms(const PerlinBandit& a, const PerlinBandit& b) {
  if (a.arm_count() != b.arm_count()) throw std::invalid_argument("arm-count mismatch");
}

// Landscape values of every arm at every context, context-major.
std::vector<double> tabulate(const PerlinBandit& bandit, std::span<const Context> contexts) {
  const std::size_t k = bandit.arm_count();
  std::vector<double> out(contexts.size() * k);
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    bandit.values(contexts[i], std::span<double>(out).subspan(i * k, k));
  }
  return out;
}

double mean_squared_gap(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

// Distance to the inverted bandit: its landscape is exactly 1 - f.
double inverse_gap(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) {
    const double d = 2.0 * v - 1.0;
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double scaled_from_tables(std::span<const double> a, std::span<const double> b) {
  const double denom = inverse_gap(a);
  if (!(denom > 0.0)) throw NumericError("scaled_distance: flat landscape, zero denominator");
  return mean_squared_gap(a, b) / denom;
}

}  // namespace

double bandit_distance(const PerlinBandit& a, const PerlinBandit& b,
                       std::span<const Context> contexts) {
  require_same_arms(a, b);
  if (contexts.empty()) throw std::invalid_argument("bandit_distance: no contexts");
  return mean_squared_gap(tabulate(a, contexts), tabulate(b, contexts));
}

double bandit_distance(const PerlinBandit& a, const PerlinBandit& b, std::size_t n_samples,
                       Rng& rng) {
  require_same_arms(a, b);
  if (n_samples < 1) throw std::invalid_argument("bandit_distance: n_samples must be >= 1");
  const auto contexts = sample_contexts(n_samples, rng);
  return bandit_distance(a, b, contexts);
}

double scaled_distance(const PerlinBandit& a, const PerlinBandit& b,
                       std::span<const Context> contexts) {
  require_same_arms(a, b);
  if (contexts.empty()) throw std::invalid_argument("scaled_distance: no contexts");
  return scaled_from_tables(tabulate(a, contexts), tabulate(b, contexts));
}

double scaled_distance(const PerlinBandit& a, const PerlinBandit& b, std::size_t n_samples,
                       Rng& rng) {
  require_same_arms(a, b);
  if (n_samples < 1) throw std::invalid_argument("scaled_distance: n_samples must be >= 1");
  const auto contexts = sample_contexts(n_samples, rng);
  return scaled_distance(a, b, contexts);
}

double value_pcc(const PerlinBandit& a, const PerlinBandit& b,
                 std::span<const Context> contexts) {
  require_same_arms(a, b);
  return pearson_cc(tabulate(a, contexts), tabulate(b, contexts));
}

double value_pcc(const PerlinBandit& a, const PerlinBandit& b, std::size_t n_samples, Rng& rng) {
  require_same_arms(a, b);
  const auto contexts = sample_contexts(n_samples, rng);
  return value_pcc(a, b, contexts);
}

CalibratedBandit calibrate_bias(const PerlinBandit& base, double delta, double tol, Rng& rng,
                                std::size_t n_samples) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("calibrate_bias: delta not in [0,1]");
  if (!(tol > 0.0)) throw std::invalid_argument("calibrate_bias: tol must be > 0");

  // Mean-zero noise saturates near d = 0.5, so far targets start from the
  // inverted bandit and add noise back toward it.
  const bool flipped = delta > 0.5;
  const double mean = flipped ? std::numbers::pi : 0.0;

  const auto contexts = sample_contexts(n_samples, rng);
  const auto truth = tabulate(base, contexts);
  const double denom = inverse_gap(truth);
  if (!(denom > 0.0)) throw NumericError("calibrate_bias: flat landscape");

  // Distance falls as rho grows under mean 0 and rises under mean pi.
  double lo = 0.0;
  double hi = 1.0;
  double best_gap = std::numeric_limits<double>::infinity();
  double best_achieved = std::numeric_limits<double>::quiet_NaN();
  for (int probe = 1; probe <= kCalibrationMaxIterations; ++probe) {
    const double rho = 0.5 * (lo + hi);
    PerlinBandit candidate = rotate_bandit(base, mean, rho, rng);
    const double achieved = mean_squared_gap(truth, tabulate(candidate, contexts)) / denom;
    const double gap = std::abs(achieved - delta);
    if (gap < best_gap) {
      best_gap = gap;
      best_achieved = achieved;
    }
    if (gap <= tol) return {std::move(candidate), achieved, rho, mean, probe};
    const bool too_far = achieved > delta;
    if (too_far != flipped) {
      lo = rho;
    } else {
      hi = rho;
    }
  }
  throw CalibrationError("calibrate_bias: no probe within " + std::to_string(tol) + " of " +
                             std::to_string(delta) + " (best " + std::to_string(best_achieved) + ")",
                         best_achieved);
}

nlohmann::json to_json(const PerlinBandit& bandit) {
  nlohmann::json arms = nlohmann::json::array();
  for (const VectorGrid& g : bandit.arms()) arms.push_back(g.angles());
  return {{"grid_side", bandit.grid_side()}, {"arms", std::move(arms)}};
}

PerlinBandit bandit_from_json(const nlohmann::json& j) {
  const auto side = j.at("grid_side").get<std::size_t>();
  std::vector<VectorGrid> arms;
  for (const auto& a : j.at("arms")) {
    const auto angles = a.get<std::vector<double>>();
    arms.push_back(VectorGrid::from_angles(side, angles));
  }
  return PerlinBandit(std::move(arms));
}

}  // namespace cdm
