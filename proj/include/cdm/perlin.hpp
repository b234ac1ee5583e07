#pragma once

// Perlin-noise contextual bandits over the unit square.
//
// Each arm owns a side x side lattice of unit gradient vectors. A context
// x in [0,1]^2 is mapped onto lattice coordinates [0, side-1]^2, the four
// surrounding corner gradients are dotted with the offset to x, and the dot
// products are blended with the quintic fade 6t^5 - 15t^4 + 10t^3. The raw
// value lies in [-sqrt(2)/2, sqrt(2)/2] and is mapped affinely to [0,1].

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "cdm/rng.hpp"

namespace cdm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Context {
  double x0 = 0.0;
  double x1 = 0.0;
};

inline constexpr std::size_t kDefaultGridSide = 5;
inline constexpr std::size_t kDefaultDistanceSamples = 1024;

class VectorGrid {
 public:
  VectorGrid(std::size_t side, std::vector<Vec2> vectors);

  static VectorGrid random(std::size_t side, Rng& rng);
  static VectorGrid from_angles(std::size_t side, std::span<const double> angles);

  std::size_t side() const { return side_; }
  const std::vector<Vec2>& vectors() const { return vectors_; }
  /// Gradient at lattice column i (along x0) and row j (along x1).
  const Vec2& at(std::size_t i, std::size_t j) const { return vectors_[j * side_ + i]; }

  std::vector<double> angles() const;
  VectorGrid negated() const;

  friend bool operator==(const VectorGrid&, const VectorGrid&) = default;

 private:
  std::size_t side_;
  std::vector<Vec2> vectors_;
};

/// Quintic smoothstep used to blend corner contributions.
double perlin_fade(double t);

/// Raw Perlin value in [-sqrt(2)/2, sqrt(2)/2]; x must be in the unit square.
double raw_landscape_value(const VectorGrid& grid, Context x);

/// Expected reward of the landscape at x, in [0,1].
double landscape_value(const VectorGrid& grid, Context x);

class PerlinBandit {
 public:
  explicit PerlinBandit(std::vector<VectorGrid> arms);

  std::size_t arm_count() const { return arms_.size(); }
  std::size_t grid_side() const { return arms_.front().side(); }
  static constexpr std::size_t context_dim() { return 2; }

  const VectorGrid& arm(std::size_t k) const { return arms_.at(k); }
  const std::vector<VectorGrid>& arms() const { return arms_; }

  double value(std::size_t k, Context x) const;
  /// Writes f_k(x) for every arm into out (size K).
  void values(Context x, std::span<double> out) const;
  std::vector<double> values(Context x) const;

  friend bool operator==(const PerlinBandit&, const PerlinBandit&) = default;

 private:
  std::vector<VectorGrid> arms_;
};

PerlinBandit sample_bandit(std::size_t arm_count, std::size_t grid_side, Rng& rng);

/// Bernoulli reward with success probability landscape_value(arm k, x).
int pull(const PerlinBandit& bandit, std::size_t k, Context x, Rng& rng);
/// Same trial driven by an externally supplied uniform u in [0,1).
int pull_with_uniform(const PerlinBandit& bandit, std::size_t k, Context x, double u);

Context sample_context(Rng& rng);
std::vector<Context> sample_contexts(std::size_t n, Rng& rng);

/// Wrapped-Cauchy angle with location `mean` and concentration `rho`, in [0, 2pi).
double sample_wrapped_cauchy(double mean, double rho, Rng& rng);

/// Rotates every gradient by mean + theta, theta ~ wrapped Cauchy(rho = scale).
VectorGrid rotate_grid(const VectorGrid& grid, double mean, double scale, Rng& rng);
PerlinBandit rotate_bandit(const PerlinBandit& bandit, double mean, double scale, Rng& rng);

PerlinBandit invert_bandit(const PerlinBandit& bandit);

/// Mean over contexts of (1/K) sum_k (f_k^a(x) - f_k^b(x))^2.
double bandit_distance(const PerlinBandit& a, const PerlinBandit& b,
                       std::span<const Context> contexts);
double bandit_distance(const PerlinBandit& a, const PerlinBandit& b, std::size_t n_samples,
                       Rng& rng);

/// bandit_distance(a, b) / bandit_distance(a, invert(a)) on one shared sample.
double scaled_distance(const PerlinBandit& a, const PerlinBandit& b,
                       std::span<const Context> contexts);
double scaled_distance(const PerlinBandit& a, const PerlinBandit& b, std::size_t n_samples,
                       Rng& rng);

/// Pearson correlation of pooled arm values over the contexts.
double value_pcc(const PerlinBandit& a, const PerlinBandit& b,
                 std::span<const Context> contexts);
double value_pcc(const PerlinBandit& a, const PerlinBandit& b, std::size_t n_samples, Rng& rng);

class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, double best_achieved)
      : std::runtime_error(what), best_achieved_(best_achieved) {}
  double best_achieved() const { return best_achieved_; }

 private:
  double best_achieved_;
};

struct CalibratedBandit {
  PerlinBandit bandit;
  double achieved = 0.0;   // scaled distance measured on the calibration sample
  double scale = 1.0;      // wrapped-Cauchy concentration of the accepted probe
  double rotation_mean = 0.0;
  int probes = 0;
};

inline constexpr int kCalibrationMaxIterations = 40;

/// Rotates `base` until its scaled distance to `base` is within tol of delta.
/// Throws CalibrationError after kCalibrationMaxIterations probes.
CalibratedBandit calibrate_bias(const PerlinBandit& base, double delta, double tol, Rng& rng,
                                std::size_t n_samples = kDefaultDistanceSamples);

// Snapshots store every gradient as an angle in radians.
nlohmann::json to_json(const PerlinBandit& bandit);
PerlinBandit bandit_from_json(const nlohmann::json& j);

}  // namespace cdm
