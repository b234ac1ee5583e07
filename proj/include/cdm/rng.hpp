#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace cdm {

// mt19937_64 is fully specified by the standard and the distributions we use
// come from Boost.Random, so a given seed yields the same draws everywhere.
using Rng = std::mt19937_64;

/// Raised when a computation leaves the finite reals or a system is singular.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stream tags used by seed derivation. Values are part of the on-disk
/// reproducibility contract; never renumber.
enum class Role : std::uint64_t {
  Truth = 0x7472757468,       // "truth"
  Panel = 0x70616e656c,       // "panel"
  Contexts = 0x63747873,      // "ctxs"
  Policy = 0x706f6c6963,      // "polic"
  Reward = 0x726577,          // "rew"
  Confidence = 0x636f6e66,    // "conf"
  Distance = 0x64697374,      // "dist"
};

std::uint64_t splitmix64(std::uint64_t x);

/// Folds `parts` into `seed` one word at a time with splitmix64 finalisation.
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);

/// Independent stream for (master seed, cell identifiers..., role).
Rng derive_rng(std::uint64_t master_seed, std::initializer_list<std::uint64_t> cell, Role role);

/// Counter-based uniform in [0,1) with 53 bits: a pure function of its key.
double keyed_uniform(std::uint64_t key, std::uint64_t a, std::uint64_t b);

double uniform01(Rng& rng);
std::size_t uniform_index(std::size_t n, Rng& rng);

/// Index of the maximum of `values`; ties broken uniformly at random.
std::size_t argmax_random_tie(std::span<const double> values, Rng& rng);
std::size_t argmin_random_tie(std::span<const double> values, Rng& rng);

}  // namespace cdm
