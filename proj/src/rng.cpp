#include "cdm/rng.hpp"

#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace cdm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

Rng derive_rng(std::uint64_t master_seed, std::initializer_list<std::uint64_t> cell, Role role) {
  std::uint64_t h = mix_seed(master_seed, cell);
  h = splitmix64(h ^ static_cast<std::uint64_t>(role));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(splitmix64(h)),
                    static_cast<std::uint32_t>(splitmix64(h) >> 32)};
  return Rng(seq);
}

double keyed_uniform(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(key ^ splitmix64(a ^ splitmix64(b + 0x1d8e4e27c47d124fULL)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double uniform01(Rng& rng) {
  return boost::random::uniform_01<double>{}(rng);
}

std::size_t uniform_index(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

namespace {

template <typename Better>
std::size_t pick_extreme(std::span<const double> values, Rng& rng, Better better) {
  if (values.empty()) throw std::invalid_argument("argmax over empty range");
  double best = values[0];
  std::size_t count = 1;
  std::size_t chosen = 0;
  // Reservoir sampling over the tied set keeps a single pass.
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (better(values[i], best)) {
      best = values[i];
      chosen = i;
      count = 1;
    } else if (values[i] == best) {
      ++count;
      if (uniform_index(count, rng) == 0) chosen = i;
    }
  }
  return chosen;
}

}  // namespace

std::size_t argmax_random_tie(std::span<const double> values, Rng& rng) {
  return pick_extreme(values, rng, [](double a, double b) { return a > b; });
}

std::size_t argmin_random_tie(std::span<const double> values, Rng& rng) {
  return pick_extreme(values, rng, [](double a, double b) { return a < b; });
}

}  // namespace cdm
