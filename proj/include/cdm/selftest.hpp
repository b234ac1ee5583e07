#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cdm {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Invariant checks on tiny instances; finishes in seconds.
std::vector<SelftestCheck> run_selftest(std::uint64_t seed = 0);

}  // namespace cdm
