#pragma once

#include <cstdint>
#include <string>

namespace ctfvault::testing {

struct LifecycleOutcome {
  std::size_t sequences = 0;
  std::size_t operations = 0;
  std::size_t transitions = 0;
  std::size_t illegal_transitions = 0;
  std::size_t model_mismatches = 0;
  std::string first_problem;

  [[nodiscard]] bool clean() const noexcept { return illegal_transitions == 0 && model_mismatches == 0; }
};

/// Runs `sequences` random operation sequences (launch, stop, stop again,
/// stop unknown, injected driver failures) against InstanceManager on the
/// local driver and compares every outcome with a three-state model.
LifecycleOutcome run_lifecycle_model_check(std::size_t sequences, std::uint64_t seed);

}  // namespace ctfvault::testing
