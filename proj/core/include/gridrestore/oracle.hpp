#pragma once

#include <cstddef>
#include <cstdint>

#include "gridrestore/instance.hpp"

namespace gridrestore {

struct OracleResult {
  double optimum{0.0};              // minimum total cost over all action sequences
  std::size_t optimal_sequences{0};  // sequences within 1e-9 relative of the optimum
  std::size_t leaves{0};             // complete sequences simulated
};

/// Largest problem the brute-force search accepts.
inline constexpr std::size_t kOracleMaxFaults = 3;
inline constexpr std::size_t kOracleMaxCrews = 2;
inline constexpr std::size_t kOracleMaxMegs = 1;

/// Brute-force minimum of the online run's total cost: at every decision
/// epoch every injective crew-to-fault assignment (as many crews as possible
/// get a target) is combined with every MEG move, and each branch is
/// simulated with the same dynamics and estimator as run_online. Requires a
/// deterministic instance: fixed repair times, no forecast noise and no new
/// fault priors. Throws ValidationError otherwise or when the instance
/// exceeds the bounds above.
[[nodiscard]] OracleResult exact_oracle(const Instance& instance, int horizon, std::uint64_t seed = 1);

}  // namespace gridrestore
