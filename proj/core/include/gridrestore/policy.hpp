#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "gridrestore/dynamics.hpp"
#include "gridrestore/loadloss.hpp"

namespace gridrestore {

/// Joint crew assignment with its load-recovery-rate index ($ per period of travel+repair).
struct CrewAssignment {
  CrewTargets targets;  // sorted by crew id
  double index_value{0.0};

  friend bool operator==(const CrewAssignment&, const CrewAssignment&) = default;
};

/// Joint MEG relocation with its load-loss-variation index ($ per period).
struct MegAssignment {
  MegTargets targets;  // sorted by MEG id; a MEG mapped to its current bus stays
  double index_value{0.0};

  friend bool operator==(const MegAssignment&, const MegAssignment&) = default;
};

/// Joint assignments are enumerated exhaustively up to this many; beyond it a
/// beam of this width builds them one unit at a time.
inline constexpr std::size_t kEnumerationCap = 10'000;

/// Priority-index base policy evaluated at one state. Holds the state by
/// reference, memoizes load-loss values per fault subset and uses the storage
/// plan of the state's own dispatch for every index evaluation.
class PriorityPolicy {
 public:
  PriorityPolicy(LoadLossEstimator& estimator, const SystemState& state);

  /// Crews able to take a new target now and active faults no crew has claimed.
  [[nodiscard]] std::span<const CrewId> free_crews() const { return free_crews_; }
  [[nodiscard]] std::span<const LineId> open_faults() const { return unclaimed_; }
  [[nodiscard]] std::span<const MegId> free_megs() const { return free_megs_; }

  /// Restored load value per average (travel + repair) period of the assigned
  /// crews. Throws ValidationError for an empty candidate.
  [[nodiscard]] double index_clrr(const CrewTargets& candidate);
  /// Load-loss reduction from moving MEGs to the candidate buses.
  [[nodiscard]] double index_dl(const MegTargets& candidate);

  /// Load-loss value with the given lines still faulted and MEGs at their current positions.
  [[nodiscard]] double lv_with_faults(std::span<const LineId> faults);
  [[nodiscard]] double current_lv() { return lv_with_faults(active_); }

  /// Candidates sorted by decreasing index (ties: lexicographic targets), at most `k_a`.
  [[nodiscard]] std::vector<CrewAssignment> crew_candidates(std::size_t k_a);
  /// Candidates sorted by decreasing index (ties: fewer relocations, then lexicographic), at most `k_a`.
  [[nodiscard]] std::vector<MegAssignment> meg_candidates(std::size_t k_a);

  [[nodiscard]] CrewAssignment base_crew_targets() { return crew_candidates(1).front(); }
  [[nodiscard]] MegAssignment base_meg_targets() { return meg_candidates(1).front(); }

  [[nodiscard]] std::span<const double> storage_plan() const { return storage_plan_; }

 private:
  struct FaultKey {
    std::uint64_t lo{0};
    std::uint64_t hi{0};
    friend bool operator==(const FaultKey&, const FaultKey&) = default;
  };
  struct FaultKeyHash {
    std::size_t operator()(const FaultKey& k) const noexcept { return k.lo * 0x9E3779B97F4A7C15ull ^ k.hi; }
  };

  double lv_without(std::span<const LineId> repaired);
  double crew_denominator(const CrewTargets& candidate);
  double clrr_unchecked(const CrewTargets& candidate);
  double meg_lv(const MegTargets& candidate);
  CrewTargets crew_targets_of(std::span<const int> choice) const;
  MegTargets meg_targets_of(std::span<const int> choice) const;
  void crew_targets_of(std::span<const int> choice, CrewTargets& out) const;
  void meg_targets_of(std::span<const int> choice, MegTargets& out) const;

  LoadLossEstimator* estimator_;
  const SystemState* state_;
  std::vector<LineId> active_;
  std::vector<CrewId> free_crews_;
  std::vector<LineId> unclaimed_;
  std::vector<MegId> free_megs_;
  std::vector<MegInjection> current_megs_;
  std::vector<double> storage_plan_;
  std::unordered_map<FaultKey, double, FaultKeyHash> memo_;
  std::uint64_t repairs_token_{0};  // estimator preparation holding this state's faults
  std::vector<MegInjection> scratch_megs_;
  CrewTargets scratch_crew_targets_;
  MegTargets scratch_meg_targets_;
  LineStatusMap meg_status_;
  bool meg_status_ready_{false};
  std::optional<double> base_meg_lv_;
  std::optional<double> lv_before_repairs_;
  std::vector<double> crew_terms_;  // travel plus repair periods per crew and line, -1 until computed
  std::vector<double> scratch_terms_;
  std::vector<LineId> scratch_lines_;
};

/// One-shot wrappers around PriorityPolicy.
[[nodiscard]] double index_clrr(const Network& network, const SystemState& state, const CrewTargets& candidate,
                                const LossSettings& settings);
[[nodiscard]] double index_dl(const Network& network, const SystemState& state, const MegTargets& candidate,
                              const LossSettings& settings);
[[nodiscard]] CrewAssignment base_crew_targets(const Network& network, const SystemState& state,
                                               const LossSettings& settings);
[[nodiscard]] MegAssignment base_meg_targets(const Network& network, const SystemState& state,
                                             const LossSettings& settings);
[[nodiscard]] std::vector<CrewAssignment> reduced_action_set_crews(const Network& network, const SystemState& state,
                                                                   const LossSettings& settings, std::size_t k_a);
[[nodiscard]] std::vector<MegAssignment> reduced_action_set_megs(const Network& network, const SystemState& state,
                                                                 const LossSettings& settings, std::size_t k_a);

}  // namespace gridrestore
