#include "gridrestore/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridrestore/dynamics.hpp"
#include "gridrestore/errors.hpp"
#include "gridrestore/loadloss.hpp"
#include "gridrestore/rollout.hpp"
#include "gridrestore/scenario.hpp"

namespace gridrestore {

namespace {

class Search {
 public:
  Search(const Instance& instance, int horizon, const Scenario& truth)
      : network_(instance.network),
        settings_{instance.settings.delta_t, instance.settings.lv_weighted, instance.settings.dispatch},
        estimator_(network_, settings_),
        truth_(truth),
        horizon_(horizon) {}

  OracleResult run(SystemState state) {
    if (state.period < horizon_) {
      observe_in_place(state, truth_.observe(state));
      advance(std::move(state), 0.0);
    } else {
      leaf(0.0);
    }
    return result_;
  }

 private:
  /// `state` has observed its period and not acted yet.
  void advance(SystemState state, double cost) {
    for (;;) {
      if (is_decision_epoch(state)) {
        for (const auto& crews : crew_actions(state)) {
          for (const auto& megs : meg_actions(state)) {
            SystemState branch = state;
            apply_targets(branch, network_, crews, megs);
            branch.decision_due = false;
            finish_period(std::move(branch), cost);
          }
        }
        return;
      }
      const auto result = dispatch(state);
      cost += result.cost;
      if (!step(state, result)) return leaf(cost);
    }
  }

  void finish_period(SystemState state, double cost) {
    const auto result = dispatch(state);
    cost += result.cost;
    if (!step(state, result)) return leaf(cost);
    advance(std::move(state), cost);
  }

  /// Moves to the next period and observes it; false once the run is over.
  bool step(SystemState& state, const DispatchResult& result) {
    if (!state.has_active_faults() && !truth_.has_pending_faults(state)) return false;
    transition_in_place(network_, state, result, settings_.delta_t);
    if (state.period >= horizon_) return false;
    observe_in_place(state, truth_.observe(state));
    return true;
  }

  DispatchResult dispatch(const SystemState& state) {
    return settings_.dispatch == "approx" ? estimator_.dispatch_state(state) : period_cost(network_, state, settings_);
  }

  void leaf(double cost) {
    ++result_.leaves;
    const double tol = 1e-9 * std::max(1.0, std::abs(result_.optimum));
    if (result_.optimal_sequences == 0 || cost < result_.optimum - tol) {
      result_.optimum = cost;
      result_.optimal_sequences = 1;
    } else if (std::abs(cost - result_.optimum) <= tol) {
      ++result_.optimal_sequences;
    }
  }

  static std::vector<CrewTargets> crew_actions(const SystemState& state) {
    std::vector<CrewId> crews;
    for (const auto& c : state.crews)
      if (c.is_free()) crews.push_back(c.id);
    std::vector<LineId> faults;
    for (const auto line : state.active_faults()) {
      const bool claimed =
          std::any_of(state.crews.begin(), state.crews.end(), [&](const CrewState& c) { return c.target == line; });
      if (!claimed) faults.push_back(line);
    }
    if (crews.empty() || faults.empty()) return {CrewTargets{}};

    std::vector<CrewTargets> out;
    const auto k = std::min(crews.size(), faults.size());
    // Every ordered choice of k distinct faults for the first k crews, or of
    // k distinct crews for all faults when crews outnumber faults.
    std::vector<std::size_t> perm(std::max(crews.size(), faults.size()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::vector<std::vector<std::size_t>> seen;
    do {
      std::vector<std::size_t> head(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
      if (std::find(seen.begin(), seen.end(), head) != seen.end()) continue;
      seen.push_back(head);
      CrewTargets t;
      for (std::size_t i = 0; i < k; ++i) {
        if (crews.size() <= faults.size())
          t.emplace_back(crews[i], faults[head[i]]);
        else
          t.emplace_back(crews[head[i]], faults[i]);
      }
      std::sort(t.begin(), t.end());
      out.push_back(std::move(t));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
  }

  std::vector<MegTargets> meg_actions(const SystemState& state) const {
    std::vector<MegTargets> out{MegTargets{}};
    for (const auto& m : state.megs) {
      if (!m.is_free()) continue;
      std::vector<MegTargets> next;
      for (const auto& partial : out) {
        next.push_back(partial);
        for (const auto ap : network_.access_points()) {
          if (m.bus() == ap) continue;
          auto t = partial;
          t.emplace_back(m.id, ap);
          next.push_back(std::move(t));
        }
      }
      out = std::move(next);
    }
    return out;
  }

  const Network& network_;
  LossSettings settings_;
  LoadLossEstimator estimator_;
  const Scenario& truth_;
  int horizon_;
  OracleResult result_;
};

}  // namespace

OracleResult exact_oracle(const Instance& instance, int horizon, std::uint64_t seed) {
  if (instance.faults.size() > kOracleMaxFaults || instance.crews.size() > kOracleMaxCrews ||
      instance.megs.size() > kOracleMaxMegs)
    throw ValidationError("instance exceeds the exact search bounds (3 faults, 2 crews, 1 MEG)");
  const auto& p = instance.priors;
  const bool fixed_times =
      std::all_of(instance.faults.begin(), instance.faults.end(), [](const FaultSpec& f) { return f.repair_time; });
  if (!fixed_times || p.pv_error_std != 0.0 || p.load_error_halfwidth != 0.0 || !p.new_faults.empty())
    throw ValidationError("exact search needs a deterministic instance");
  check_dispatch_mode(instance.settings.dispatch);

  const auto truth = ground_truth_scenario(instance, seed);
  Search search(instance, horizon, truth);
  return search.run(initial_state(instance));
}

}  // namespace gridrestore
