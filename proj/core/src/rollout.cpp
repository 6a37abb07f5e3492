#include "gridrestore/rollout.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "gridrestore/dynamics.hpp"
#include "gridrestore/errors.hpp"
#include "gridrestore/parallel.hpp"

namespace gridrestore {

namespace {

using Decider = std::function<std::pair<CrewTargets, MegTargets>(const SystemState&)>;
using Dispatcher = std::function<DispatchResult(const SystemState&)>;
using Recorder = std::function<void(const SystemState& before, const SystemState& after_targets,
                                    const DispatchResult& dispatch)>;

/// Shared period loop of rollouts and online runs. `state` has observed its
/// current period already when `observe_first` is false.
double drive(const Network& network, SystemState& state, const Scenario& truth, int horizon, double delta_t,
             bool observe_first, const Decider& first_decision, const Decider& decide, const Dispatcher& dispatch,
             const Recorder* record, double* first_cost) {
  double total = 0.0;
  bool first = true;
  while (state.period < horizon) {
    if (!first || observe_first) observe_in_place(state, truth.observe(state));
    const SystemState before = record ? state : SystemState{};
    if (first && first_decision) {
      const auto [crews, megs] = first_decision(state);
      apply_targets(state, network, crews, megs);
      state.decision_due = false;
    } else if (is_decision_epoch(state)) {
      const auto [crews, megs] = decide(state);
      apply_targets(state, network, crews, megs);
      state.decision_due = false;
    }
    const auto result = dispatch(state);
    if (record) (*record)(before, state, result);
    total += result.cost;
    if (first && first_cost) *first_cost = result.cost;
    first = false;
    if (!state.has_active_faults() && !truth.has_pending_faults(state)) break;
    transition_in_place(network, state, result, delta_t);
  }
  return total;
}

std::pair<CrewTargets, MegTargets> base_decision(LoadLossEstimator& estimator, const SystemState& state) {
  PriorityPolicy policy(estimator, state);
  return {policy.base_crew_targets().targets, policy.base_meg_targets().targets};
}

}  // namespace

bool is_decision_epoch(const SystemState& state) {
  if (state.decision_due) return true;
  const bool free_crew = std::any_of(state.crews.begin(), state.crews.end(), [](const CrewState& c) { return c.is_free(); });
  if (!free_crew) return false;
  for (const auto& f : state.faults) {
    if (f.repaired) continue;
    const bool claimed =
        std::any_of(state.crews.begin(), state.crews.end(), [&](const CrewState& c) { return c.target == f.line; });
    if (!claimed) return true;
  }
  return false;
}

RolloutCost simulate_to_horizon(const Network& network, const SystemState& state, const CrewAssignment& crews,
                                const MegAssignment& megs, const Scenario& scenario, int horizon,
                                const LossSettings& settings) {
  LoadLossEstimator estimator(network, settings);
  SystemState sim = state;
  RolloutCost cost;
  if (sim.period >= horizon) return cost;
  double first_cost = 0.0;
  const Decider first = [&](const SystemState&) { return std::make_pair(crews.targets, megs.targets); };
  const Decider decide = [&](const SystemState& s) { return base_decision(estimator, s); };
  const Dispatcher dispatch = [&](const SystemState& s) { return estimator.dispatch_state(s); };
  const double total =
      drive(network, sim, scenario, horizon, settings.delta_t, false, first, decide, dispatch, nullptr, &first_cost);
  cost.current = first_cost;
  cost.tail = total - first_cost;
  return cost;
}

namespace {

/// Values of each candidate over all scenarios, one task per (candidate, scenario) pair.
std::vector<QEstimate> evaluate_candidates(const Network& network, const SystemState& state,
                                           const std::vector<std::pair<CrewAssignment, MegAssignment>>& actions,
                                           const std::vector<Scenario>& scenarios, int horizon,
                                           const LossSettings& settings, std::size_t threads) {
  if (scenarios.empty()) throw ValidationError("at least one scenario is required");
  const auto n_s = scenarios.size();
  std::vector<RolloutCost> costs(actions.size() * n_s);
  parallel_for(costs.size(), threads, [&](std::size_t task) {
    const auto& [crews, megs] = actions[task / n_s];
    costs[task] = simulate_to_horizon(network, state, crews, megs, scenarios[task % n_s], horizon, settings);
  });
  std::vector<QEstimate> out(actions.size());
  for (std::size_t a = 0; a < actions.size(); ++a) {
    auto& q = out[a];
    q.action_index = a;
    q.current_cost = costs[a * n_s].current;
    double sum = 0.0;
    for (std::size_t s = 0; s < n_s; ++s) {
      q.per_scenario_costs.push_back(costs[a * n_s + s].tail);
      sum += costs[a * n_s + s].tail;
    }
    q.value = q.current_cost + sum / static_cast<double>(n_s);
  }
  return out;
}

std::size_t best_index(const std::vector<QEstimate>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double incumbent = values[best].value;
    if (values[i].value < incumbent - 1e-9 * std::max(1.0, std::abs(incumbent))) best = i;
  }
  return best;
}

}  // namespace

QEstimate q_value(const Network& network, const SystemState& state, const CrewAssignment& crews,
                  const MegAssignment& megs, const std::vector<Scenario>& scenarios, int horizon,
                  const LossSettings& settings, std::size_t threads) {
  return evaluate_candidates(network, state, {{crews, megs}}, scenarios, horizon, settings, threads).front();
}

OdpDecision odp_decide(const Instance& instance, const SystemState& state, const UncertaintyPriors& priors,
                       const OdpConfig& config, std::uint64_t seed, int horizon, const LossSettings& settings) {
  if (config.candidates == 0 || config.scenarios == 0)
    throw ValidationError("candidate and scenario counts must be at least 1");
  const auto& network = instance.network;
  const auto threads = config.threads ? config.threads : worker_threads();
  LoadLossEstimator estimator(network, settings);
  PriorityPolicy policy(estimator, state);

  OdpDecision decision;
  const auto crew_set = policy.crew_candidates(config.candidates);
  const auto base_meg = policy.base_meg_targets();
  decision.crews = crew_set.front();
  decision.megs = base_meg;

  const auto meg_set = policy.meg_candidates(config.candidates);
  if (crew_set.size() <= 1 && meg_set.size() <= 1) return decision;

  const auto scenarios = generate_scenarios(instance, priors, state, config.scenarios, seed, horizon);

  if (crew_set.size() > 1) {
    std::vector<std::pair<CrewAssignment, MegAssignment>> actions;
    for (const auto& c : crew_set) actions.emplace_back(c, base_meg);
    decision.crew_values = evaluate_candidates(network, state, actions, scenarios, horizon, settings, threads);
    decision.crews = crew_set[best_index(decision.crew_values)];
  }
  if (meg_set.size() > 1) {
    std::vector<std::pair<CrewAssignment, MegAssignment>> actions;
    for (const auto& m : meg_set) actions.emplace_back(decision.crews, m);
    decision.meg_values = evaluate_candidates(network, state, actions, scenarios, horizon, settings, threads);
    decision.megs = meg_set[best_index(decision.meg_values)];
  }
  return decision;
}

std::string_view to_string(PolicyKind kind) { return kind == PolicyKind::base ? "base" : "odp"; }

PolicyKind parse_policy_kind(std::string_view text) {
  if (text == "base") return PolicyKind::base;
  if (text == "odp") return PolicyKind::odp;
  throw ValidationError("unknown policy '" + std::string(text) + "'");
}

RunRecord run_online(const Instance& instance, const RunOptions& options) {
  const auto& network = instance.network;
  const int horizon = options.horizon.value_or(instance.settings.horizon);
  const LossSettings settings{instance.settings.delta_t, instance.settings.lv_weighted, instance.settings.dispatch};
  check_dispatch_mode(settings.dispatch);
  if (options.policy == PolicyKind::odp && (options.odp.candidates == 0 || options.odp.scenarios == 0))
    throw ValidationError("candidate and scenario counts must be at least 1");

  const auto truth = ground_truth_scenario(instance, options.seed);
  SystemState state = initial_state(instance);
  LoadLossEstimator estimator(network, settings);
  // Rollouts always use the fast estimator; the configured dispatch only prices the real run.
  LossSettings rollout_settings = settings;
  rollout_settings.dispatch = "approx";

  RunRecord record;
  const Decider decide = [&](const SystemState& s) {
    const auto start = std::chrono::steady_clock::now();
    std::pair<CrewTargets, MegTargets> chosen;
    if (options.policy == PolicyKind::base) {
      chosen = base_decision(estimator, s);
    } else {
      const auto d = odp_decide(instance, s, instance.priors, options.odp, options.seed, horizon, rollout_settings);
      chosen = {d.crews.targets, d.megs.targets};
    }
    record.decision_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return chosen;
  };
  const Dispatcher dispatch = [&](const SystemState& s) {
    return settings.dispatch == "approx" ? estimator.dispatch_state(s) : period_cost(network, s, settings);
  };

  const auto crew_name = [&](CrewId id) { return instance.crews[id.index()].id; };
  const auto meg_name = [&](MegId id) { return instance.megs[id.index()].id; };
  SystemState previous;
  bool have_previous = false;
  const Recorder recorder = [&](const SystemState& before, const SystemState& after, const DispatchResult& result) {
    const int t = after.period;
    if (have_previous) {
      // Movements completed by the transition into this period.
      for (std::size_t c = 0; c < after.crews.size(); ++c) {
        const auto& was = previous.crews[c];
        const auto& now = before.crews[c];
        if (now.line() && now.line() != was.line())
          record.actions.push_back({t, crew_name(now.id), "crew", "arrive", network.line(*now.line()).id});
        if (was.repairing && !now.repairing) {
          const auto* f = before.find_fault(*was.line());
          if (f && f->repaired)
            record.actions.push_back({t, crew_name(now.id), "crew", "repaired", network.line(f->line).id});
        }
      }
      for (std::size_t g = 0; g < after.megs.size(); ++g) {
        const auto& was = previous.megs[g];
        const auto& now = before.megs[g];
        if (now.supplying && !was.supplying && now.bus())
          record.actions.push_back({t, meg_name(now.id), "meg", "park", network.bus(*now.bus()).id});
      }
    }
    for (std::size_t c = 0; c < after.crews.size(); ++c) {
      const auto& now = after.crews[c];
      if (now.target && now.target != before.crews[c].target)
        record.actions.push_back({t, crew_name(now.id), "crew", "assign", network.line(*now.target).id});
    }
    for (std::size_t g = 0; g < after.megs.size(); ++g) {
      const auto& now = after.megs[g];
      if (now.remaining_travel > 0 && before.megs[g].remaining_travel == 0)
        record.actions.push_back({t, meg_name(now.id), "meg", "relocate", network.bus(*now.target).id});
    }
    record.periods.push_back({t, result.demand, result.served, result.island_of, result.cost});
    record.total_cost += result.cost;
    previous = after;
    have_previous = true;
  };

  drive(network, state, truth, horizon, settings.delta_t, true, nullptr, decide, dispatch, &recorder, nullptr);
  return record;
}

}  // namespace gridrestore
