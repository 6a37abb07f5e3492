#include <benchmark/benchmark.h>

#include "gridrestore/dynamics.hpp"
#include "gridrestore/generator.hpp"
#include "gridrestore/loadloss.hpp"
#include "gridrestore/policy.hpp"
#include "gridrestore/rollout.hpp"
#include "gridrestore/scenario.hpp"

namespace gridrestore {
namespace {

const Instance& feeder() {
  static const Instance inst = builtin_instance("medium123");
  return inst;
}

LossSettings settings_of(const Instance& inst) {
  return {inst.settings.delta_t, inst.settings.lv_weighted, "approx"};
}

// Period-0 state after the seed-1 observation: the largest decision of a run.
SystemState opening_state() {
  const auto& inst = feeder();
  auto state = initial_state(inst);
  observe_in_place(state, ground_truth_scenario(inst, 1).observe(state));
  return state;
}

void BM_EstimateLv(benchmark::State& st) {
  const auto& inst = feeder();
  const auto state = opening_state();
  LoadLossEstimator estimator(inst.network, settings_of(inst));
  const auto faults = state.active_faults();
  for (auto _ : st) benchmark::DoNotOptimize(estimator.estimate_lv(faults, {}, state.inputs, {}));
}
BENCHMARK(BM_EstimateLv);

void BM_LvRepairingOneLine(benchmark::State& st) {
  const auto& inst = feeder();
  const auto state = opening_state();
  LoadLossEstimator estimator(inst.network, settings_of(inst));
  const auto faults = state.active_faults();
  (void)estimator.prepare_repairs(faults, {}, state.inputs, {});
  std::size_t i = 0;
  for (auto _ : st) {
    const LineId repaired[] = {faults[i++ % faults.size()]};
    benchmark::DoNotOptimize(estimator.lv_repairing(repaired));
  }
}
BENCHMARK(BM_LvRepairingOneLine);

void BM_BaseDecision(benchmark::State& st) {
  const auto& inst = feeder();
  const auto state = opening_state();
  LoadLossEstimator estimator(inst.network, settings_of(inst));
  for (auto _ : st) {
    PriorityPolicy policy(estimator, state);
    benchmark::DoNotOptimize(policy.base_crew_targets());
    benchmark::DoNotOptimize(policy.base_meg_targets());
  }
  st.SetLabel("4 free crews, " + std::to_string(state.active_faults().size()) + " faults");
}
BENCHMARK(BM_BaseDecision)->Unit(benchmark::kMillisecond);

void BM_CandidateSets(benchmark::State& st) {
  const auto& inst = feeder();
  const auto state = opening_state();
  LoadLossEstimator estimator(inst.network, settings_of(inst));
  const auto k_a = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) {
    PriorityPolicy policy(estimator, state);
    benchmark::DoNotOptimize(policy.crew_candidates(k_a));
    benchmark::DoNotOptimize(policy.meg_candidates(k_a));
  }
}
BENCHMARK(BM_CandidateSets)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_Rollout(benchmark::State& st) {
  const auto& inst = feeder();
  const auto state = opening_state();
  const auto settings = settings_of(inst);
  const auto crews = base_crew_targets(inst.network, state, settings);
  const auto megs = base_meg_targets(inst.network, state, settings);
  const auto scenarios = generate_scenarios(inst, inst.priors, state, 1, 1, inst.settings.horizon);
  for (auto _ : st)
    benchmark::DoNotOptimize(
        simulate_to_horizon(inst.network, state, crews, megs, scenarios.front(), inst.settings.horizon, settings));
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMillisecond);

// Args: candidates per decision, scenarios per decision.
void BM_OdpDecide(benchmark::State& st) {
  const auto& inst = feeder();
  const auto state = opening_state();
  const OdpConfig config{static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)), 0};
  for (auto _ : st)
    benchmark::DoNotOptimize(odp_decide(inst, state, inst.priors, config, 1, inst.settings.horizon, settings_of(inst)));
}
BENCHMARK(BM_OdpDecide)->Args({10, 10})->Args({40, 50})->Unit(benchmark::kSecond)->Iterations(1);

void BM_BaseRun(benchmark::State& st) {
  const auto& inst = feeder();
  for (auto _ : st) benchmark::DoNotOptimize(run_online(inst, RunOptions{}));
}
BENCHMARK(BM_BaseRun)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace gridrestore

BENCHMARK_MAIN();
