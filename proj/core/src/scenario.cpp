#include "gridrestore/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gridrestore/dynamics.hpp"
#include "gridrestore/errors.hpp"

namespace gridrestore {

namespace {

std::mt19937_64 make_stream(std::uint64_t seed, StreamPurpose purpose, int period, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(period),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

int draw_repair_time(std::mt19937_64& rng, const UncertaintyPriors& priors) {
  std::weibull_distribution<double> weibull(priors.repair_shape, priors.repair_scale);
  return std::max(1, static_cast<int>(std::ceil(weibull(rng))));
}

/// Noisy input trajectory over [first, horizon) around the instance forecast.
void fill_inputs(Scenario& s, const Instance& instance, const UncertaintyPriors& priors, std::mt19937_64& rng,
                 int first, int horizon) {
  s.first_period = first;
  const auto sources = instance.network.sources();
  std::normal_distribution<double> pv_noise(0.0, 1.0);
  std::uniform_real_distribution<double> load_noise(-1.0, 1.0);
  PeriodInputs forecast;
  for (int t = first; t < horizon; ++t) {
    instance.forecast(t, forecast);
    if (priors.load_error_halfwidth > 0.0) {
      for (auto& d : forecast.load_demands) d *= 1.0 + priors.load_error_halfwidth * load_noise(rng);
    }
    if (priors.pv_error_std > 0.0) {
      for (std::size_t i = 0; i < sources.size(); ++i) {
        if (sources[i].kind != SourceKind::renewable) continue;
        forecast.source_caps[i] *= std::max(0.0, 1.0 + priors.pv_error_std * pv_noise(rng));
      }
    }
    s.load_trajectory.push_back(forecast.load_demands);
    s.source_trajectory.push_back(forecast.source_caps);
  }
}

void sort_faults(std::vector<ScenarioFault>& faults) {
  std::sort(faults.begin(), faults.end(), [](const ScenarioFault& a, const ScenarioFault& b) {
    if (a.discovery_period != b.discovery_period) return a.discovery_period < b.discovery_period;
    return a.line < b.line;
  });
}

}  // namespace

Observation Scenario::observe(const SystemState& state) const {
  Observation obs;
  obs.period = state.period;
  for (const auto& f : new_faults) {
    if (f.discovery_period != state.period || state.find_fault(f.line)) continue;
    FaultRecord r;
    r.line = f.line;
    r.discovery_period = f.discovery_period;
    if (f.known) {
      r.true_repair_time = f.repair_time;
      r.estimated_repair_time = f.repair_time;
      r.revealed = true;
    } else {
      r.estimated_repair_time = f.estimated_repair_time;
    }
    obs.new_faults.push_back(r);
  }
  for (const auto& f : state.faults) {
    if (f.revealed || f.repaired) continue;
    const bool crew_on_site = std::any_of(state.crews.begin(), state.crews.end(), [&](const CrewState& c) {
      return c.remaining_travel == 0 && c.line() == f.line;
    });
    if (!crew_on_site) continue;
    const int time = f.line.index() < repair_times.size() ? repair_times[f.line.index()] : 0;
    if (time < 1) throw DynamicsError("scenario holds no repair time for a faulted line");
    obs.revealed_repair_times.emplace_back(f.line, time);
  }
  if (!load_trajectory.empty()) {
    const auto idx = static_cast<std::size_t>(
        std::clamp(state.period - first_period, 0, static_cast<int>(load_trajectory.size()) - 1));
    obs.inputs = PeriodInputs{load_trajectory[idx], source_trajectory[idx]};
  }
  return obs;
}

bool Scenario::has_pending_faults(const SystemState& state) const {
  return std::any_of(new_faults.begin(), new_faults.end(), [&](const ScenarioFault& f) {
    return f.discovery_period > state.period && !state.find_fault(f.line);
  });
}

std::vector<Scenario> generate_scenarios(const Instance& instance, const UncertaintyPriors& priors,
                                         const SystemState& state, std::size_t n, std::uint64_t seed, int horizon) {
  if (n == 0) throw ValidationError("scenario count must be at least 1");
  priors.validate();
  const auto lines = instance.network.line_count();
  const double prior_mean = priors.repair_time_mean();
  std::vector<Scenario> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_stream(seed, StreamPurpose::rollout, state.period, i);
    Scenario s;
    s.stream_id = i;
    s.repair_times.assign(lines, 0);
    for (const auto& f : state.faults) {
      if (f.repaired) continue;
      s.repair_times[f.line.index()] = f.revealed ? *f.true_repair_time : draw_repair_time(rng, priors);
    }
    for (const auto& p : priors.new_faults) {
      if (state.find_fault(p.line)) continue;
      const int begin = std::max(p.window_begin, state.period + 1);
      std::bernoulli_distribution occurs(p.probability);
      const bool happens = occurs(rng);
      if (!happens || begin > p.window_end) continue;
      std::uniform_int_distribution<int> when(begin, p.window_end);
      ScenarioFault f;
      f.line = p.line;
      f.discovery_period = when(rng);
      f.repair_time = draw_repair_time(rng, priors);
      f.estimated_repair_time = prior_mean;
      s.repair_times[p.line.index()] = f.repair_time;
      s.new_faults.push_back(f);
    }
    sort_faults(s.new_faults);
    fill_inputs(s, instance, priors, rng, state.period + 1, horizon);
    out.push_back(std::move(s));
  }
  return out;
}

Scenario ground_truth_scenario(const Instance& instance, std::uint64_t seed) {
  auto rng = make_stream(seed, StreamPurpose::ground_truth, 0, 0);
  Scenario s;
  s.stream_id = seed;
  s.repair_times.assign(instance.network.line_count(), 0);
  const double prior_mean = instance.priors.repair_time_mean();
  std::uniform_int_distribution<int> uniform(instance.ground_truth.repair_time_min, instance.ground_truth.repair_time_max);
  for (const auto& f : instance.faults) {
    const int time = f.repair_time ? *f.repair_time : uniform(rng);
    s.repair_times[f.line.index()] = time;
    if (f.discovery_period > 0) {
      s.new_faults.push_back(
          {f.line, f.discovery_period, time, f.estimated_repair_time.value_or(prior_mean), f.known});
    }
  }
  sort_faults(s.new_faults);
  fill_inputs(s, instance, instance.priors, rng, 0, instance.settings.horizon);
  return s;
}

Scenario forecast_scenario(const Instance& instance, int first, int horizon) {
  Scenario s;
  s.repair_times.assign(instance.network.line_count(), 0);
  for (const auto& f : instance.faults) {
    if (f.repair_time) s.repair_times[f.line.index()] = *f.repair_time;
  }
  UncertaintyPriors quiet = instance.priors;
  quiet.pv_error_std = 0.0;
  quiet.load_error_halfwidth = 0.0;
  std::mt19937_64 rng(0);
  fill_inputs(s, instance, quiet, rng, first, horizon);
  return s;
}

}  // namespace gridrestore
