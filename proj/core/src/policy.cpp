#include "gridrestore/policy.hpp"

#include <algorithm>
#include <functional>

#include "gridrestore/errors.hpp"

namespace gridrestore {

namespace {

struct Scored {
  std::vector<int> choice;
  double score{0.0};
};

/// Number of complete choices, saturating just above `cap`.
std::size_t count_choices(const std::vector<std::vector<int>>& options, bool distinct, std::size_t cap) {
  std::size_t total = 1;
  for (std::size_t s = 0; s < options.size(); ++s) {
    const std::size_t n = distinct ? (options[s].size() > s ? options[s].size() - s : 0) : options[s].size();
    if (n == 0) return 0;
    if (total > (cap + 1) / n + 1) return cap + 1;
    total *= n;
  }
  return total;
}

bool used_before(std::span<const int> prefix, int option) {
  return std::find(prefix.begin(), prefix.end(), option) != prefix.end();
}

/// Every complete choice (one option per slot) when there are at most `cap`,
/// otherwise a beam of width `cap` grown slot by slot on the partial score.
/// Distinct mode forbids reusing an option across slots.
/// With `best_only`, an enumerable space yields just its best choice under
/// (higher score, then `best_only` as tie-break) without sorting the rest.
using ChoiceLess = std::function<bool(std::span<const int>, std::span<const int>)>;

std::vector<Scored> search_choices(const std::vector<std::vector<int>>& options, bool distinct,
                                   const std::function<double(std::span<const int>)>& score, std::size_t cap,
                                   const ChoiceLess* best_only = nullptr) {
  const auto better = [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.choice < b.choice;
  };
  std::vector<Scored> out;
  if (options.empty()) return out;

  if (count_choices(options, distinct, cap) <= cap) {
    std::vector<int> current;
    Scored best;
    bool have_best = false;
    std::function<void(std::size_t)> dfs = [&](std::size_t slot) {
      if (slot == options.size()) {
        const double v = score(current);
        if (!best_only) {
          out.push_back({current, v});
        } else if (!have_best || v > best.score || (v == best.score && (*best_only)(current, best.choice))) {
          best.choice = current;
          best.score = v;
          have_best = true;
        }
        return;
      }
      for (const int o : options[slot]) {
        if (distinct && used_before(current, o)) continue;
        current.push_back(o);
        dfs(slot + 1);
        current.pop_back();
      }
    };
    dfs(0);
    if (best_only && have_best) out.push_back(std::move(best));
    std::sort(out.begin(), out.end(), better);
    return out;
  }

  std::vector<Scored> beam{Scored{}};
  for (std::size_t slot = 0; slot < options.size(); ++slot) {
    std::vector<Scored> next;
    for (const auto& partial : beam) {
      for (const int o : options[slot]) {
        if (distinct && used_before(partial.choice, o)) continue;
        Scored grown{partial.choice, 0.0};
        grown.choice.push_back(o);
        grown.score = score(grown.choice);
        next.push_back(std::move(grown));
      }
    }
    std::sort(next.begin(), next.end(), better);
    if (next.size() > cap) next.resize(cap);
    beam = std::move(next);
  }
  return beam;
}

}  // namespace

PriorityPolicy::PriorityPolicy(LoadLossEstimator& estimator, const SystemState& state)
    : estimator_(&estimator), state_(&state) {
  const auto& net = estimator.network();
  active_ = state.active_faults();
  std::sort(active_.begin(), active_.end());
  for (const auto& c : state.crews)
    if (c.is_free()) free_crews_.push_back(c.id);
  for (const auto line : active_) {
    const bool claimed =
        std::any_of(state.crews.begin(), state.crews.end(), [&](const CrewState& c) { return c.target == line; });
    if (!claimed) unclaimed_.push_back(line);
  }
  for (const auto& m : state.megs)
    if (m.is_free()) free_megs_.push_back(m.id);
  current_megs_ = supplying_megs(state);
  storage_plan_ = estimator.storage_plan(state, current_megs_);
  (void)net;
}

double PriorityPolicy::lv_without(std::span<const LineId> repaired) {
  const bool memo = active_.size() <= 128;
  FaultKey key;
  if (memo) {
    for (const auto line : repaired) {
      const auto pos = static_cast<std::size_t>(std::lower_bound(active_.begin(), active_.end(), line) - active_.begin());
      if (pos < 64) key.lo |= std::uint64_t{1} << pos;
      else key.hi |= std::uint64_t{1} << (pos - 64);
    }
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  if (repairs_token_ == 0 || estimator_->repairs_token() != repairs_token_)
    repairs_token_ = estimator_->prepare_repairs(active_, current_megs_, state_->inputs, storage_plan_);
  const double lv = estimator_->lv_repairing(repaired);
  if (memo) memo_.emplace(key, lv);
  return lv;
}

double PriorityPolicy::lv_with_faults(std::span<const LineId> faults) {
  return estimator_->estimate_lv(faults, current_megs_, state_->inputs, storage_plan_);
}

double PriorityPolicy::crew_denominator(const CrewTargets& candidate) {
  const auto& net = estimator_->network();
  const auto lines = net.line_count();
  if (crew_terms_.empty()) crew_terms_.assign(state_->crews.size() * lines, -1.0);
  scratch_terms_.clear();
  for (const auto& [crew, line] : candidate) {
    auto& term = crew_terms_[crew.index() * lines + line.index()];
    if (term < 0.0) {
      const auto& c = state_->crews[crew.index()];
      const auto* f = state_->find_fault(line);
      term = static_cast<double>(crew_travel_time(net, c.location, line)) + f->estimated_repair_time;
    }
    scratch_terms_.push_back(term);
  }
  // Summation in sorted order keeps the value independent of assignment order.
  std::sort(scratch_terms_.begin(), scratch_terms_.end());
  double sum = 0.0;
  for (const double t : scratch_terms_) sum += t;
  return sum / static_cast<double>(scratch_terms_.size());
}

double PriorityPolicy::clrr_unchecked(const CrewTargets& candidate) {
  scratch_lines_.clear();
  for (const auto& target : candidate) scratch_lines_.push_back(target.second);
  if (!lv_before_repairs_) lv_before_repairs_ = lv_without({});
  const double gain = *lv_before_repairs_ - lv_without(scratch_lines_);
  return gain / crew_denominator(candidate);
}

double PriorityPolicy::index_clrr(const CrewTargets& candidate) {
  if (candidate.empty()) throw ValidationError("crew index is undefined for an empty assignment");
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    const auto line = candidate[i].second;
    if (!state_->is_faulted(line)) throw ValidationError("crew candidate targets a line that is not faulted");
    for (std::size_t j = 0; j < i; ++j)
      if (candidate[j].second == line) throw ValidationError("crew candidate assigns one line twice");
  }
  return clrr_unchecked(candidate);
}

double PriorityPolicy::meg_lv(const MegTargets& candidate) {
  const auto& net = estimator_->network();
  if (!meg_status_ready_) {
    meg_status_ = estimator_->radial_status(active_, current_megs_, state_->inputs);
    meg_status_ready_ = true;
  }
  scratch_megs_.clear();
  for (const auto& m : state_->megs) {
    const auto it = std::find_if(candidate.begin(), candidate.end(), [&](const auto& t) { return t.first == m.id; });
    if (it != candidate.end()) {
      if (!net.bus(it->second).is_access_point) throw ValidationError("MEG candidate targets a non access point");
      if (!m.is_free() && m.target != it->second) throw ValidationError("MEG candidate moves a travelling MEG");
      if (m.is_free()) scratch_megs_.push_back({it->second, m.max_active});
    } else if (m.supplying && m.bus()) {
      scratch_megs_.push_back({*m.bus(), m.max_active});
    }
  }
  return estimator_->lv_on_status(meg_status_, scratch_megs_, state_->inputs, storage_plan_);
}

double PriorityPolicy::index_dl(const MegTargets& candidate) {
  if (!base_meg_lv_) base_meg_lv_ = meg_lv({});
  return *base_meg_lv_ - meg_lv(candidate);
}

CrewTargets PriorityPolicy::crew_targets_of(std::span<const int> choice) const {
  CrewTargets out;
  crew_targets_of(choice, out);
  return out;
}

void PriorityPolicy::crew_targets_of(std::span<const int> choice, CrewTargets& out) const {
  out.clear();
  if (free_crews_.size() <= unclaimed_.size()) {
    for (std::size_t s = 0; s < choice.size(); ++s) out.emplace_back(free_crews_[s], unclaimed_[choice[s]]);
  } else {
    for (std::size_t s = 0; s < choice.size(); ++s) out.emplace_back(free_crews_[choice[s]], unclaimed_[s]);
    std::sort(out.begin(), out.end());
  }
}

MegTargets PriorityPolicy::meg_targets_of(std::span<const int> choice) const {
  MegTargets out;
  meg_targets_of(choice, out);
  return out;
}

void PriorityPolicy::meg_targets_of(std::span<const int> choice, MegTargets& out) const {
  const auto aps = estimator_->network().access_points();
  out.clear();
  for (std::size_t s = 0; s < choice.size(); ++s) {
    if (choice[s] >= 0) out.emplace_back(free_megs_[s], aps[choice[s]]);
  }
}

std::vector<CrewAssignment> PriorityPolicy::crew_candidates(std::size_t k_a) {
  if (k_a == 0) throw ValidationError("candidate count must be at least 1");
  if (free_crews_.empty() || unclaimed_.empty()) return {CrewAssignment{}};

  const bool by_crew = free_crews_.size() <= unclaimed_.size();
  const auto slots = by_crew ? free_crews_.size() : unclaimed_.size();
  const auto per_slot = by_crew ? unclaimed_.size() : free_crews_.size();
  std::vector<int> all(per_slot);
  for (std::size_t i = 0; i < per_slot; ++i) all[i] = static_cast<int>(i);
  const std::vector<std::vector<int>> options(slots, all);

  // Final order breaks ties on the targets, which follow the choice order
  // only when each slot is a crew.
  const ChoiceLess targets_less = [&](std::span<const int> a, std::span<const int> b) {
    if (by_crew) return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    return crew_targets_of(a) < crew_targets_of(b);
  };
  auto found = search_choices(
      options, true, [&](std::span<const int> choice) {
        crew_targets_of(choice, scratch_crew_targets_);
        return clrr_unchecked(scratch_crew_targets_);
      },
      kEnumerationCap, k_a == 1 ? &targets_less : nullptr);

  std::vector<CrewAssignment> out;
  out.reserve(found.size());
  for (const auto& s : found) out.push_back({crew_targets_of(s.choice), s.score});
  std::stable_sort(out.begin(), out.end(), [](const CrewAssignment& a, const CrewAssignment& b) {
    if (a.index_value != b.index_value) return a.index_value > b.index_value;
    return a.targets < b.targets;
  });
  if (out.size() > k_a) out.resize(k_a);
  return out;
}

std::vector<MegAssignment> PriorityPolicy::meg_candidates(std::size_t k_a) {
  if (k_a == 0) throw ValidationError("candidate count must be at least 1");
  if (free_megs_.empty()) return {MegAssignment{}};

  const auto aps = estimator_->network().access_points();
  std::vector<std::vector<int>> options;
  for (const auto id : free_megs_) {
    const auto& m = state_->megs[id.index()];
    std::vector<int> slot{-1};
    for (std::size_t a = 0; a < aps.size(); ++a)
      if (m.bus() != aps[a]) slot.push_back(static_cast<int>(a));
    options.push_back(std::move(slot));
  }

  const auto moves_of = [](std::span<const int> choice) {
    return std::count_if(choice.begin(), choice.end(), [](int c) { return c >= 0; });
  };
  const ChoiceLess fewer_moves = [&](std::span<const int> a, std::span<const int> b) {
    if (moves_of(a) != moves_of(b)) return moves_of(a) < moves_of(b);
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  };
  auto found = search_choices(
      options, false, [&](std::span<const int> choice) {
        meg_targets_of(choice, scratch_meg_targets_);
        return index_dl(scratch_meg_targets_);
      }, kEnumerationCap, k_a == 1 ? &fewer_moves : nullptr);

  struct Ranked {
    MegAssignment assignment;
    std::size_t moves;
    std::vector<int> choice;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(found.size());
  for (auto& s : found) {
    const auto moves = static_cast<std::size_t>(moves_of(s.choice));
    ranked.push_back({{meg_targets_of(s.choice), s.score}, moves, std::move(s.choice)});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.assignment.index_value != b.assignment.index_value) return a.assignment.index_value > b.assignment.index_value;
    if (a.moves != b.moves) return a.moves < b.moves;
    return a.choice < b.choice;
  });
  std::vector<MegAssignment> out;
  for (std::size_t i = 0; i < ranked.size() && i < k_a; ++i) out.push_back(std::move(ranked[i].assignment));
  return out;
}

double index_clrr(const Network& network, const SystemState& state, const CrewTargets& candidate,
                  const LossSettings& settings) {
  LoadLossEstimator estimator(network, settings);
  PriorityPolicy policy(estimator, state);
  return policy.index_clrr(candidate);
}

double index_dl(const Network& network, const SystemState& state, const MegTargets& candidate,
                const LossSettings& settings) {
  LoadLossEstimator estimator(network, settings);
  PriorityPolicy policy(estimator, state);
  return policy.index_dl(candidate);
}

CrewAssignment base_crew_targets(const Network& network, const SystemState& state, const LossSettings& settings) {
  LoadLossEstimator estimator(network, settings);
  PriorityPolicy policy(estimator, state);
  return policy.base_crew_targets();
}

MegAssignment base_meg_targets(const Network& network, const SystemState& state, const LossSettings& settings) {
  LoadLossEstimator estimator(network, settings);
  PriorityPolicy policy(estimator, state);
  return policy.base_meg_targets();
}

std::vector<CrewAssignment> reduced_action_set_crews(const Network& network, const SystemState& state,
                                                     const LossSettings& settings, std::size_t k_a) {
  LoadLossEstimator estimator(network, settings);
  PriorityPolicy policy(estimator, state);
  return policy.crew_candidates(k_a);
}

std::vector<MegAssignment> reduced_action_set_megs(const Network& network, const SystemState& state,
                                                   const LossSettings& settings, std::size_t k_a) {
  LoadLossEstimator estimator(network, settings);
  PriorityPolicy policy(estimator, state);
  return policy.meg_candidates(k_a);
}

}  // namespace gridrestore
