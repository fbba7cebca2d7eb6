#include "core/allocators.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "core/errors.hpp"
#include "core/featurize.hpp"

namespace gatar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (x, y) lexicographic target order used by every tie-break here; this is
// deliberately not Cell's row-major operator<.
bool xy_before(Cell a, Cell b) { return a.x != b.x ? a.x < b.x : a.y < b.y; }

std::vector<std::vector<double>> cost_matrix(const std::vector<AgentState>& agents,
                                             const Observation& pooled,
                                             const std::vector<Cell>& targets) {
  std::vector<std::vector<double>> costs;
  costs.reserve(agents.size());
  for (const AgentState& agent : agents) {
    costs.push_back(travel_times(pooled, agent, targets));
  }
  return costs;
}

}  // namespace

std::vector<double> travel_times(const Observation& obs, const AgentState& agent,
                                 const std::vector<Cell>& targets) {
  const std::vector<int> lengths = shortest_path_lengths(obs, agent.position, agent.spec.traversal);
  std::vector<double> times(targets.size(), kInf);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int len = lengths[static_cast<std::size_t>(obs.index(targets[i]))];
    if (len >= 0) times[i] = static_cast<double>(len) / static_cast<double>(agent.spec.speed);
  }
  return times;
}

Assignment expert_greedy(const std::vector<AgentState>& agents,
                         const std::vector<Observation>& observations) {
  if (agents.empty() || agents.size() != observations.size()) {
    throw ContractError("expert_greedy: need one observation per agent");
  }
  const Observation pooled = union_observations(observations);
  const std::vector<Cell>& targets = pooled.seen_targets();
  const auto costs = cost_matrix(agents, pooled, targets);

  Assignment out(agents.size());
  std::vector<bool> agent_done(agents.size(), false);
  std::vector<bool> target_done(targets.size(), false);
  for (;;) {
    using Pick = std::tuple<double, std::size_t, int, int>;  // cost, agent, x, y
    std::optional<Pick> best;
    std::size_t best_target = 0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (agent_done[i]) continue;
      for (std::size_t j = 0; j < targets.size(); ++j) {
        if (target_done[j] || costs[i][j] == kInf) continue;
        const Pick pick{costs[i][j], i, targets[j].x, targets[j].y};
        if (!best || pick < *best) {
          best = pick;
          best_target = j;
        }
      }
    }
    if (!best) break;
    const std::size_t agent = std::get<1>(*best);
    out[agent] = targets[best_target];
    agent_done[agent] = true;
    target_done[best_target] = true;
  }
  return out;
}

Assignment brute_force_optimal(const std::vector<AgentState>& agents,
                               const std::vector<Observation>& observations) {
  if (agents.empty() || agents.size() != observations.size()) {
    throw ContractError("brute_force_optimal: need one observation per agent");
  }
  const Observation pooled = union_observations(observations);
  const std::vector<Cell>& targets = pooled.seen_targets();
  if (agents.size() > 5 || targets.size() > 6) {
    throw ContractError("brute_force_optimal: instance too large (max 5 agents, 6 targets)");
  }
  const auto costs = cost_matrix(agents, pooled, targets);

  // choice per agent: target index or -1 for none
  std::vector<int> choice(agents.size(), -1);
  std::vector<bool> used(targets.size(), false);
  std::vector<int> best_choice;
  double best_total = kInf;
  bool have_best = false;

  // prefers assigned over none, then (x, y) target order, agent by agent
  const auto lex_before = [&](const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == b[i]) continue;
      if (a[i] == -1 || b[i] == -1) return b[i] == -1;
      return xy_before(targets[static_cast<std::size_t>(a[i])],
                       targets[static_cast<std::size_t>(b[i])]);
    }
    return false;
  };

  const auto consider = [&] {
    // maximal: no skipped agent may still reach an unused target
    double total = 0.0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (choice[i] >= 0) {
        total += costs[i][static_cast<std::size_t>(choice[i])];
        continue;
      }
      for (std::size_t j = 0; j < targets.size(); ++j) {
        if (!used[j] && costs[i][j] < kInf) return;
      }
    }
    if (!have_best || total < best_total ||
        (total == best_total && lex_before(choice, best_choice))) {
      best_total = total;
      best_choice = choice;
      have_best = true;
    }
  };

  const auto recurse = [&](auto&& self, std::size_t i) -> void {
    if (i == agents.size()) {
      consider();
      return;
    }
    choice[i] = -1;
    self(self, i + 1);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      if (used[j] || costs[i][j] == kInf) continue;
      choice[i] = static_cast<int>(j);
      used[j] = true;
      self(self, i + 1);
      used[j] = false;
      choice[i] = -1;
    }
  };
  recurse(recurse, 0);

  Assignment out(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (best_choice[i] >= 0) out[i] = targets[static_cast<std::size_t>(best_choice[i])];
  }
  return out;
}

std::optional<Cell> greedy_no_comm(const AgentState& agent, const Observation& obs) {
  const std::vector<Cell>& targets = obs.seen_targets();
  const std::vector<double> times = travel_times(obs, agent, targets);
  std::optional<Cell> best;
  double best_time = kInf;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (times[j] == kInf) continue;
    if (!best || times[j] < best_time || (times[j] == best_time && xy_before(targets[j], *best))) {
      best = targets[j];
      best_time = times[j];
    }
  }
  return best;
}

std::optional<Cell> random_select(const Observation& obs, Rng& rng) {
  const std::vector<Cell>& targets = obs.seen_targets();
  if (targets.empty()) return std::nullopt;
  return targets[static_cast<std::size_t>(rng.below_int(static_cast<int>(targets.size())))];
}

}  // namespace gatar
