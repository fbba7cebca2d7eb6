#pragma once

#include <optional>
#include <vector>

#include "core/agent.hpp"
#include "core/rng.hpp"

namespace gatar {

// Per-agent chosen target cell; nullopt when an agent gets none. Assigned
// targets never repeat while unassigned reachable targets remain.
using Assignment = std::vector<std::optional<Cell>>;

// Travel time from the agent to each target over what the observation shows:
// shortest visible traversable path length divided by speed, infinity when no
// known corridor exists.
std::vector<double> travel_times(const Observation& obs, const AgentState& agent,
                                 const std::vector<Cell>& targets);

// Centralized greedy allocation over the pooled team view. Candidate targets
// are everything anyone has seen; repeatedly commits the cheapest remaining
// (agent, target) pair by travel time, ties broken by agent id then target
// (x, y). Agents whose every remaining target is unreachable get nullopt.
Assignment expert_greedy(const std::vector<AgentState>& agents,
                         const std::vector<Observation>& observations);

// Minimum total travel time over every injective agent-to-target mapping
// that cannot be extended by another reachable pair. Guarded to tiny
// instances (at most 5 agents and 6 pooled targets).
Assignment brute_force_optimal(const std::vector<AgentState>& agents,
                               const std::vector<Observation>& observations);

// Nearest own-visible target by travel time, ties broken by target (x, y).
std::optional<Cell> greedy_no_comm(const AgentState& agent, const Observation& obs);

// Uniform draw over the observation's visible targets.
std::optional<Cell> random_select(const Observation& obs, Rng& rng);

}  // namespace gatar
