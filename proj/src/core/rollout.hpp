#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "core/agent.hpp"
#include "core/geometry.hpp"
#include "core/model.hpp"
#include "core/world.hpp"

namespace gatar {

// Shortest 4-connected path on the true map under the agent's traversal class,
// start and goal inclusive. Empty when the goal cannot be reached. The path
// planner sees the whole map; only task selection is limited to observations.
std::vector<Cell> a_star_path(const GridWorld& world, Cell start, Cell goal,
                              Traversal traversal);

// Task source queried for agents that need a (new) assignment.
enum class RolloutPolicy { Gatar, GreedyNoComm, Random, Expert };

struct RolloutOptions {
  int max_steps = 40;
  // true: agents keep a task until it is localized by anyone or becomes
  // unreachable. false: every agent re-queries the policy each step.
  bool commit = true;
  std::uint64_t seed = 0;             // drives the random policy
  const ModelParams* model = nullptr; // required by RolloutPolicy::Gatar
};

// Post-step snapshot. `tasks` holds the assignment each agent acted on this
// step; `remaining` lists the targets still unlocalized afterwards.
struct StepRecord {
  std::vector<Cell> positions;
  std::vector<std::optional<Cell>> tasks;
  std::vector<Cell> remaining;
};

struct LocalizationEvent {
  int step = 0;  // 1-based step on which the agent entered the target cell
  int agent = 0;
  Cell target;
};

// Mission state plus a full trajectory log. `world` always carries exactly
// the targets not yet localized.
struct Episode {
  GridWorld world;
  std::vector<AgentState> team;
  std::vector<std::optional<Cell>> committed;
  int step_count = 0;
  std::vector<StepRecord> log;
  std::vector<LocalizationEvent> events;
};

// Nearest of the agent's visible, observed-reachable targets to a predicted
// cell coordinate; ties fall to the lexicographically smaller cell, nullopt
// when no candidate qualifies.
std::optional<Cell> snap_to_target(const Observation& obs, const AgentState& agent,
                                   std::array<double, 2> cell_coords);

Episode make_episode(const GridWorld& world, const std::vector<AgentState>& team);

bool episode_done(const Episode& episode, int max_steps);

// One sense -> allocate -> plan -> move cycle. Uncommitted agents query the
// policy; a Gatar prediction is snapped to the nearest currently visible
// target with a finite observed travel time, holding position when there is
// none. Agents then advance up to `speed` cells along their planned path and
// localize any target whose cell they cross.
void episode_step(Episode& episode, RolloutPolicy policy, const RolloutOptions& opt);

// Runs steps until every target is localized or max_steps is reached.
Episode run_episode(const GridWorld& world, const std::vector<AgentState>& team,
                    RolloutPolicy policy, const RolloutOptions& opt = {});

// Step on which the last target fell, or nullopt if the mission timed out.
std::optional<int> steps_to_completion(const Episode& episode);

// JSON episode files, format version 1. save/load round-trip exactly.
std::string episode_to_json(const Episode& episode);
Episode episode_from_json(const std::string& text);
void save_episode(const Episode& episode, const std::string& path);
Episode load_episode(const std::string& path);

}  // namespace gatar
