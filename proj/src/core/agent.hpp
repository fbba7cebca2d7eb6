#pragma once

#include <string>
#include <vector>

#include "core/geometry.hpp"
#include "core/world.hpp"

namespace gatar {

enum class AgentKind { Uav, Ugv };
enum class Traversal { FliesOverObstacles, BlockedByObstacles };

struct AgentSpec {
  AgentKind kind = AgentKind::Ugv;
  int speed = 1;           // cells per step
  double r_sense = 4.0;    // Euclidean sensing radius
  double r_comm = 6.0;     // Euclidean communication radius
  int op_range = 120;      // max path length the platform can operate over
  Traversal traversal = Traversal::BlockedByObstacles;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

AgentSpec default_spec(AgentKind kind);

std::string kind_to_string(AgentKind kind);
AgentKind kind_from_string(const std::string& s);  // ParseError on anything else

struct AgentState {
  int id = 0;
  AgentSpec spec;
  Cell position;
};

// What one agent senses from where it stands: a visibility mask plus the
// obstacles and targets inside it. Cells outside the mask are unknown.
class Observation {
 public:
  Observation(int width, int height, std::vector<std::uint8_t> visible,
              std::vector<std::uint8_t> obstacle_seen, std::vector<Cell> seen_targets);

  int width() const { return width_; }
  int height() const { return height_; }

  bool is_visible(Cell c) const { return visible_[index(c)] != 0; }
  bool is_seen_obstacle(Cell c) const { return obstacle_seen_[index(c)] != 0; }
  int index(Cell c) const { return c.y * width_ + c.x; }

  const std::vector<std::uint8_t>& visible_mask() const { return visible_; }
  std::vector<Cell> seen_obstacles() const;            // row-major order
  const std::vector<Cell>& seen_targets() const { return seen_targets_; }  // row-major order

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> visible_;
  std::vector<std::uint8_t> obstacle_seen_;
  std::vector<Cell> seen_targets_;
};

// A cell is visible when it lies within r_sense and the straight discrete
// line from the agent to it crosses no obstacle strictly between the
// endpoints. Obstacles at the edge of sight are themselves visible; the own
// cell always is.
Observation observe(const GridWorld& world, const AgentState& agent);

// Pools several observations: a cell is visible/known when any member sees it.
Observation union_observations(const std::vector<Observation>& observations);

// Roster files: JSON list of agents with optional per-field spec overrides.
void save_roster(const std::vector<AgentState>& agents, const std::string& path);
std::vector<AgentState> load_roster(const std::string& path);

// "2A1G" -> two Uav entries followed by one Ugv entry (default specs).
std::vector<AgentSpec> parse_team(const std::string& team);
std::string team_to_string(const std::vector<AgentSpec>& specs);

std::vector<AgentState> make_team(const std::vector<AgentSpec>& specs,
                                  const std::vector<Cell>& positions);

}  // namespace gatar
