#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/geometry.hpp"

namespace gatar {

// Partition of the grid into equal rectangular sub-areas; obstacles are
// sampled only inside the ones tagged rich.
struct SubareaLayout {
  int rows = 3;
  int cols = 3;
  std::vector<int> rich;  // sorted sub-area indices, index = row * cols + col

  friend bool operator==(const SubareaLayout&, const SubareaLayout&) = default;
};

struct WorldConfig {
  int width = 15;
  int height = 15;
  int subarea_rows = 3;
  int subarea_cols = 3;
  int rich_count = 4;
  double obstacle_density = 0.3;  // fraction of each rich sub-area turned to obstacle
};

// Static occupancy grid. Origin is the top-left cell, x grows right, y grows
// down. Immutable after construction; placement helpers return new copies.
class GridWorld {
 public:
  GridWorld(int width, int height, std::vector<Cell> obstacles, std::vector<Cell> targets,
            std::optional<SubareaLayout> subareas, std::uint64_t seed);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint64_t seed() const { return seed_; }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
  }
  bool is_obstacle(Cell c) const { return obstacle_mask_[index(c)] != 0; }
  int index(Cell c) const { return c.y * width_ + c.x; }

  const std::vector<Cell>& obstacles() const { return obstacles_; }  // sorted row-major
  const std::vector<Cell>& targets() const { return targets_; }
  const std::optional<SubareaLayout>& subareas() const { return subareas_; }

  int subarea_of(Cell c) const;  // requires subareas() to be present

  std::vector<Cell> free_cells() const;  // non-obstacle cells, row-major

  // Same grid with a different target set (placement happens after generation).
  GridWorld with_targets(std::vector<Cell> targets) const;

  friend bool operator==(const GridWorld& a, const GridWorld& b);

 private:
  int width_;
  int height_;
  std::vector<Cell> obstacles_;
  std::vector<Cell> targets_;
  std::vector<std::uint8_t> obstacle_mask_;
  std::optional<SubareaLayout> subareas_;
  std::uint64_t seed_;
};

// Deterministic for a fixed (config, seed). Regenerates with a derived seed
// when the ground-traversable free space comes out disconnected; gives up
// with ConfigError after 100 attempts.
GridWorld generate_world(const WorldConfig& config, std::uint64_t seed);

struct Placement {
  std::vector<Cell> agents;
  std::vector<Cell> targets;
};

// Samples n_agents + n_targets distinct free cells uniformly. Throws
// ConfigError when the world lacks enough free cells.
Placement place_entities(const GridWorld& world, int n_agents, int n_targets,
                         std::uint64_t seed);

// True when every non-obstacle cell can reach every other through 4-connected
// non-obstacle moves.
bool ground_free_space_connected(const GridWorld& world);

// JSON world files, format version 1. save/load round-trip exactly.
void save_world(const GridWorld& world, const std::string& path);
GridWorld load_world(const std::string& path);
std::string world_to_json(const GridWorld& world);
GridWorld world_from_json(const std::string& text);

}  // namespace gatar
