#pragma once

#include <array>
#include <vector>

#include "core/agent.hpp"

namespace gatar {

// Input planes fed to the policy, all H*W row-major:
//   0  mobility-aware reachability: speed / (path_length + 1), 0 when the cell
//      is invisible, untraversable, or farther than op_range
//   1  target likelihood: per-cell max of unit Gaussians centred on each seen
//      target
//   2  observed obstacle mask
//   3  pixel-wise product of planes 0 and 1
struct FeatureMap {
  int width = 0;
  int height = 0;
  std::array<std::vector<double>, 4> channels;
};

// Ablation switches. A disabled plane falls back to the raw, unengineered
// signal: visible traversable cells for the cost map, a 0/1 seen-target mask
// for the Gaussian, zeros for the product.
struct FeatureOptions {
  double sigma = 1.0;
  bool cost_map = true;
  bool gaussian_targets = true;
  bool product = true;

  friend bool operator==(const FeatureOptions&, const FeatureOptions&) = default;
};

// 4-connected shortest path lengths from `start` through visible traversable
// cells, -1 where unreachable. FliesOverObstacles ignores seen obstacles;
// unknown terrain always blocks. max_steps >= 0 stops expanding past that
// length; -1 means unlimited.
std::vector<int> shortest_path_lengths(const Observation& obs, Cell start, Traversal traversal,
                                       int max_steps = -1);

// 4-connected shortest paths from the agent through visible traversable
// cells. Flying agents traverse obstacles; ground agents do not. Cells beyond
// op_range steps score 0.
std::vector<double> extended_cost_map(const Observation& obs, const AgentState& agent);

std::vector<double> gaussian_target_map(const Observation& obs, double sigma);

FeatureMap build_feature_map(const Observation& obs, const AgentState& agent,
                             const FeatureOptions& options = {});

}  // namespace gatar
