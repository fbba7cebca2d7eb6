#include "core/featurize.hpp"

#include <cmath>
#include <queue>

#include "core/errors.hpp"

namespace gatar {

namespace {

bool traversable(const Observation& obs, Traversal traversal, Cell c) {
  if (!obs.is_visible(c)) return false;  // unknown terrain counts as blocked
  if (traversal == Traversal::FliesOverObstacles) return true;
  return !obs.is_seen_obstacle(c);
}

}  // namespace

std::vector<int> shortest_path_lengths(const Observation& obs, Cell start, Traversal traversal,
                                       int max_steps) {
  const int w = obs.width();
  const int h = obs.height();
  if (start.x < 0 || start.x >= w || start.y < 0 || start.y >= h) {
    throw ContractError("shortest_path_lengths: start cell out of bounds");
  }
  constexpr int kUnreached = -1;
  std::vector<int> length(static_cast<std::size_t>(w * h), kUnreached);
  if (!traversable(obs, traversal, start)) return length;

  std::queue<Cell> frontier;
  length[static_cast<std::size_t>(obs.index(start))] = 0;
  frontier.push(start);
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop();
    const int len = length[static_cast<std::size_t>(obs.index(c))];
    if (max_steps >= 0 && len >= max_steps) continue;
    const Cell steps[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
    for (const Cell n : steps) {
      if (n.x < 0 || n.x >= w || n.y < 0 || n.y >= h) continue;
      auto& slot = length[static_cast<std::size_t>(obs.index(n))];
      if (slot != kUnreached || !traversable(obs, traversal, n)) continue;
      slot = len + 1;
      frontier.push(n);
    }
  }
  return length;
}

std::vector<double> extended_cost_map(const Observation& obs, const AgentState& agent) {
  if (!obs.is_visible(agent.position)) {
    throw ContractError("extended_cost_map: agent position not inside the observation");
  }
  const std::vector<int> length = shortest_path_lengths(obs, agent.position, agent.spec.traversal,
                                                        agent.spec.op_range);
  std::vector<double> map(length.size(), 0.0);
  const double speed = static_cast<double>(agent.spec.speed);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (length[i] != -1) map[i] = speed / static_cast<double>(length[i] + 1);
  }
  return map;
}

std::vector<double> gaussian_target_map(const Observation& obs, double sigma) {
  if (sigma <= 0.0) throw ContractError("gaussian_target_map: sigma must be positive");
  const int w = obs.width();
  const int h = obs.height();
  std::vector<double> map(static_cast<std::size_t>(w * h), 0.0);
  const double denom = 2.0 * sigma * sigma;
  for (const Cell t : obs.seen_targets()) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double value = std::exp(-static_cast<double>(squared_distance({x, y}, t)) / denom);
        auto& slot = map[static_cast<std::size_t>(y * w + x)];
        if (value > slot) slot = value;  // overlapping targets keep the peak at 1
      }
    }
  }
  return map;
}

FeatureMap build_feature_map(const Observation& obs, const AgentState& agent,
                             const FeatureOptions& options) {
  const int w = obs.width();
  const int h = obs.height();
  const std::size_t n = static_cast<std::size_t>(w * h);
  FeatureMap fm;
  fm.width = w;
  fm.height = h;

  if (options.cost_map) {
    fm.channels[0] = extended_cost_map(obs, agent);
  } else {
    fm.channels[0].assign(n, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (traversable(obs, agent.spec.traversal, {x, y})) {
          fm.channels[0][static_cast<std::size_t>(y * w + x)] = 1.0;
        }
      }
    }
  }

  if (options.gaussian_targets) {
    fm.channels[1] = gaussian_target_map(obs, options.sigma);
  } else {
    fm.channels[1].assign(n, 0.0);
    for (const Cell t : obs.seen_targets()) {
      fm.channels[1][static_cast<std::size_t>(obs.index(t))] = 1.0;
    }
  }

  fm.channels[2].assign(n, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (obs.is_seen_obstacle({x, y})) fm.channels[2][static_cast<std::size_t>(y * w + x)] = 1.0;
    }
  }

  fm.channels[3].assign(n, 0.0);
  if (options.product) {
    for (std::size_t i = 0; i < n; ++i) {
      fm.channels[3][i] = fm.channels[0][i] * fm.channels[1][i];
    }
  }
  return fm;
}

}  // namespace gatar
