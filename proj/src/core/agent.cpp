#include "core/agent.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"
#include "json.hpp"

namespace gatar {

AgentSpec default_spec(AgentKind kind) {
  AgentSpec spec;
  spec.kind = kind;
  if (kind == AgentKind::Uav) {
    spec.speed = 2;
    spec.op_range = 60;
    spec.traversal = Traversal::FliesOverObstacles;
  } else {
    spec.speed = 1;
    spec.op_range = 120;
    spec.traversal = Traversal::BlockedByObstacles;
  }
  spec.r_sense = 4.0;
  spec.r_comm = 6.0;
  return spec;
}

Observation::Observation(int width, int height, std::vector<std::uint8_t> visible,
                         std::vector<std::uint8_t> obstacle_seen, std::vector<Cell> seen_targets)
    : width_(width),
      height_(height),
      visible_(std::move(visible)),
      obstacle_seen_(std::move(obstacle_seen)),
      seen_targets_(std::move(seen_targets)) {}

std::vector<Cell> Observation::seen_obstacles() const {
  std::vector<Cell> cells;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (obstacle_seen_[static_cast<std::size_t>(y * width_ + x)]) cells.push_back({x, y});
    }
  }
  return cells;
}

Observation observe(const GridWorld& world, const AgentState& agent) {
  if (!world.in_bounds(agent.position)) {
    throw ContractError("observe: agent stands outside the grid");
  }
  const int w = world.width();
  const int h = world.height();
  std::vector<std::uint8_t> visible(static_cast<std::size_t>(w * h), 0);
  std::vector<std::uint8_t> obstacle_seen(static_cast<std::size_t>(w * h), 0);

  const Cell p = agent.position;
  const double r = agent.spec.r_sense;
  const int reach = static_cast<int>(r);
  for (int y = std::max(0, p.y - reach); y <= std::min(h - 1, p.y + reach); ++y) {
    for (int x = std::max(0, p.x - reach); x <= std::min(w - 1, p.x + reach); ++x) {
      const Cell c{x, y};
      if (euclidean_distance(p, c) > r) continue;
      const std::vector<Cell> line = bresenham_line(p, c);
      bool blocked = false;
      for (std::size_t i = 1; i + 1 < line.size(); ++i) {
        if (world.is_obstacle(line[i])) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      visible[static_cast<std::size_t>(world.index(c))] = 1;
      if (world.is_obstacle(c)) obstacle_seen[static_cast<std::size_t>(world.index(c))] = 1;
    }
  }

  std::vector<Cell> seen_targets;
  for (const Cell t : world.targets()) {
    if (visible[static_cast<std::size_t>(world.index(t))]) seen_targets.push_back(t);
  }
  std::sort(seen_targets.begin(), seen_targets.end());
  return Observation(w, h, std::move(visible), std::move(obstacle_seen),
                     std::move(seen_targets));
}

Observation union_observations(const std::vector<Observation>& observations) {
  if (observations.empty()) {
    throw ContractError("union_observations: need at least one observation");
  }
  const int w = observations.front().width();
  const int h = observations.front().height();
  std::vector<std::uint8_t> visible(static_cast<std::size_t>(w * h), 0);
  std::vector<std::uint8_t> obstacle_seen(static_cast<std::size_t>(w * h), 0);
  std::vector<Cell> targets;
  for (const Observation& obs : observations) {
    if (obs.width() != w || obs.height() != h) {
      throw ContractError("union_observations: mismatched grid dimensions");
    }
    for (std::size_t i = 0; i < visible.size(); ++i) {
      visible[i] |= obs.visible_mask()[i];
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (obs.is_seen_obstacle({x, y})) obstacle_seen[static_cast<std::size_t>(y * w + x)] = 1;
      }
    }
    targets.insert(targets.end(), obs.seen_targets().begin(), obs.seen_targets().end());
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  return Observation(w, h, std::move(visible), std::move(obstacle_seen), std::move(targets));
}

std::string kind_to_string(AgentKind kind) { return kind == AgentKind::Uav ? "uav" : "ugv"; }

AgentKind kind_from_string(const std::string& s) {
  if (s == "uav") return AgentKind::Uav;
  if (s == "ugv") return AgentKind::Ugv;
  throw ParseError("unknown agent kind \"" + s + "\" (expected uav or ugv)");
}

void save_roster(const std::vector<AgentState>& agents, const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const AgentState& a : agents) {
    const AgentSpec defaults = default_spec(a.spec.kind);
    nlohmann::json entry;
    entry["kind"] = kind_to_string(a.spec.kind);
    entry["position"] = {a.position.x, a.position.y};
    if (a.spec.speed != defaults.speed) entry["speed"] = a.spec.speed;
    if (a.spec.r_sense != defaults.r_sense) entry["r_sense"] = a.spec.r_sense;
    if (a.spec.r_comm != defaults.r_comm) entry["r_comm"] = a.spec.r_comm;
    if (a.spec.op_range != defaults.op_range) entry["op_range"] = a.spec.op_range;
    if (a.spec.traversal != defaults.traversal) {
      entry["traversal"] =
          a.spec.traversal == Traversal::FliesOverObstacles ? "flies" : "ground";
    }
    arr.push_back(entry);
  }
  nlohmann::json j;
  j["format"] = 1;
  j["agents"] = arr;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_roster: cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("save_roster: write to " + path + " failed");
}

std::vector<AgentState> load_roster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_roster: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("roster file: invalid JSON: ") + e.what());
  }
  if (j.value("format", 0) != 1) {
    throw ParseError("roster file: missing or unsupported format version (expected 1)");
  }
  if (!j.contains("agents") || !j["agents"].is_array()) {
    throw ParseError("roster file: missing agents array");
  }
  std::vector<AgentState> agents;
  int id = 0;
  for (const auto& entry : j["agents"]) {
    if (!entry.contains("kind") || !entry.contains("position")) {
      throw ParseError("roster file: each agent needs kind and position");
    }
    AgentState a;
    a.id = id++;
    a.spec = default_spec(kind_from_string(entry["kind"].get<std::string>()));
    const auto& pos = entry["position"];
    if (!pos.is_array() || pos.size() != 2) {
      throw ParseError("roster file: position must be [x, y]");
    }
    a.position = {pos[0].get<int>(), pos[1].get<int>()};
    if (entry.contains("speed")) a.spec.speed = entry["speed"].get<int>();
    if (entry.contains("r_sense")) a.spec.r_sense = entry["r_sense"].get<double>();
    if (entry.contains("r_comm")) a.spec.r_comm = entry["r_comm"].get<double>();
    if (entry.contains("op_range")) a.spec.op_range = entry["op_range"].get<int>();
    if (entry.contains("traversal")) {
      const std::string t = entry["traversal"].get<std::string>();
      if (t == "flies") {
        a.spec.traversal = Traversal::FliesOverObstacles;
      } else if (t == "ground") {
        a.spec.traversal = Traversal::BlockedByObstacles;
      } else {
        throw ParseError("roster file: traversal must be flies or ground");
      }
    }
    if (a.spec.speed <= 0 || a.spec.r_sense < 0 || a.spec.r_comm < 0 || a.spec.op_range < 0) {
      throw ParseError("roster file: spec values out of range");
    }
    agents.push_back(a);
  }
  return agents;
}

std::vector<AgentSpec> parse_team(const std::string& team) {
  // Accepts "<m>A<n>G" case-insensitively, e.g. "2A2G" or "1a3g".
  const auto fail = [&] {
    throw ConfigError("team \"" + team + "\" is not of the form <int>A<int>G");
  };
  std::size_t i = 0;
  auto read_int = [&]() -> int {
    std::size_t start = i;
    while (i < team.size() && std::isdigit(static_cast<unsigned char>(team[i]))) ++i;
    if (i == start) fail();
    return std::stoi(team.substr(start, i - start));
  };
  const int uavs = read_int();
  if (i >= team.size() || std::toupper(static_cast<unsigned char>(team[i])) != 'A') fail();
  ++i;
  const int ugvs = read_int();
  if (i >= team.size() || std::toupper(static_cast<unsigned char>(team[i])) != 'G') fail();
  ++i;
  if (i != team.size()) fail();
  if (uavs + ugvs <= 0) throw ConfigError("team \"" + team + "\" has no agents");
  std::vector<AgentSpec> specs;
  for (int k = 0; k < uavs; ++k) specs.push_back(default_spec(AgentKind::Uav));
  for (int k = 0; k < ugvs; ++k) specs.push_back(default_spec(AgentKind::Ugv));
  return specs;
}

std::string team_to_string(const std::vector<AgentSpec>& specs) {
  int uavs = 0;
  int ugvs = 0;
  for (const AgentSpec& s : specs) (s.kind == AgentKind::Uav ? uavs : ugvs)++;
  return std::to_string(uavs) + "A" + std::to_string(ugvs) + "G";
}

std::vector<AgentState> make_team(const std::vector<AgentSpec>& specs,
                                  const std::vector<Cell>& positions) {
  if (specs.size() != positions.size()) {
    throw ContractError("make_team: spec and position counts differ");
  }
  std::vector<AgentState> agents(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    agents[i].id = static_cast<int>(i);
    agents[i].spec = specs[i];
    agents[i].position = positions[i];
  }
  return agents;
}

}  // namespace gatar
