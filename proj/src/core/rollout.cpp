#include "core/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <tuple>

#include "core/allocators.hpp"
#include "core/comms.hpp"
#include "core/dataset.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "json.hpp"

namespace gatar {

namespace {

bool passable(const GridWorld& world, Cell c, Traversal traversal) {
  return traversal == Traversal::FliesOverObstacles || !world.is_obstacle(c);
}

int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

bool xy_before(Cell a, Cell b) { return a.x != b.x ? a.x < b.x : a.y < b.y; }

}  // namespace

std::vector<Cell> a_star_path(const GridWorld& world, Cell start, Cell goal,
                              Traversal traversal) {
  if (!world.in_bounds(start) || !world.in_bounds(goal)) {
    throw ContractError("a_star_path: endpoint outside the grid");
  }
  if (!passable(world, start, traversal) || !passable(world, goal, traversal)) return {};

  const int w = world.width();
  const int h = world.height();
  const auto idx = [&](Cell c) { return static_cast<std::size_t>(c.y) * w + c.x; };
  std::vector<int> g(static_cast<std::size_t>(w) * h, -1);
  std::vector<int> parent(static_cast<std::size_t>(w) * h, -1);

  // (f, h, cell index): ties fall toward the goal, then row-major, so the
  // expansion order and therefore the returned path are deterministic.
  using Entry = std::tuple<int, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g[idx(start)] = 0;
  open.emplace(manhattan(start, goal), manhattan(start, goal), static_cast<int>(idx(start)));

  while (!open.empty()) {
    const auto [f, rest, ci] = open.top();
    open.pop();
    const Cell c{ci % w, ci / w};
    if (f - rest != g[static_cast<std::size_t>(ci)]) continue;  // stale entry
    if (c == goal) break;
    const Cell around[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
    for (const Cell nb : around) {
      if (!world.in_bounds(nb) || !passable(world, nb, traversal)) continue;
      const int step_cost = g[static_cast<std::size_t>(ci)] + 1;
      if (g[idx(nb)] != -1 && g[idx(nb)] <= step_cost) continue;
      g[idx(nb)] = step_cost;
      parent[idx(nb)] = ci;
      open.emplace(step_cost + manhattan(nb, goal), manhattan(nb, goal),
                   static_cast<int>(idx(nb)));
    }
  }

  if (g[idx(goal)] == -1) return {};
  std::vector<Cell> path;
  for (int ci = static_cast<int>(idx(goal)); ci != -1; ci = parent[static_cast<std::size_t>(ci)]) {
    path.push_back({ci % w, ci / w});
  }
  std::reverse(path.begin(), path.end());
  return path;
}

Episode make_episode(const GridWorld& world, const std::vector<AgentState>& team) {
  if (team.empty()) throw ContractError("make_episode: empty team");
  for (const AgentState& agent : team) {
    if (!world.in_bounds(agent.position)) {
      throw ContractError("make_episode: agent outside the grid");
    }
  }
  Episode e{world, team, std::vector<std::optional<Cell>>(team.size()), 0, {}, {}};
  return e;
}

bool episode_done(const Episode& episode, int max_steps) {
  return episode.world.targets().empty() || episode.step_count >= max_steps;
}

namespace {

bool target_remains(const GridWorld& world, Cell c) {
  const auto& ts = world.targets();
  return std::find(ts.begin(), ts.end(), c) != ts.end();
}

}  // namespace

std::optional<Cell> snap_to_target(const Observation& obs, const AgentState& agent,
                                   std::array<double, 2> cell_coords) {
  const std::vector<Cell>& candidates = obs.seen_targets();
  const std::vector<double> times = travel_times(obs, agent, candidates);
  std::optional<Cell> best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!std::isfinite(times[i])) continue;
    const double dx = cell_coords[0] - static_cast<double>(candidates[i].x);
    const double dy = cell_coords[1] - static_cast<double>(candidates[i].y);
    const double d2 = dx * dx + dy * dy;
    if (!best || d2 < best_d2 || (d2 == best_d2 && xy_before(candidates[i], *best))) {
      best = candidates[i];
      best_d2 = d2;
    }
  }
  return best;
}

namespace {

// Pooled team view with every currently claimed target removed, so a
// centralized dispatcher never double-books.
Observation pooled_without(const std::vector<Observation>& observations,
                           const std::vector<std::optional<Cell>>& claimed) {
  const Observation pooled = union_observations(observations);
  const int w = pooled.width();
  const int h = pooled.height();
  std::vector<std::uint8_t> visible(pooled.visible_mask());
  std::vector<std::uint8_t> obstacle_seen(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (pooled.is_seen_obstacle({x, y})) obstacle_seen[pooled.index({x, y})] = 1;
    }
  }
  std::vector<Cell> targets;
  for (const Cell t : pooled.seen_targets()) {
    const bool taken = std::any_of(claimed.begin(), claimed.end(),
                                   [&](const std::optional<Cell>& c) { return c == t; });
    if (!taken) targets.push_back(t);
  }
  return Observation(w, h, std::move(visible), std::move(obstacle_seen), std::move(targets));
}

void allocate_tasks(Episode& e, RolloutPolicy policy, const RolloutOptions& opt, int step,
                    const std::vector<Observation>& obs) {
  std::vector<std::size_t> open_agents;
  for (std::size_t i = 0; i < e.team.size(); ++i) {
    if (!e.committed[i]) open_agents.push_back(i);
  }
  if (open_agents.empty()) return;

  switch (policy) {
    case RolloutPolicy::GreedyNoComm:
      for (const std::size_t i : open_agents) {
        e.committed[i] = greedy_no_comm(e.team[i], obs[i]);
      }
      return;
    case RolloutPolicy::Random:
      for (const std::size_t i : open_agents) {
        Rng rng(Rng::derive(Rng::derive(opt.seed, static_cast<std::uint64_t>(step)),
                            static_cast<std::uint64_t>(i)));
        e.committed[i] = random_select(obs[i], rng);
      }
      return;
    case RolloutPolicy::Expert: {
      const Observation pooled = pooled_without(obs, e.committed);
      std::vector<AgentState> agents;
      for (const std::size_t i : open_agents) agents.push_back(e.team[i]);
      const Assignment picks =
          expert_greedy(agents, std::vector<Observation>(agents.size(), pooled));
      for (std::size_t k = 0; k < open_agents.size(); ++k) {
        e.committed[open_agents[k]] = picks[k];
      }
      return;
    }
    case RolloutPolicy::Gatar: {
      if (opt.model == nullptr) {
        throw ConfigError("gatar rollout policy needs a model");
      }
      const ModelConfig& mc = opt.model->config;
      if (mc.grid_w != e.world.width() || mc.grid_h != e.world.height()) {
        throw ConfigError("gatar rollout: model grid does not match the world");
      }
      std::vector<Tensor> planes;
      planes.reserve(e.team.size());
      for (const AgentState& agent : e.team) {
        planes.push_back(planes_for(e.world, agent, mc.features));
      }
      const CommGraph graph = build_graph(e.team);
      const auto coords = forward_decentralized(*opt.model, planes, graph);
      for (const std::size_t i : open_agents) {
        const auto p = denormalize(coords[i], e.world.width(), e.world.height());
        e.committed[i] = snap_to_target(obs[i], e.team[i], p);
      }
      return;
    }
  }
  throw ContractError("allocate_tasks: unknown policy");
}

}  // namespace

void episode_step(Episode& e, RolloutPolicy policy, const RolloutOptions& opt) {
  if (episode_done(e, opt.max_steps)) throw ContractError("episode_step: episode is done");
  const int step = e.step_count + 1;

  std::vector<Observation> obs;
  obs.reserve(e.team.size());
  for (const AgentState& agent : e.team) obs.push_back(observe(e.world, agent));

  // release finished or hopeless commitments before asking for new tasks
  for (std::size_t i = 0; i < e.team.size(); ++i) {
    if (!opt.commit) {
      e.committed[i].reset();
      continue;
    }
    if (!e.committed[i]) continue;
    const Cell task = *e.committed[i];
    if (!target_remains(e.world, task) ||
        a_star_path(e.world, e.team[i].position, task, e.team[i].spec.traversal).empty()) {
      e.committed[i].reset();
    }
  }

  allocate_tasks(e, policy, opt, step, obs);

  std::vector<Cell> remaining = e.world.targets();
  for (std::size_t i = 0; i < e.team.size(); ++i) {
    if (!e.committed[i]) continue;
    const std::vector<Cell> path =
        a_star_path(e.world, e.team[i].position, *e.committed[i], e.team[i].spec.traversal);
    if (path.size() < 2) continue;  // already there or no longer reachable
    const std::size_t moves =
        std::min<std::size_t>(static_cast<std::size_t>(e.team[i].spec.speed), path.size() - 1);
    for (std::size_t k = 1; k <= moves; ++k) {
      e.team[i].position = path[k];
      const auto hit = std::find(remaining.begin(), remaining.end(), path[k]);
      if (hit != remaining.end()) {
        e.events.push_back({step, static_cast<int>(i), *hit});
        remaining.erase(hit);
      }
    }
  }

  e.world = e.world.with_targets(remaining);
  e.step_count = step;
  std::vector<Cell> positions;
  for (const AgentState& agent : e.team) positions.push_back(agent.position);
  e.log.push_back({std::move(positions), e.committed, std::move(remaining)});
}

Episode run_episode(const GridWorld& world, const std::vector<AgentState>& team,
                    RolloutPolicy policy, const RolloutOptions& opt) {
  if (opt.max_steps < 1) throw ConfigError("run_episode: max_steps must be at least 1");
  Episode e = make_episode(world, team);
  while (!episode_done(e, opt.max_steps)) episode_step(e, policy, opt);
  return e;
}

std::optional<int> steps_to_completion(const Episode& episode) {
  if (!episode.world.targets().empty()) return std::nullopt;
  return episode.step_count;
}

namespace {

nlohmann::json cell_to_json(Cell c) { return nlohmann::json{c.x, c.y}; }

nlohmann::json task_to_json(const std::optional<Cell>& c) {
  return c ? cell_to_json(*c) : nlohmann::json();
}

Cell cell_from_json(const nlohmann::json& j, const GridWorld& world) {
  const Cell c{j.at(0).get<int>(), j.at(1).get<int>()};
  if (!world.in_bounds(c)) throw ParseError("episode file: cell outside the grid");
  return c;
}

std::optional<Cell> task_from_json(const nlohmann::json& j, const GridWorld& world) {
  if (j.is_null()) return std::nullopt;
  return cell_from_json(j, world);
}

}  // namespace

std::string episode_to_json(const Episode& e) {
  nlohmann::json j;
  j["format"] = 1;
  j["world"] = nlohmann::json::parse(world_to_json(e.world));
  nlohmann::json team = nlohmann::json::array();
  for (const AgentState& a : e.team) {
    team.push_back(
        {{"id", a.id},
         {"kind", kind_to_string(a.spec.kind)},
         {"speed", a.spec.speed},
         {"r_sense", a.spec.r_sense},
         {"r_comm", a.spec.r_comm},
         {"op_range", a.spec.op_range},
         {"traversal", a.spec.traversal == Traversal::FliesOverObstacles ? "flies" : "ground"},
         {"position", cell_to_json(a.position)}});
  }
  j["team"] = team;
  nlohmann::json committed = nlohmann::json::array();
  for (const auto& c : e.committed) committed.push_back(task_to_json(c));
  j["committed"] = committed;
  j["step_count"] = e.step_count;
  nlohmann::json log = nlohmann::json::array();
  for (const StepRecord& rec : e.log) {
    nlohmann::json positions = nlohmann::json::array();
    for (const Cell c : rec.positions) positions.push_back(cell_to_json(c));
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : rec.tasks) tasks.push_back(task_to_json(t));
    nlohmann::json remaining = nlohmann::json::array();
    for (const Cell c : rec.remaining) remaining.push_back(cell_to_json(c));
    log.push_back({{"positions", std::move(positions)},
                   {"tasks", std::move(tasks)},
                   {"remaining", std::move(remaining)}});
  }
  j["log"] = log;
  nlohmann::json events = nlohmann::json::array();
  for (const LocalizationEvent& ev : e.events) {
    events.push_back({{"step", ev.step}, {"agent", ev.agent}, {"target", cell_to_json(ev.target)}});
  }
  j["events"] = events;
  return j.dump(2) + "\n";
}

Episode episode_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", 0) != 1) throw ParseError("episode file: unsupported format");
    GridWorld world = world_from_json(j.at("world").dump());

    std::vector<AgentState> team;
    for (const auto& entry : j.at("team")) {
      AgentState a;
      a.id = entry.at("id").get<int>();
      a.spec = default_spec(kind_from_string(entry.at("kind").get<std::string>()));
      a.spec.speed = entry.at("speed").get<int>();
      a.spec.r_sense = entry.at("r_sense").get<double>();
      a.spec.r_comm = entry.at("r_comm").get<double>();
      a.spec.op_range = entry.at("op_range").get<int>();
      const std::string traversal = entry.at("traversal").get<std::string>();
      if (traversal != "flies" && traversal != "ground") {
        throw ParseError("episode file: unknown traversal \"" + traversal + "\"");
      }
      a.spec.traversal = traversal == "flies" ? Traversal::FliesOverObstacles
                                              : Traversal::BlockedByObstacles;
      a.position = cell_from_json(entry.at("position"), world);
      team.push_back(a);
    }
    if (team.empty()) throw ParseError("episode file: empty team");
    const std::size_t n = team.size();

    Episode e{std::move(world), std::move(team), {}, 0, {}, {}};
    for (const auto& c : j.at("committed")) e.committed.push_back(task_from_json(c, e.world));
    if (e.committed.size() != n) throw ParseError("episode file: committed size mismatch");
    e.step_count = j.at("step_count").get<int>();

    for (const auto& rec : j.at("log")) {
      StepRecord r;
      for (const auto& c : rec.at("positions")) r.positions.push_back(cell_from_json(c, e.world));
      for (const auto& t : rec.at("tasks")) r.tasks.push_back(task_from_json(t, e.world));
      for (const auto& c : rec.at("remaining")) r.remaining.push_back(cell_from_json(c, e.world));
      if (r.positions.size() != n || r.tasks.size() != n) {
        throw ParseError("episode file: log record size mismatch");
      }
      e.log.push_back(std::move(r));
    }
    if (static_cast<int>(e.log.size()) != e.step_count) {
      throw ParseError("episode file: step_count does not match the log");
    }

    for (const auto& ev : j.at("events")) {
      LocalizationEvent event;
      event.step = ev.at("step").get<int>();
      event.agent = ev.at("agent").get<int>();
      event.target = cell_from_json(ev.at("target"), e.world);
      if (event.agent < 0 || event.agent >= static_cast<int>(n) || event.step < 1 ||
          event.step > e.step_count) {
        throw ParseError("episode file: event out of range");
      }
      e.events.push_back(event);
    }
    return e;
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(std::string("episode file: ") + err.what());
  }
}

void save_episode(const Episode& episode, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_episode: cannot open " + path + " for writing");
  out << episode_to_json(episode);
  if (!out) throw IoError("save_episode: write to " + path + " failed");
}

Episode load_episode(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_episode: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return episode_from_json(buffer.str());
}

}  // namespace gatar
