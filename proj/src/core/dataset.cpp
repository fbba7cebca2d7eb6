#include "core/dataset.hpp"

#include <fstream>
#include <utility>

#include <json.hpp>

#include "core/allocators.hpp"
#include "core/binio.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace gatar {

namespace {

constexpr int kPlacementAttempts = 100;

void write_tensor(std::ostream& out, const Tensor& t) {
  write_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (const int d : t.shape) write_u32(out, static_cast<std::uint32_t>(d));
  for (const double v : t.data) write_f64(out, v);
}

Tensor read_tensor(std::istream& in) {
  const std::uint32_t rank = read_u32(in);
  if (rank == 0 || rank > 4) throw ParseError("dataset: tensor rank out of range");
  std::vector<int> shape;
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = read_u32(in);
    if (d == 0 || d > (1u << 20)) throw ParseError("dataset: tensor dimension out of range");
    shape.push_back(static_cast<int>(d));
    count *= d;
  }
  if (count > (1u << 24)) throw ParseError("dataset: tensor too large");
  Tensor t(std::move(shape));
  for (double& v : t.data) v = read_f64(in);
  return t;
}

void write_agent(std::ostream& out, const AgentState& a) {
  write_u32(out, static_cast<std::uint32_t>(a.id));
  write_u32(out, a.spec.kind == AgentKind::Uav ? 0 : 1);
  write_u32(out, static_cast<std::uint32_t>(a.spec.speed));
  write_f64(out, a.spec.r_sense);
  write_f64(out, a.spec.r_comm);
  write_u32(out, static_cast<std::uint32_t>(a.spec.op_range));
  write_u32(out, a.spec.traversal == Traversal::FliesOverObstacles ? 0 : 1);
  write_u32(out, static_cast<std::uint32_t>(a.position.x));
  write_u32(out, static_cast<std::uint32_t>(a.position.y));
}

AgentState read_agent(std::istream& in) {
  AgentState a;
  a.id = static_cast<int>(read_u32(in));
  const std::uint32_t kind = read_u32(in);
  if (kind > 1) throw ParseError("dataset: unknown agent kind code");
  a.spec.kind = kind == 0 ? AgentKind::Uav : AgentKind::Ugv;
  a.spec.speed = static_cast<int>(read_u32(in));
  a.spec.r_sense = read_f64(in);
  a.spec.r_comm = read_f64(in);
  a.spec.op_range = static_cast<int>(read_u32(in));
  const std::uint32_t traversal = read_u32(in);
  if (traversal > 1) throw ParseError("dataset: unknown traversal code");
  a.spec.traversal = traversal == 0 ? Traversal::FliesOverObstacles : Traversal::BlockedByObstacles;
  a.position.x = static_cast<int>(read_u32(in));
  a.position.y = static_cast<int>(read_u32(in));
  return a;
}

}  // namespace

std::string DatasetConfig::to_json() const {
  nlohmann::json j;
  j["world"] = {{"width", world.width},
                {"height", world.height},
                {"subarea_rows", world.subarea_rows},
                {"subarea_cols", world.subarea_cols},
                {"rich_count", world.rich_count},
                {"obstacle_density", world.obstacle_density}};
  j["team"] = team;
  j["maps"] = maps;
  j["placements_per_map"] = placements_per_map;
  j["targets_per_agent"] = targets_per_agent;
  j["features"] = {{"sigma", features.sigma},
                   {"cost_map", features.cost_map},
                   {"gaussian_targets", features.gaussian_targets},
                   {"product", features.product}};
  return j.dump();
}

DatasetConfig DatasetConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("dataset config: expected a JSON object");
  DatasetConfig c;
  try {
    if (j.contains("world")) {
      const auto& w = j.at("world");
      c.world.width = w.value("width", c.world.width);
      c.world.height = w.value("height", c.world.height);
      c.world.subarea_rows = w.value("subarea_rows", c.world.subarea_rows);
      c.world.subarea_cols = w.value("subarea_cols", c.world.subarea_cols);
      c.world.rich_count = w.value("rich_count", c.world.rich_count);
      c.world.obstacle_density = w.value("obstacle_density", c.world.obstacle_density);
    }
    c.team = j.value("team", c.team);
    c.maps = j.value("maps", c.maps);
    c.placements_per_map = j.value("placements_per_map", c.placements_per_map);
    c.targets_per_agent = j.value("targets_per_agent", c.targets_per_agent);
    if (j.contains("features")) {
      const auto& f = j.at("features");
      c.features.sigma = f.value("sigma", c.features.sigma);
      c.features.cost_map = f.value("cost_map", c.features.cost_map);
      c.features.gaussian_targets = f.value("gaussian_targets", c.features.gaussian_targets);
      c.features.product = f.value("product", c.features.product);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset config: ") + e.what());
  }
  if (c.maps <= 0 || c.placements_per_map <= 0 || c.targets_per_agent <= 0) {
    throw ConfigError("dataset config: counts must be positive");
  }
  parse_team(c.team);  // validates the composition string
  return c;
}

bool is_validation(const Dataset& ds, std::size_t index) {
  const int p = ds.samples[index].placement;
  return p >= ds.config.placements_per_map * 4 / 5;
}

Tensor planes_for(const GridWorld& world, const AgentState& agent, const FeatureOptions& options) {
  const Observation obs = observe(world, agent);
  return feature_map_to_tensor(build_feature_map(obs, agent, options));
}

std::vector<Tensor> planes_with(const Sample& s, const FeatureOptions& options) {
  std::vector<Tensor> planes;
  planes.reserve(s.team.size());
  for (const AgentState& a : s.team) planes.push_back(planes_for(s.world, a, options));
  return planes;
}

std::vector<std::optional<std::array<double, 2>>> expert_labels(
    const GridWorld& world, const std::vector<AgentState>& team) {
  std::vector<Observation> obs;
  obs.reserve(team.size());
  for (const AgentState& a : team) obs.push_back(observe(world, a));
  const Assignment assignment = expert_greedy(team, obs);
  std::vector<std::optional<std::array<double, 2>>> labels(team.size());
  for (std::size_t i = 0; i < team.size(); ++i) {
    if (assignment[i]) labels[i] = normalize_cell(*assignment[i], world.width(), world.height());
  }
  return labels;
}

Dataset generate_dataset(const DatasetConfig& config, std::uint64_t seed) {
  const std::vector<AgentSpec> specs = parse_team(config.team);
  const int n_agents = static_cast<int>(specs.size());
  const int n_targets = config.targets_per_agent * n_agents;

  Dataset ds;
  ds.config = config;
  ds.seed = seed;
  ds.samples.reserve(static_cast<std::size_t>(config.maps) *
                     static_cast<std::size_t>(config.placements_per_map));

  for (int m = 0; m < config.maps; ++m) {
    const std::uint64_t map_seed = Rng::derive(seed, static_cast<std::uint64_t>(m));
    const GridWorld base = generate_world(config.world, map_seed);
    for (int p = 0; p < config.placements_per_map; ++p) {
      const std::uint64_t placement_seed =
          Rng::derive(map_seed, 101 + static_cast<std::uint64_t>(p));
      bool placed = false;
      for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
        const Placement pl = place_entities(
            base, n_agents, n_targets,
            Rng::derive(placement_seed, static_cast<std::uint64_t>(attempt)));
        GridWorld world = base.with_targets(pl.targets);
        std::vector<AgentState> team = make_team(specs, pl.agents);
        auto labels = expert_labels(world, team);
        bool any = false;
        for (const auto& l : labels) any = any || l.has_value();
        if (!any) continue;  // nobody saw a target; draw fresh positions

        std::vector<Tensor> planes;
        planes.reserve(team.size());
        for (const AgentState& a : team) planes.push_back(planes_for(world, a, config.features));
        CommGraph graph = build_graph(team);
        ds.samples.push_back(Sample{map_seed, p, std::move(world), std::move(team),
                                    std::move(planes), std::move(graph), std::move(labels)});
        placed = true;
      }
      if (!placed) {
        throw RuntimeFailure("dataset: no placement with a visible target after " +
                             std::to_string(kPlacementAttempts) + " draws (map seed " +
                             std::to_string(map_seed) + ")");
      }
    }
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("dataset: cannot open for writing: " + path);
  out.write("GTDS", 4);
  write_u32(out, 1);
  write_string(out, ds.config.to_json());
  write_u64(out, ds.seed);
  write_u32(out, static_cast<std::uint32_t>(ds.samples.size()));
  for (const Sample& s : ds.samples) {
    write_u64(out, s.map_seed);
    write_u32(out, static_cast<std::uint32_t>(s.placement));
    write_string(out, world_to_json(s.world));
    write_u32(out, static_cast<std::uint32_t>(s.team.size()));
    for (const AgentState& a : s.team) write_agent(out, a);
    for (const Tensor& t : s.planes) write_tensor(out, t);
    const int n = s.graph.size();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        out.put(s.graph.adjacent(i, j) ? 1 : 0);
      }
    }
    for (const auto& label : s.labels) {
      out.put(label ? 1 : 0);
      if (label) {
        write_f64(out, (*label)[0]);
        write_f64(out, (*label)[1]);
      }
    }
  }
  if (!out) throw IoError("dataset: write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("dataset: cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "GTDS") {
    throw ParseError("dataset: not a dataset file: " + path);
  }
  const std::uint32_t version = read_u32(in);
  if (version != 1) throw ParseError("dataset: unsupported version " + std::to_string(version));

  Dataset ds;
  ds.config = DatasetConfig::from_json(read_string(in));
  ds.seed = read_u64(in);
  const std::uint32_t count = read_u32(in);
  if (count > (1u << 24)) throw ParseError("dataset: sample count out of range");
  ds.samples.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint64_t map_seed = read_u64(in);
    const int placement = static_cast<int>(read_u32(in));
    GridWorld world = world_from_json(read_string(in));
    const std::uint32_t n = read_u32(in);
    if (n == 0 || n > 64) throw ParseError("dataset: team size out of range");
    std::vector<AgentState> team;
    team.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) team.push_back(read_agent(in));
    std::vector<Tensor> planes;
    planes.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) planes.push_back(read_tensor(in));
    CommGraph graph(static_cast<int>(n));
    std::vector<char> adj(static_cast<std::size_t>(n) * n);
    in.read(adj.data(), static_cast<std::streamsize>(adj.size()));
    if (!in) throw ParseError("dataset: truncated adjacency");
    for (std::uint32_t i = 0; i < n; ++i) {
      if (adj[static_cast<std::size_t>(i) * n + i] != 0) {
        throw ParseError("dataset: adjacency has a self edge");
      }
      for (std::uint32_t j = i + 1; j < n; ++j) {
        const char ij = adj[static_cast<std::size_t>(i) * n + j];
        const char ji = adj[static_cast<std::size_t>(j) * n + i];
        if (ij != ji) throw ParseError("dataset: adjacency not symmetric");
        if (ij) graph.set_adjacent(static_cast<int>(i), static_cast<int>(j));
      }
    }
    std::vector<std::optional<std::array<double, 2>>> labels(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const int flag = in.get();
      if (flag != 0 && flag != 1) throw ParseError("dataset: bad label flag");
      if (flag == 1) {
        const double x = read_f64(in);
        const double y = read_f64(in);
        labels[i] = std::array<double, 2>{x, y};
      }
    }
    ds.samples.push_back(Sample{map_seed, placement, std::move(world), std::move(team),
                                std::move(planes), std::move(graph), std::move(labels)});
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("dataset: trailing bytes after last sample");
  }
  return ds;
}

}  // namespace gatar
