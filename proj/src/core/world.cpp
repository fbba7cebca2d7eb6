#include "core/world.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "json.hpp"

namespace gatar {

namespace {

void validate_config(const WorldConfig& c) {
  std::ostringstream err;
  if (c.width <= 0 || c.height <= 0) {
    err << "world dimensions must be positive, got " << c.width << "x" << c.height;
  } else if (c.subarea_rows <= 0 || c.subarea_cols <= 0) {
    err << "sub-area grid must be positive, got " << c.subarea_rows << "x" << c.subarea_cols;
  } else if (c.width % c.subarea_cols != 0 || c.height % c.subarea_rows != 0) {
    err << "sub-areas must tile the world exactly: " << c.width << "x" << c.height
        << " is not divisible into " << c.subarea_rows << "x" << c.subarea_cols;
  } else if (c.obstacle_density < 0.0 || c.obstacle_density > 1.0) {
    err << "obstacle density must lie in [0, 1], got " << c.obstacle_density;
  } else if (c.rich_count < 0 || c.rich_count > c.subarea_rows * c.subarea_cols) {
    err << "rich sub-area count " << c.rich_count << " outside [0, "
        << c.subarea_rows * c.subarea_cols << "]";
  } else {
    return;
  }
  throw ConfigError("generate_world: " + err.str());
}

std::vector<Cell> sample_obstacles(const WorldConfig& c, Rng& rng,
                                   std::vector<int>* rich_out) {
  const int n_sub = c.subarea_rows * c.subarea_cols;
  std::vector<int> indices(static_cast<std::size_t>(n_sub));
  for (int i = 0; i < n_sub; ++i) indices[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < c.rich_count; ++i) {
    const int j = i + rng.below_int(n_sub - i);
    std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
  }
  std::vector<int> rich(indices.begin(), indices.begin() + c.rich_count);
  std::sort(rich.begin(), rich.end());

  const int sub_w = c.width / c.subarea_cols;
  const int sub_h = c.height / c.subarea_rows;
  const int per_rich =
      static_cast<int>(c.obstacle_density * static_cast<double>(sub_w * sub_h));

  std::vector<Cell> obstacles;
  for (const int s : rich) {
    const int x0 = (s % c.subarea_cols) * sub_w;
    const int y0 = (s / c.subarea_cols) * sub_h;
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(sub_w * sub_h));
    for (int y = y0; y < y0 + sub_h; ++y) {
      for (int x = x0; x < x0 + sub_w; ++x) cells.push_back({x, y});
    }
    for (int i = 0; i < per_rich; ++i) {
      const int j = i + rng.below_int(static_cast<int>(cells.size()) - i);
      std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
      obstacles.push_back(cells[static_cast<std::size_t>(i)]);
    }
  }
  std::sort(obstacles.begin(), obstacles.end());
  *rich_out = std::move(rich);
  return obstacles;
}

}  // namespace

GridWorld::GridWorld(int width, int height, std::vector<Cell> obstacles,
                     std::vector<Cell> targets, std::optional<SubareaLayout> subareas,
                     std::uint64_t seed)
    : width_(width),
      height_(height),
      obstacles_(std::move(obstacles)),
      targets_(std::move(targets)),
      obstacle_mask_(static_cast<std::size_t>(width * height), 0),
      subareas_(std::move(subareas)),
      seed_(seed) {
  if (width_ <= 0 || height_ <= 0) throw ConfigError("world: dimensions must be positive");
  // Canonical order so equality means same grid, whatever the caller's order.
  std::sort(obstacles_.begin(), obstacles_.end());
  obstacles_.erase(std::unique(obstacles_.begin(), obstacles_.end()), obstacles_.end());
  std::sort(targets_.begin(), targets_.end());
  targets_.erase(std::unique(targets_.begin(), targets_.end()), targets_.end());
  for (const Cell c : obstacles_) {
    if (!in_bounds(c)) throw ConfigError("world: obstacle outside the grid");
    obstacle_mask_[static_cast<std::size_t>(index(c))] = 1;
  }
  for (const Cell c : targets_) {
    if (!in_bounds(c)) throw ConfigError("world: target outside the grid");
    if (is_obstacle(c)) throw ConfigError("world: target placed on an obstacle");
  }
}

int GridWorld::subarea_of(Cell c) const {
  const auto& layout = *subareas_;
  const int sub_w = width_ / layout.cols;
  const int sub_h = height_ / layout.rows;
  return (c.y / sub_h) * layout.cols + c.x / sub_w;
}

std::vector<Cell> GridWorld::free_cells() const {
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(width_ * height_) - obstacles_.size());
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!obstacle_mask_[static_cast<std::size_t>(y * width_ + x)]) cells.push_back({x, y});
    }
  }
  return cells;
}

GridWorld GridWorld::with_targets(std::vector<Cell> targets) const {
  for (const Cell t : targets) {
    if (!in_bounds(t)) throw ConfigError("with_targets: target outside the grid");
    if (is_obstacle(t)) throw ConfigError("with_targets: target placed on an obstacle");
  }
  return GridWorld(width_, height_, obstacles_, std::move(targets), subareas_, seed_);
}

bool operator==(const GridWorld& a, const GridWorld& b) {
  return a.width_ == b.width_ && a.height_ == b.height_ && a.obstacles_ == b.obstacles_ &&
         a.targets_ == b.targets_ && a.subareas_ == b.subareas_ && a.seed_ == b.seed_;
}

bool ground_free_space_connected(const GridWorld& world) {
  const std::vector<Cell> free = world.free_cells();
  if (free.size() <= 1) return true;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(world.width() * world.height()), 0);
  std::queue<Cell> frontier;
  frontier.push(free.front());
  seen[static_cast<std::size_t>(world.index(free.front()))] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop();
    const Cell steps[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
    for (const Cell n : steps) {
      if (!world.in_bounds(n) || world.is_obstacle(n)) continue;
      auto& mark = seen[static_cast<std::size_t>(world.index(n))];
      if (mark) continue;
      mark = 1;
      ++reached;
      frontier.push(n);
    }
  }
  return reached == free.size();
}

GridWorld generate_world(const WorldConfig& config, std::uint64_t seed) {
  validate_config(config);
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<int> rich;
    std::vector<Cell> obstacles = sample_obstacles(config, rng, &rich);
    GridWorld world(config.width, config.height, std::move(obstacles), {},
                    SubareaLayout{config.subarea_rows, config.subarea_cols, std::move(rich)},
                    seed);
    if (ground_free_space_connected(world)) return world;
  }
  std::ostringstream err;
  err << "generate_world: free space stayed disconnected after " << kMaxAttempts
      << " attempts (seed " << seed << ", density " << config.obstacle_density << ")";
  throw ConfigError(err.str());
}

Placement place_entities(const GridWorld& world, int n_agents, int n_targets,
                         std::uint64_t seed) {
  if (n_agents < 0 || n_targets < 0) {
    throw ConfigError("place_entities: entity counts must be non-negative");
  }
  std::vector<Cell> cells = world.free_cells();
  const int need = n_agents + n_targets;
  if (static_cast<std::size_t>(need) > cells.size()) {
    std::ostringstream err;
    err << "place_entities: need " << need << " distinct free cells but only " << cells.size()
        << " exist";
    throw ConfigError(err.str());
  }
  Rng rng(seed);
  for (int i = 0; i < need; ++i) {
    const int j = i + rng.below_int(static_cast<int>(cells.size()) - i);
    std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
  }
  Placement placement;
  placement.agents.assign(cells.begin(), cells.begin() + n_agents);
  placement.targets.assign(cells.begin() + n_agents, cells.begin() + need);
  return placement;
}

namespace {

nlohmann::json cells_to_json(const std::vector<Cell>& cells) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Cell c : cells) arr.push_back({c.x, c.y});
  return arr;
}

std::vector<Cell> cells_from_json(const nlohmann::json& arr, const char* field) {
  if (!arr.is_array()) throw ParseError(std::string("world file: ") + field + " must be an array");
  std::vector<Cell> cells;
  cells.reserve(arr.size());
  for (const auto& item : arr) {
    if (!item.is_array() || item.size() != 2 || !item[0].is_number_integer() ||
        !item[1].is_number_integer()) {
      throw ParseError(std::string("world file: ") + field + " entries must be [x, y] pairs");
    }
    cells.push_back({item[0].get<int>(), item[1].get<int>()});
  }
  return cells;
}

}  // namespace

std::string world_to_json(const GridWorld& world) {
  nlohmann::json j;
  j["format"] = 1;
  j["width"] = world.width();
  j["height"] = world.height();
  j["seed"] = world.seed();
  j["obstacles"] = cells_to_json(world.obstacles());
  j["targets"] = cells_to_json(world.targets());
  if (world.subareas()) {
    j["subareas"] = {{"rows", world.subareas()->rows},
                     {"cols", world.subareas()->cols},
                     {"rich", world.subareas()->rich}};
  }
  return j.dump(2) + "\n";
}

GridWorld world_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("world file: invalid JSON: ") + e.what());
  }
  if (!j.contains("format") || !j["format"].is_number_integer() || j["format"].get<int>() != 1) {
    throw ParseError("world file: missing or unsupported format version (expected 1)");
  }
  for (const char* field : {"width", "height"}) {
    if (!j.contains(field) || !j[field].is_number_integer() || j[field].get<int>() <= 0) {
      throw ParseError(std::string("world file: ") + field + " must be a positive integer");
    }
  }
  const int width = j["width"].get<int>();
  const int height = j["height"].get<int>();
  const std::uint64_t seed = j.value("seed", std::uint64_t{0});

  std::vector<Cell> obstacles =
      cells_from_json(j.value("obstacles", nlohmann::json::array()), "obstacles");
  std::vector<Cell> targets =
      cells_from_json(j.value("targets", nlohmann::json::array()), "targets");

  std::optional<SubareaLayout> subareas;
  if (j.contains("subareas")) {
    const auto& s = j["subareas"];
    SubareaLayout layout;
    layout.rows = s.value("rows", 0);
    layout.cols = s.value("cols", 0);
    if (layout.rows <= 0 || layout.cols <= 0 || width % layout.cols != 0 ||
        height % layout.rows != 0) {
      throw ParseError("world file: subareas do not tile the grid");
    }
    if (s.contains("rich")) {
      for (const auto& r : s["rich"]) {
        const int idx = r.get<int>();
        if (idx < 0 || idx >= layout.rows * layout.cols) {
          throw ParseError("world file: rich sub-area index out of range");
        }
        layout.rich.push_back(idx);
      }
      std::sort(layout.rich.begin(), layout.rich.end());
    }
    subareas = std::move(layout);
  }

  GridWorld world(width, height, {}, {}, subareas, seed);  // bounds helper only
  auto check_cells = [&](const std::vector<Cell>& cells, const char* what) {
    for (const Cell c : cells) {
      if (!world.in_bounds(c)) {
        std::ostringstream err;
        err << "world file: " << what << " (" << c.x << ", " << c.y << ") outside the "
            << width << "x" << height << " grid";
        throw ParseError(err.str());
      }
    }
    std::vector<Cell> sorted = cells;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ParseError(std::string("world file: duplicate ") + what + " entries");
    }
  };
  check_cells(obstacles, "obstacle");
  check_cells(targets, "target");

  std::sort(obstacles.begin(), obstacles.end());
  // The constructor re-validates bounds and target placement; surface its
  // complaints as file errors here.
  std::optional<GridWorld> built;
  try {
    built.emplace(width, height, std::move(obstacles), std::move(targets), std::move(subareas),
                  seed);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("world file: ") + e.what());
  }
  GridWorld result = std::move(*built);
  if (result.subareas()) {
    const auto& rich = result.subareas()->rich;
    for (const Cell c : result.obstacles()) {
      if (!std::binary_search(rich.begin(), rich.end(), result.subarea_of(c))) {
        std::ostringstream err;
        err << "world file: obstacle (" << c.x << ", " << c.y
            << ") lies outside every rich sub-area";
        throw ParseError(err.str());
      }
    }
  }
  return result;
}

void save_world(const GridWorld& world, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_world: cannot open " + path + " for writing");
  out << world_to_json(world);
  if (!out) throw IoError("save_world: write to " + path + " failed");
}

GridWorld load_world(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_world: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return world_from_json(buffer.str());
}

}  // namespace gatar
