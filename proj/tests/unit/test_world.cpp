#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "core/errors.hpp"
#include "core/world.hpp"

using gatar::Cell;
using gatar::GridWorld;
using gatar::WorldConfig;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

int count_obstacles_in_subarea(const GridWorld& w, int subarea) {
  int n = 0;
  for (const Cell c : w.obstacles()) {
    if (w.subarea_of(c) == subarea) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("generation is deterministic and obeys the rich sub-area contract") {
  WorldConfig cfg;
  const GridWorld a = gatar::generate_world(cfg, 7);
  const GridWorld b = gatar::generate_world(cfg, 7);
  CHECK(a == b);

  REQUIRE(a.subareas().has_value());
  CHECK(a.subareas()->rich.size() == 4);
  // floor(0.3 * 25) = 7 obstacles in each rich sub-area, none elsewhere.
  std::set<int> rich(a.subareas()->rich.begin(), a.subareas()->rich.end());
  for (int s = 0; s < 9; ++s) {
    CHECK(count_obstacles_in_subarea(a, s) == (rich.count(s) ? 7 : 0));
  }

  const GridWorld c = gatar::generate_world(cfg, 8);
  CHECK_FALSE(a == c);
}

TEST_CASE("zero density yields no obstacles") {
  WorldConfig cfg;
  cfg.obstacle_density = 0.0;
  const GridWorld w = gatar::generate_world(cfg, 3);
  CHECK(w.obstacles().empty());
  CHECK(w.subareas()->rich.size() == 4);
}

TEST_CASE("generated worlds satisfy the grid invariants across many seeds") {
  WorldConfig cfg;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const GridWorld w = gatar::generate_world(cfg, seed);
    REQUIRE(w.subareas().has_value());
    const std::set<int> rich(w.subareas()->rich.begin(), w.subareas()->rich.end());
    REQUIRE(rich.size() == 4);

    std::set<Cell> seen;
    std::vector<int> per_subarea(9, 0);
    for (const Cell c : w.obstacles()) {
      REQUIRE(w.in_bounds(c));
      REQUIRE(seen.insert(c).second);
      ++per_subarea[static_cast<std::size_t>(w.subarea_of(c))];
    }
    for (int s = 0; s < 9; ++s) {
      REQUIRE(per_subarea[static_cast<std::size_t>(s)] == (rich.count(s) ? 7 : 0));
    }
    REQUIRE(gatar::ground_free_space_connected(w));
    REQUIRE(std::is_sorted(w.obstacles().begin(), w.obstacles().end()));
  }
}

TEST_CASE("obstacle count per rich sub-area tracks the density exactly") {
  WorldConfig cfg;
  for (const double density : {0.0, 0.08, 0.2, 0.44}) {
    cfg.obstacle_density = density;
    const GridWorld w = gatar::generate_world(cfg, 21);
    const int expected = static_cast<int>(density * 25.0);
    for (const int s : w.subareas()->rich) {
      CHECK(count_obstacles_in_subarea(w, s) == expected);
    }
  }
}

TEST_CASE("generation rejects inconsistent configs") {
  WorldConfig bad;
  bad.width = 14;  // not divisible by 3 sub-area columns
  CHECK_THROWS_AS(gatar::generate_world(bad, 0), gatar::ConfigError);

  WorldConfig dense;
  dense.obstacle_density = 1.5;
  CHECK_THROWS_AS(gatar::generate_world(dense, 0), gatar::ConfigError);

  WorldConfig rich;
  rich.rich_count = 10;
  CHECK_THROWS_AS(gatar::generate_world(rich, 0), gatar::ConfigError);
}

TEST_CASE("entity placement samples distinct free cells deterministically") {
  const GridWorld w = gatar::generate_world(WorldConfig{}, 5);
  const gatar::Placement p = gatar::place_entities(w, 4, 40, 2);
  const gatar::Placement q = gatar::place_entities(w, 4, 40, 2);
  CHECK(p.agents == q.agents);
  CHECK(p.targets == q.targets);
  CHECK(p.agents.size() == 4);
  CHECK(p.targets.size() == 40);

  std::set<Cell> all;
  for (const Cell c : p.agents) {
    CHECK_FALSE(w.is_obstacle(c));
    CHECK(all.insert(c).second);
  }
  for (const Cell c : p.targets) {
    CHECK_FALSE(w.is_obstacle(c));
    CHECK(all.insert(c).second);
  }
  CHECK(all.size() == 44);

  const gatar::Placement r = gatar::place_entities(w, 4, 40, 3);
  CHECK(p.agents != r.agents);
}

TEST_CASE("placement can fill every free cell but not more") {
  // 3x3 world, two obstacles: exactly 7 free cells.
  const GridWorld w(3, 3, {{1, 1}, {2, 2}}, {}, std::nullopt, 0);
  REQUIRE(w.free_cells().size() == 7);

  const gatar::Placement p = gatar::place_entities(w, 3, 4, 9);
  std::set<Cell> used(p.agents.begin(), p.agents.end());
  used.insert(p.targets.begin(), p.targets.end());
  CHECK(used.size() == 7);
  for (const Cell c : used) CHECK_FALSE(w.is_obstacle(c));

  CHECK_THROWS_AS(gatar::place_entities(w, 4, 4, 9), gatar::ConfigError);
}

TEST_CASE("world files round-trip exactly") {
  const GridWorld w = gatar::generate_world(WorldConfig{}, 17);
  const GridWorld with_targets = w.with_targets({{0, 0}, {7, 3}});
  const auto path = temp_file("roundtrip_world.json");
  gatar::save_world(with_targets, path.string());
  const GridWorld loaded = gatar::load_world(path.string());
  CHECK(loaded == with_targets);
  CHECK(gatar::world_to_json(loaded) == gatar::world_to_json(with_targets));
  std::filesystem::remove(path);
}

TEST_CASE("hand-written world file loads with the expected contents") {
  const auto path = temp_file("hand_world.json");
  write_text(path, R"({
    "format": 1,
    "width": 5,
    "height": 5,
    "obstacles": [[2, 2]],
    "targets": [[0, 0], [4, 3]]
  })");
  const GridWorld w = gatar::load_world(path.string());
  CHECK(w.width() == 5);
  CHECK(w.height() == 5);
  CHECK(w.obstacles().size() == 1);
  CHECK(w.targets().size() == 2);
  CHECK(w.is_obstacle({2, 2}));
  CHECK_FALSE(w.subareas().has_value());
  std::filesystem::remove(path);
}

TEST_CASE("malformed world files are rejected with parse errors") {
  const auto path = temp_file("bad_world.json");

  write_text(path, "not json at all");
  CHECK_THROWS_AS(gatar::load_world(path.string()), gatar::ParseError);

  // Target sitting on an obstacle.
  write_text(path, R"({"format":1,"width":4,"height":4,"obstacles":[[1,1]],"targets":[[1,1]]})");
  CHECK_THROWS_AS(gatar::load_world(path.string()), gatar::ParseError);

  // Out-of-bounds obstacle.
  write_text(path, R"({"format":1,"width":4,"height":4,"obstacles":[[4,0]],"targets":[]})");
  CHECK_THROWS_AS(gatar::load_world(path.string()), gatar::ParseError);

  // Wrong version.
  write_text(path, R"({"format":2,"width":4,"height":4,"obstacles":[],"targets":[]})");
  CHECK_THROWS_AS(gatar::load_world(path.string()), gatar::ParseError);

  // Obstacle outside every rich sub-area.
  write_text(path, R"({"format":1,"width":4,"height":4,"obstacles":[[0,0]],"targets":[],
                       "subareas":{"rows":2,"cols":2,"rich":[3]}})");
  CHECK_THROWS_AS(gatar::load_world(path.string()), gatar::ParseError);

  CHECK_THROWS_AS(gatar::load_world("/nonexistent/dir/world.json"), gatar::IoError);
  std::filesystem::remove(path);
}

TEST_CASE("with_targets validates its input") {
  const GridWorld w = gatar::generate_world(WorldConfig{}, 1);
  REQUIRE(!w.obstacles().empty());
  const Cell blocked = w.obstacles().front();
  CHECK_THROWS_AS(w.with_targets({blocked}), gatar::ConfigError);
  CHECK_THROWS_AS(w.with_targets({{-1, 0}}), gatar::ConfigError);
}
