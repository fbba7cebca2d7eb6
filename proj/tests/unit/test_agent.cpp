#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "core/agent.hpp"
#include "core/errors.hpp"
#include "core/geometry.hpp"
#include "core/world.hpp"
#include "oracles.hpp"

using gatar::AgentKind;
using gatar::AgentSpec;
using gatar::AgentState;
using gatar::Cell;
using gatar::GridWorld;
using gatar::Observation;
using gatar::Traversal;

namespace {

AgentState agent_at(Cell pos, AgentKind kind = AgentKind::Ugv) {
  return {0, gatar::default_spec(kind), pos};
}

// Exhaustive per-cell ray cast straight from the visibility definition:
// within r_sense and no obstacle strictly between the endpoints.
std::vector<std::uint8_t> visibility_oracle(const GridWorld& w, const AgentState& a) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w.width()) * w.height(), 0);
  const double r2 = a.spec.r_sense * a.spec.r_sense;
  for (int y = 0; y < w.height(); ++y) {
    for (int x = 0; x < w.width(); ++x) {
      const Cell c{x, y};
      if (static_cast<double>(gatar::squared_distance(a.position, c)) > r2) continue;
      const std::vector<Cell> ray = gatar::bresenham_line(a.position, c);
      bool blocked = false;
      for (std::size_t i = 1; i + 1 < ray.size(); ++i) {
        if (w.is_obstacle(ray[i])) {
          blocked = true;
          break;
        }
      }
      if (!blocked) mask[static_cast<std::size_t>(w.index(c))] = 1;
    }
  }
  return mask;
}

GridWorld mirror_world_x(const GridWorld& w) {
  std::vector<Cell> obstacles;
  for (const Cell c : w.obstacles()) obstacles.push_back({w.width() - 1 - c.x, c.y});
  std::vector<Cell> targets;
  for (const Cell c : w.targets()) targets.push_back({w.width() - 1 - c.x, c.y});
  return GridWorld(w.width(), w.height(), obstacles, targets, std::nullopt, w.seed());
}

using oracle::random_world;

}  // namespace

TEST_CASE("default specs encode the platform differences") {
  const AgentSpec uav = gatar::default_spec(AgentKind::Uav);
  const AgentSpec ugv = gatar::default_spec(AgentKind::Ugv);
  CHECK(uav.speed == 2);
  CHECK(ugv.speed == 1);
  CHECK(uav.speed > ugv.speed);
  CHECK(uav.traversal == Traversal::FliesOverObstacles);
  CHECK(ugv.traversal == Traversal::BlockedByObstacles);
  CHECK(uav.r_sense == 4.0);
  CHECK(ugv.r_sense == 4.0);
  CHECK(uav.r_comm == 6.0);
  CHECK(ugv.r_comm == 6.0);
  CHECK(uav.op_range == 60);
  CHECK(ugv.op_range == 120);
}

TEST_CASE("open-field visibility is the Euclidean disc") {
  const GridWorld w(9, 9, {}, {}, std::nullopt, 0);
  const AgentState a = agent_at({4, 4});
  const Observation obs = gatar::observe(w, a);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      const bool expected = gatar::squared_distance({x, y}, {4, 4}) <= 16;
      CHECK(obs.is_visible({x, y}) == expected);
    }
  }
  CHECK(obs.seen_targets().empty());
  CHECK(obs.seen_obstacles().empty());
}

TEST_CASE("single obstacle shadows exactly one cell from two steps away") {
  // Hand-derived mask: 7x7, agent (3,3), obstacle (3,1). Rays to (2,0) and
  // (4,0) bend around the obstacle; only (3,0) is shadowed. The four grid
  // corners fall outside the radius-4 disc.
  const GridWorld w(7, 7, {{3, 1}}, {}, std::nullopt, 0);
  const AgentState a = agent_at({3, 3});
  const Observation obs = gatar::observe(w, a);

  CHECK_FALSE(obs.is_visible({3, 0}));
  CHECK(obs.is_visible({3, 1}));  // the obstacle itself
  CHECK(obs.is_visible({3, 2}));
  CHECK(obs.is_visible({2, 0}));
  CHECK(obs.is_visible({4, 0}));
  for (const Cell corner : {Cell{0, 0}, Cell{6, 0}, Cell{0, 6}, Cell{6, 6}}) {
    CHECK_FALSE(obs.is_visible(corner));
  }
  int visible = 0;
  for (const std::uint8_t v : obs.visible_mask()) visible += v;
  CHECK(visible == 49 - 4 - 1);
  CHECK(obs.seen_obstacles() == std::vector<Cell>{{3, 1}});

  const std::vector<std::uint8_t> expected = visibility_oracle(w, a);
  CHECK(obs.visible_mask() == expected);
}

TEST_CASE("cells straight behind an adjacent obstacle are hidden") {
  const GridWorld w(7, 7, {{3, 2}}, {}, std::nullopt, 0);
  const AgentState a = agent_at({2, 2});
  const Observation obs = gatar::observe(w, a);
  CHECK(obs.is_visible({3, 2}));
  CHECK_FALSE(obs.is_visible({4, 2}));
  CHECK_FALSE(obs.is_visible({5, 2}));
  CHECK_FALSE(obs.is_visible({6, 2}));
}

TEST_CASE("observation matches the exhaustive ray-cast oracle on random worlds") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const GridWorld w = random_world(seed);
    oracle::TestRand rnd(seed + 1000);
    AgentState a = agent_at({rnd.below(11), rnd.below(11)},
                            seed % 2 ? AgentKind::Uav : AgentKind::Ugv);
    const Observation obs = gatar::observe(w, a);
    const std::vector<std::uint8_t> expected = visibility_oracle(w, a);
    REQUIRE(obs.visible_mask() == expected);

    // Seen targets are exactly the world targets on visible cells, sorted.
    std::vector<Cell> expected_targets;
    for (const Cell t : w.targets()) {
      if (expected[static_cast<std::size_t>(w.index(t))]) expected_targets.push_back(t);
    }
    std::sort(expected_targets.begin(), expected_targets.end());
    REQUIRE(obs.seen_targets() == expected_targets);

    // Seen obstacles are visible obstacles.
    for (const Cell c : obs.seen_obstacles()) {
      REQUIRE(w.is_obstacle(c));
      REQUIRE(obs.is_visible(c));
    }
  }
}

TEST_CASE("visibility is symmetric under world reflection") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const GridWorld w = random_world(seed);
    const GridWorld m = mirror_world_x(w);
    oracle::TestRand rnd(seed);
    const Cell pos{rnd.below(11), rnd.below(11)};
    const Observation obs = gatar::observe(w, agent_at(pos));
    const Observation mirrored = gatar::observe(m, agent_at({10 - pos.x, pos.y}));
    for (int y = 0; y < 11; ++y) {
      for (int x = 0; x < 11; ++x) {
        REQUIRE(obs.is_visible({x, y}) == mirrored.is_visible({10 - x, y}));
      }
    }
  }
}

TEST_CASE("enlarging the sensing radius never hides a cell") {
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    const GridWorld w = random_world(seed);
    AgentState a = agent_at({5, 5});
    a.spec.r_sense = 3.0;
    const Observation small = gatar::observe(w, a);
    a.spec.r_sense = 5.0;
    const Observation large = gatar::observe(w, a);
    for (int i = 0; i < 121; ++i) {
      if (small.visible_mask()[static_cast<std::size_t>(i)]) {
        REQUIRE(large.visible_mask()[static_cast<std::size_t>(i)]);
      }
    }
  }
}

TEST_CASE("perception ignores the platform kind") {
  const GridWorld w = random_world(42);
  const Observation uav = gatar::observe(w, agent_at({5, 5}, AgentKind::Uav));
  const Observation ugv = gatar::observe(w, agent_at({5, 5}, AgentKind::Ugv));
  CHECK(uav.visible_mask() == ugv.visible_mask());
  CHECK(uav.seen_targets() == ugv.seen_targets());
}

TEST_CASE("out-of-bounds agents are rejected") {
  const GridWorld w(5, 5, {}, {}, std::nullopt, 0);
  CHECK_THROWS_AS(gatar::observe(w, agent_at({5, 2})), gatar::ContractError);
}

TEST_CASE("union pools visibility and targets") {
  const GridWorld w(15, 15, {}, {{1, 1}, {13, 13}}, std::nullopt, 0);
  const Observation a = gatar::observe(w, agent_at({1, 2}));
  const Observation b = gatar::observe(w, agent_at({13, 12}));
  const Observation u = gatar::union_observations({a, b});
  CHECK(u.is_visible({1, 1}));
  CHECK(u.is_visible({13, 13}));
  CHECK_FALSE(u.is_visible({7, 7}));
  CHECK(u.seen_targets() == std::vector<Cell>{{1, 1}, {13, 13}});

  // Duplicate targets collapse.
  const Observation u2 = gatar::union_observations({a, a});
  CHECK(u2.seen_targets() == std::vector<Cell>{{1, 1}});

  CHECK_THROWS_AS(gatar::union_observations({}), gatar::ContractError);
}

TEST_CASE("team strings parse to ordered specs") {
  const std::vector<AgentSpec> team = gatar::parse_team("2A2G");
  REQUIRE(team.size() == 4);
  CHECK(team[0].kind == AgentKind::Uav);
  CHECK(team[1].kind == AgentKind::Uav);
  CHECK(team[2].kind == AgentKind::Ugv);
  CHECK(team[3].kind == AgentKind::Ugv);
  CHECK(gatar::team_to_string(team) == "2A2G");

  const std::vector<AgentSpec> lower = gatar::parse_team("1a3g");
  REQUIRE(lower.size() == 4);
  CHECK(lower[0].kind == AgentKind::Uav);
  CHECK(lower[3].kind == AgentKind::Ugv);

  CHECK_THROWS_AS(gatar::parse_team("0A0G"), gatar::ConfigError);
  CHECK_THROWS_AS(gatar::parse_team("2A"), gatar::ConfigError);
  CHECK_THROWS_AS(gatar::parse_team("two uavs"), gatar::ConfigError);
  CHECK_THROWS_AS(gatar::parse_team(""), gatar::ConfigError);
}

TEST_CASE("make_team assigns sequential ids") {
  const std::vector<AgentSpec> specs = gatar::parse_team("1A1G");
  const std::vector<AgentState> team = gatar::make_team(specs, {{2, 3}, {4, 5}});
  REQUIRE(team.size() == 2);
  CHECK(team[0].id == 0);
  CHECK(team[1].id == 1);
  CHECK(team[0].position == Cell{2, 3});
  CHECK(team[1].position == Cell{4, 5});
}

TEST_CASE("rosters round-trip through files") {
  const auto path = (std::filesystem::temp_directory_path() / "roster.json").string();
  std::vector<AgentState> team = gatar::make_team(gatar::parse_team("2A1G"),
                                                  {{1, 1}, {2, 2}, {3, 3}});
  team[1].spec.r_comm = 9.0;
  team[2].spec.op_range = 44;
  gatar::save_roster(team, path);
  const std::vector<AgentState> loaded = gatar::load_roster(path);
  REQUIRE(loaded.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(loaded[i].id == team[i].id);
    CHECK(loaded[i].spec == team[i].spec);
    CHECK(loaded[i].position == team[i].position);
  }
  std::filesystem::remove(path);

  std::ofstream bad(path);
  bad << R"({"format":1,"agents":[{"kind":"dragon","position":[0,0]}]})";
  bad.close();
  CHECK_THROWS_AS(gatar::load_roster(path), gatar::ParseError);
  std::filesystem::remove(path);
}
