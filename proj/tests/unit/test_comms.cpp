#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "core/agent.hpp"
#include "core/comms.hpp"
#include "core/errors.hpp"
#include "oracles.hpp"

using gatar::AgentKind;
using gatar::AgentState;
using gatar::Cell;
using gatar::CommGraph;
using gatar::Mailbox;
using gatar::Message;

namespace {

std::vector<AgentState> random_team(std::uint64_t seed, int n, double r_comm) {
  oracle::TestRand rnd(seed);
  std::vector<AgentState> team;
  for (int i = 0; i < n; ++i) {
    AgentState a{i, gatar::default_spec(i % 2 ? AgentKind::Ugv : AgentKind::Uav),
                 {rnd.below(15), rnd.below(15)}};
    a.spec.r_comm = r_comm;
    team.push_back(a);
  }
  return team;
}

// Hop distances on the comm graph by plain matrix-style relaxation.
std::vector<int> hop_distances(const CommGraph& g, int source) {
  std::vector<int> hops(static_cast<std::size_t>(g.size()), -1);
  hops[static_cast<std::size_t>(source)] = 0;
  for (int round = 1; round < g.size(); ++round) {
    bool changed = false;
    for (int i = 0; i < g.size(); ++i) {
      if (hops[static_cast<std::size_t>(i)] != round - 1) continue;
      for (int j = 0; j < g.size(); ++j) {
        if (g.adjacent(i, j) && hops[static_cast<std::size_t>(j)] < 0) {
          hops[static_cast<std::size_t>(j)] = round;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return hops;
}

}  // namespace

TEST_CASE("zero communication range isolates everyone") {
  const CommGraph g = gatar::build_graph(random_team(1, 5, 0.0));
  for (int i = 0; i < 5; ++i) {
    CHECK(g.neighbors(i).empty());
    for (int j = 0; j < 5; ++j) CHECK_FALSE(g.adjacent(i, j));
  }
  const std::vector<double> shift = g.shift_operator();
  for (const double v : shift) CHECK(v == 0.0);
}

TEST_CASE("range six links five cells apart but not seven") {
  std::vector<AgentState> pair = random_team(0, 2, 6.0);
  pair[0].position = {0, 0};
  pair[1].position = {5, 0};
  CHECK(gatar::build_graph(pair).adjacent(0, 1));
  pair[1].position = {7, 0};
  CHECK_FALSE(gatar::build_graph(pair).adjacent(0, 1));
}

TEST_CASE("asymmetric ranges use the smaller of the two") {
  std::vector<AgentState> pair = random_team(0, 2, 6.0);
  pair[0].position = {0, 0};
  pair[1].position = {5, 0};
  pair[1].spec.r_comm = 4.0;
  const CommGraph g = gatar::build_graph(pair);
  CHECK_FALSE(g.adjacent(0, 1));
  CHECK_FALSE(g.adjacent(1, 0));
}

TEST_CASE("adjacency matches the pairwise-distance rule on random teams") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    oracle::TestRand rnd(seed);
    std::vector<AgentState> team = random_team(seed, 6, 0.0);
    for (AgentState& a : team) a.spec.r_comm = 2.0 + 6.0 * rnd.unit();
    const CommGraph g = gatar::build_graph(team);
    const std::vector<double> shift = g.shift_operator();
    for (int i = 0; i < 6; ++i) {
      CHECK_FALSE(g.adjacent(i, i));
      for (int j = 0; j < 6; ++j) {
        const double d = gatar::euclidean_distance(team[static_cast<std::size_t>(i)].position,
                                                   team[static_cast<std::size_t>(j)].position);
        const bool expected =
            i != j && d <= std::min(team[static_cast<std::size_t>(i)].spec.r_comm,
                                    team[static_cast<std::size_t>(j)].spec.r_comm);
        CHECK(g.adjacent(i, j) == expected);
        CHECK(g.adjacent(j, i) == expected);
        CHECK(shift[static_cast<std::size_t>(i) * 6 + j] == (expected ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("one exchange delivers exactly the direct neighborhood") {
  // Chain 0 - 1 - 2 (unit spacing, range 1): ends see only the middle.
  std::vector<AgentState> chain = random_team(0, 3, 1.0);
  chain[0].position = {0, 0};
  chain[1].position = {1, 0};
  chain[2].position = {2, 0};
  const CommGraph g = gatar::build_graph(chain);

  const Mailbox mail = gatar::exchange_round(g, {{10.0}, {11.0}, {12.0}});
  REQUIRE(mail.inbox(0).size() == 1);
  CHECK(mail.inbox(0)[0].sender == 1);
  CHECK(mail.inbox(0)[0].payload == std::vector<double>{11.0});
  REQUIRE(mail.inbox(1).size() == 2);
  CHECK(mail.inbox(1)[0].sender == 0);
  CHECK(mail.inbox(1)[1].sender == 2);
  REQUIRE(mail.inbox(2).size() == 1);
  CHECK(mail.inbox(2)[0].sender == 1);
}

TEST_CASE("complete graph floods every inbox") {
  std::vector<AgentState> trio = random_team(0, 3, 20.0);
  trio[0].position = {0, 0};
  trio[1].position = {1, 0};
  trio[2].position = {0, 1};
  const Mailbox mail = gatar::exchange_round(gatar::build_graph(trio), {{1.0}, {2.0}, {3.0}});
  for (int i = 0; i < 3; ++i) {
    REQUIRE(mail.inbox(i).size() == 2);
    CHECK(mail.inbox(i)[0].sender < mail.inbox(i)[1].sender);
    for (const Message& m : mail.inbox(i)) CHECK(m.sender != i);
  }
}

TEST_CASE("payload count mismatches are contract errors") {
  const CommGraph g = gatar::build_graph(random_team(3, 4, 6.0));
  CHECK_THROWS_AS(gatar::exchange_round(g, {{1.0}, {2.0}}), gatar::ContractError);
}

TEST_CASE("self loops are rejected") {
  CommGraph g(3);
  CHECK_THROWS_AS(g.set_adjacent(1, 1), gatar::ContractError);
}

TEST_CASE("L exchange rounds taint exactly the L-hop neighborhood") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    oracle::TestRand rnd(seed);
    const int n = 3 + rnd.below(6);
    std::vector<AgentState> team = random_team(seed + 77, n, 0.0);
    for (AgentState& a : team) a.spec.r_comm = 2.0 + 5.0 * rnd.unit();
    const CommGraph g = gatar::build_graph(team);
    const int rounds = 1 + rnd.below(3);

    // Taint vectors: slot j goes positive once agent j's influence arrives.
    std::vector<std::vector<double>> taint(static_cast<std::size_t>(n),
                                           std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) taint[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    for (int r = 0; r < rounds; ++r) {
      const Mailbox mail = gatar::exchange_round(g, taint);
      std::vector<std::vector<double>> next = taint;
      for (int i = 0; i < n; ++i) {
        for (const Message& m : mail.inbox(i)) {
          for (int j = 0; j < n; ++j) {
            next[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                std::max(next[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                         m.payload[static_cast<std::size_t>(j)]);
          }
        }
      }
      taint = std::move(next);
    }

    for (int i = 0; i < n; ++i) {
      const std::vector<int> hops = hop_distances(g, i);
      for (int j = 0; j < n; ++j) {
        const bool reached = taint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0.0;
        const bool expected =
            hops[static_cast<std::size_t>(j)] >= 0 && hops[static_cast<std::size_t>(j)] <= rounds;
        REQUIRE(reached == expected);
      }
    }
  }
}
