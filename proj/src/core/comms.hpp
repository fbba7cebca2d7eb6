#pragma once

#include <vector>

#include "core/agent.hpp"

namespace gatar {

// Symmetric, loop-free adjacency over agents: i and j hear each other when
// their distance is within the smaller of the two communication radii.
class CommGraph {
 public:
  explicit CommGraph(int n) : n_(n), adj_(static_cast<std::size_t>(n) * n, 0) {}

  int size() const { return n_; }
  bool adjacent(int i, int j) const { return adj_[static_cast<std::size_t>(i) * n_ + j] != 0; }
  void set_adjacent(int i, int j);
  // Neighbor ids in ascending order.
  std::vector<int> neighbors(int i) const;
  // Binary graph shift operator, row-major n*n.
  std::vector<double> shift_operator() const;

 private:
  int n_;
  std::vector<std::uint8_t> adj_;
};

CommGraph build_graph(const std::vector<AgentState>& agents);

struct Message {
  int sender = 0;
  std::vector<double> payload;
};

// One synchronized broadcast: every agent sends its payload to every
// neighbor. inbox(i) holds exactly one message per neighbor, sorted by
// sender id.
class Mailbox {
 public:
  explicit Mailbox(int n) : inboxes_(static_cast<std::size_t>(n)) {}
  const std::vector<Message>& inbox(int i) const {
    return inboxes_[static_cast<std::size_t>(i)];
  }
  std::vector<Message>& inbox(int i) { return inboxes_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(inboxes_.size()); }

 private:
  std::vector<std::vector<Message>> inboxes_;
};

Mailbox exchange_round(const CommGraph& graph, const std::vector<std::vector<double>>& outgoing);

}  // namespace gatar
