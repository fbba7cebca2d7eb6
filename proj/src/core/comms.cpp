#include "core/comms.hpp"

#include <algorithm>
#include <sstream>

#include "core/errors.hpp"

namespace gatar {

void CommGraph::set_adjacent(int i, int j) {
  if (i == j) throw ContractError("CommGraph: self-loops are not allowed");
  adj_[static_cast<std::size_t>(i) * n_ + j] = 1;
  adj_[static_cast<std::size_t>(j) * n_ + i] = 1;
}

std::vector<int> CommGraph::neighbors(int i) const {
  std::vector<int> out;
  for (int j = 0; j < n_; ++j) {
    if (adjacent(i, j)) out.push_back(j);
  }
  return out;
}

std::vector<double> CommGraph::shift_operator() const {
  std::vector<double> s(adj_.size(), 0.0);
  for (std::size_t i = 0; i < adj_.size(); ++i) s[i] = adj_[i] ? 1.0 : 0.0;
  return s;
}

CommGraph build_graph(const std::vector<AgentState>& agents) {
  const int n = static_cast<int>(agents.size());
  CommGraph graph(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double range = std::min(agents[static_cast<std::size_t>(i)].spec.r_comm,
                                    agents[static_cast<std::size_t>(j)].spec.r_comm);
      const double dist = euclidean_distance(agents[static_cast<std::size_t>(i)].position,
                                             agents[static_cast<std::size_t>(j)].position);
      if (dist <= range) graph.set_adjacent(i, j);
    }
  }
  return graph;
}

Mailbox exchange_round(const CommGraph& graph, const std::vector<std::vector<double>>& outgoing) {
  const int n = graph.size();
  if (static_cast<int>(outgoing.size()) != n) {
    std::ostringstream err;
    err << "exchange_round: " << outgoing.size() << " payloads for " << n << " agents";
    throw ContractError(err.str());
  }
  Mailbox mailbox(n);
  for (int receiver = 0; receiver < n; ++receiver) {
    // neighbors() ascends, so each inbox arrives sorted by sender id.
    for (const int sender : graph.neighbors(receiver)) {
      mailbox.inbox(receiver).push_back(
          Message{sender, outgoing[static_cast<std::size_t>(sender)]});
    }
  }
  return mailbox;
}

}  // namespace gatar
