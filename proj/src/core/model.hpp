#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/comms.hpp"
#include "core/featurize.hpp"

namespace gatar {

// Policy hyperparameters. The feature options ride along so a checkpoint
// knows how its inputs were built.
struct ModelConfig {
  int grid_h = 15;
  int grid_w = 15;
  int conv1 = 16;
  int conv2 = 32;
  int embed = 128;          // per-agent embedding width d
  int layers = 3;           // V-cycle depth L (= communication rounds)
  int heads = 4;            // attention heads per layer
  int decoder_hidden = 64;
  double leaky_slope = 0.2;
  bool vcycle_shortcut = true;  // keep the downward-feature term in the upward sum
  bool tied_passes = false;     // share GAT weights between downward and upward passes
  FeatureOptions features;

  int head_dim() const { return embed / heads; }
  int conv_out(int extent) const;  // spatial extent after one stride-2 3x3 conv, padding 1
  int flat_dim() const;
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

// Named parameter tensors. Each tensor is initialised from an RNG seeded by
// (seed, name), so shared tensors match across model variants with the same
// seed even when the variants differ in which tensors exist.
struct ModelParams {
  ModelConfig config;
  std::map<std::string, Tensor> tensors;

  static ModelParams init(const ModelConfig& config, std::uint64_t seed);
  std::int64_t parameter_count() const;
};

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

// Binds one parameter set onto one tape and exposes the network blocks.
// Decentralized execution gives every agent its own runtime; the centralized
// reference shares a single one.
class ModelRuntime {
 public:
  ModelRuntime(Tape& tape, const ModelParams& params, bool trainable);

  Tape::Id param_id(const std::string& name) const;
  const ModelConfig& config() const { return params_->config; }

  // Feature planes (4,H,W) -> embedding (1,d). This is the round-0 payload.
  Tape::Id encode(const Tensor& feature_planes);

  // Per-head projections W_k * v of one feature vector under a layer's weights.
  std::vector<Tape::Id> project_heads(Tape::Id feature, const std::string& layer);

  // Multi-head attention aggregation. self_heads are this agent's per-head
  // projections; neighbor_heads[k] lists the neighbors' projections for head
  // k in inbox order. Empty neighborhood yields a zero vector. When
  // attention_out is given it receives the per-head attention coefficients.
  Tape::Id attend(const std::vector<Tape::Id>& self_heads,
                  const std::vector<std::vector<Tape::Id>>& neighbor_heads,
                  const std::string& layer,
                  std::vector<std::vector<double>>* attention_out = nullptr);

  Tape::Id decode(Tape::Id ego, Tape::Id aggregated);

  std::string down_layer(int l) const;
  std::string up_skip_layer(int l) const;
  std::string up_deep_layer(int l) const;

  Tape& tape() { return *tape_; }

 private:
  Tape* tape_;
  const ModelParams* params_;
  std::map<std::string, Tape::Id> ids_;
};

// Output of one team-level forward pass on a single tape.
struct TeamForward {
  std::vector<std::array<double, 2>> coords;  // normalized (x, y) per agent
  std::vector<Tape::Id> outputs;              // decode nodes, shape (1,2)
  Tape::Id loss = -1;                         // set when any agent is labeled
  int labeled_agents = 0;
};

// Centralized reference evaluation: all agents on one tape, exchange rounds
// simulated by direct adjacency lookups. Supplies the loss when labels are
// given (mean squared error over labeled agents' coordinates).
TeamForward forward_team(
    Tape& tape, ModelRuntime& rt, const std::vector<Tensor>& feature_planes,
    const CommGraph& graph,
    const std::vector<std::optional<std::array<double, 2>>>& labels = {});

// Decentralized execution: one tape per agent, information crosses agent
// boundaries only through exchange_round payloads. Bit-identical to
// forward_team on the same inputs.
std::vector<std::array<double, 2>> forward_decentralized(
    const ModelParams& params, const std::vector<Tensor>& feature_planes,
    const CommGraph& graph);

// Convenience wrapper around forward_team for inference.
std::vector<std::array<double, 2>> forward_centralized(
    const ModelParams& params, const std::vector<Tensor>& feature_planes,
    const CommGraph& graph);

// Cell-center coordinate normalization used for labels and predictions.
inline std::array<double, 2> normalize_cell(Cell c, int width, int height) {
  return {(static_cast<double>(c.x) + 0.5) / static_cast<double>(width),
          (static_cast<double>(c.y) + 0.5) / static_cast<double>(height)};
}
inline std::array<double, 2> denormalize(std::array<double, 2> p, int width, int height) {
  return {p[0] * static_cast<double>(width) - 0.5, p[1] * static_cast<double>(height) - 0.5};
}

Tensor feature_map_to_tensor(const FeatureMap& fm);

}  // namespace gatar
