#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/world.hpp"

namespace gatar {

// One supervised instance: a placed world, the team standing in it, what each
// agent fed the network, who could talk to whom, and the centralized greedy
// choice as regression label (normalized cell-center coordinates). Agents the
// expert left without a target carry no label and are masked from the loss.
struct Sample {
  std::uint64_t map_seed = 0;
  int placement = 0;
  GridWorld world;
  std::vector<AgentState> team;
  std::vector<Tensor> planes;
  CommGraph graph;
  std::vector<std::optional<std::array<double, 2>>> labels;
};

struct DatasetConfig {
  WorldConfig world;
  std::string team = "2A2G";
  int maps = 100;
  int placements_per_map = 10;
  int targets_per_agent = 10;  // targets scale with team size
  FeatureOptions features;

  std::string to_json() const;
  static DatasetConfig from_json(const std::string& text);
};

struct Dataset {
  DatasetConfig config;
  std::uint64_t seed = 0;
  std::vector<Sample> samples;
};

// The last fifth of every map's placements is held out for validation.
bool is_validation(const Dataset& ds, std::size_t index);

// Feature planes one agent would feed the network from its own view.
Tensor planes_for(const GridWorld& world, const AgentState& agent, const FeatureOptions& options);

// Rebuilds every agent's planes under different feature options.
std::vector<Tensor> planes_with(const Sample& s, const FeatureOptions& options);

// Normalized expert targets for a placed team; nullopt where the expert
// assigns nothing.
std::vector<std::optional<std::array<double, 2>>> expert_labels(
    const GridWorld& world, const std::vector<AgentState>& team);

// maps * placements_per_map samples. Placements where no agent sees any
// target are resampled with a derived seed; a map seed is part of the error
// when that keeps failing.
Dataset generate_dataset(const DatasetConfig& config, std::uint64_t seed);

// Versioned binary container; load rebuilds exactly what save wrote.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace gatar
