#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <gatar.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr const char* kWorldConfig =
    R"({"width": 9, "height": 9, "subarea_rows": 3, "subarea_cols": 3,)"
    R"( "rich_count": 3, "obstacle_density": 0.3})";

constexpr const char* kDatasetConfig =
    R"({"world": {"width": 9, "height": 9, "subarea_rows": 3, "subarea_cols": 3,)"
    R"( "rich_count": 3, "obstacle_density": 0.3},)"
    R"( "team": "1A1G", "maps": 2, "placements_per_map": 3, "targets_per_agent": 2})";

constexpr const char* kModelConfig =
    R"({"grid_h": 9, "grid_w": 9, "conv1": 3, "conv2": 4, "embed": 8,)"
    R"( "heads": 2, "layers": 1, "decoder_hidden": 8})";

constexpr const char* kTrainOptions =
    R"({"lr": 0.003, "batch": 4, "max_epochs": 2, "seed": 1, "jobs": 2})";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace

TEST_CASE("error families map to distinct status codes") {
  gatar_world* world = nullptr;
  CHECK(gatar_world_generate("{nope", 0, &world) == GATAR_ERR_PARSE);
  CHECK(std::strlen(gatar_last_error()) > 0);
  CHECK(world == nullptr);

  CHECK(gatar_world_generate(nullptr, 0, nullptr) == GATAR_ERR_CONTRACT);
  CHECK(std::strlen(gatar_last_error()) > 0);

  CHECK(gatar_world_load("missing_world.json", &world) == GATAR_ERR_IO);
  CHECK(std::string(gatar_last_error()).find("missing_world.json") != std::string::npos);

  // a success wipes the sticky message
  CHECK(gatar_world_generate(nullptr, 0, &world) == GATAR_OK);
  CHECK(std::strlen(gatar_last_error()) == 0);
  int w = 0;
  int h = 0;
  CHECK(gatar_world_size(world, &w, &h) == GATAR_OK);
  CHECK(w == 15);
  CHECK(h == 15);
  gatar_world_free(world);
}

TEST_CASE("worlds round-trip through files") {
  gatar_world* world = nullptr;
  REQUIRE(gatar_world_generate(kWorldConfig, 7, &world) == GATAR_OK);
  int w = 0;
  int h = 0;
  REQUIRE(gatar_world_size(world, &w, &h) == GATAR_OK);
  CHECK(w == 9);
  CHECK(h == 9);

  REQUIRE(gatar_world_save(world, "capi_world.json") == GATAR_OK);
  gatar_world* loaded = nullptr;
  REQUIRE(gatar_world_load("capi_world.json", &loaded) == GATAR_OK);
  REQUIRE(gatar_world_size(loaded, &w, &h) == GATAR_OK);
  CHECK(w == 9);
  CHECK(h == 9);

  REQUIRE(gatar_world_save(loaded, "capi_world_again.json") == GATAR_OK);
  CHECK(read_file("capi_world_again.json") == read_file("capi_world.json"));

  CHECK(gatar_world_save(nullptr, "x.json") == GATAR_ERR_CONTRACT);
  CHECK(gatar_world_size(nullptr, &w, &h) == GATAR_ERR_CONTRACT);
  gatar_world_free(loaded);
  gatar_world_free(world);
  gatar_world_free(nullptr);
}

TEST_CASE("datasets generate deterministically and round-trip") {
  gatar_dataset* data = nullptr;
  REQUIRE(gatar_dataset_generate(kDatasetConfig, 3, &data) == GATAR_OK);
  std::uint64_t n = 0;
  REQUIRE(gatar_dataset_size(data, &n) == GATAR_OK);
  CHECK(n == 6);  // maps x placements_per_map

  REQUIRE(gatar_dataset_save(data, "capi_data.gtds") == GATAR_OK);
  gatar_dataset* loaded = nullptr;
  REQUIRE(gatar_dataset_load("capi_data.gtds", &loaded) == GATAR_OK);
  REQUIRE(gatar_dataset_size(loaded, &n) == GATAR_OK);
  CHECK(n == 6);
  REQUIRE(gatar_dataset_save(loaded, "capi_data_again.gtds") == GATAR_OK);
  CHECK(read_file("capi_data_again.gtds") == read_file("capi_data.gtds"));

  gatar_dataset* repeat = nullptr;
  REQUIRE(gatar_dataset_generate(kDatasetConfig, 3, &repeat) == GATAR_OK);
  REQUIRE(gatar_dataset_save(repeat, "capi_data_repeat.gtds") == GATAR_OK);
  CHECK(read_file("capi_data_repeat.gtds") == read_file("capi_data.gtds"));

  CHECK(gatar_dataset_generate("[]", 0, &repeat) == GATAR_ERR_PARSE);
  CHECK(gatar_dataset_load("missing.gtds", &repeat) == GATAR_ERR_IO);
  CHECK(gatar_dataset_size(data, nullptr) == GATAR_ERR_CONTRACT);
  gatar_dataset_free(repeat);
  gatar_dataset_free(loaded);
  gatar_dataset_free(data);
}

TEST_CASE("training, checkpoints, and evaluation work through the C surface") {
  gatar_dataset* data = nullptr;
  REQUIRE(gatar_dataset_generate(kDatasetConfig, 3, &data) == GATAR_OK);

  gatar_model* model = nullptr;
  REQUIRE(gatar_train(data, kModelConfig, kTrainOptions, "capi_loss.csv", &model) == GATAR_OK);
  const auto loss = read_lines("capi_loss.csv");
  REQUIRE(loss.size() >= 2);
  CHECK(loss[0] == "epoch,train_loss,val_dist50");

  REQUIRE(gatar_model_save(model, "capi_model.ckpt") == GATAR_OK);
  gatar_model* loaded = nullptr;
  REQUIRE(gatar_model_load("capi_model.ckpt", &loaded) == GATAR_OK);

  REQUIRE(gatar_evaluate(model, data, nullptr, "capi_metrics_a.csv") == GATAR_OK);
  REQUIRE(gatar_evaluate(loaded, data, nullptr, "capi_metrics_b.csv") == GATAR_OK);
  CHECK(read_file("capi_metrics_a.csv") == read_file("capi_metrics_b.csv"));

  const auto metrics = read_lines("capi_metrics_a.csv");
  REQUIRE(metrics.size() == 2);
  CHECK(metrics[0] == "config,r_comm,composition,dist_avg,dist_50,dist_90,n");
  CHECK(starts_with(metrics[1], "model,6,1A1G,"));

  REQUIRE(gatar_evaluate(model, data, R"({"r_comm": 3})", "capi_metrics_r3.csv") == GATAR_OK);
  CHECK(starts_with(read_lines("capi_metrics_r3.csv")[1], "model,3,1A1G,"));

  CHECK(gatar_train(nullptr, nullptr, nullptr, nullptr, &model) == GATAR_ERR_CONTRACT);
  CHECK(gatar_model_load("missing.ckpt", &loaded) == GATAR_ERR_IO);
  CHECK(gatar_evaluate(model, data, "{\"composition\": \"bogus\"}", "x.csv") != GATAR_OK);

  gatar_model_free(loaded);
  gatar_model_free(model);
  gatar_dataset_free(data);
}

TEST_CASE("baselines, sweeps, and ablations emit complete tables") {
  gatar_dataset* data = nullptr;
  REQUIRE(gatar_dataset_generate(kDatasetConfig, 3, &data) == GATAR_OK);

  REQUIRE(gatar_evaluate_baseline("nearest_visible", data, nullptr, "capi_base_n.csv") ==
          GATAR_OK);
  CHECK(starts_with(read_lines("capi_base_n.csv")[1], "nearest_visible,"));
  REQUIRE(gatar_evaluate_baseline("random_visible", data, nullptr, "capi_base_r.csv") == GATAR_OK);
  CHECK(starts_with(read_lines("capi_base_r.csv")[1], "random_visible,"));
  CHECK(gatar_evaluate_baseline("psychic", data, nullptr, "x.csv") == GATAR_ERR_CONFIG);

  gatar_model* model = nullptr;
  REQUIRE(gatar_model_init(kModelConfig, 5, &model) == GATAR_OK);
  REQUIRE(gatar_sweep_comm(model, data, 0, 3, 2, "capi_sweep.csv") == GATAR_OK);
  const auto sweep = read_lines("capi_sweep.csv");
  REQUIRE(sweep.size() == 1 + 4);
  CHECK(starts_with(sweep[1], "model,0,"));
  CHECK(starts_with(sweep[4], "model,3,"));
  CHECK(gatar_sweep_comm(model, data, 3, 0, 2, "x.csv") == GATAR_ERR_CONTRACT);

  const char* fast = R"({"lr": 0.003, "batch": 4, "max_epochs": 1, "seed": 1, "jobs": 2})";
  REQUIRE(gatar_ablate(data, data, kModelConfig, fast, "capi_ablation.csv") == GATAR_OK);
  const auto table = read_lines("capi_ablation.csv");
  REQUIRE(table.size() == 1 + 6);
  CHECK(starts_with(table[1], "full,"));
  CHECK(starts_with(table[5], "no_vcycle_shortcut,"));
  CHECK(starts_with(table[6], "none_of_preprocessing,"));

  gatar_model_free(model);
  gatar_dataset_free(data);
}

TEST_CASE("rollouts, episode files, coverage, and rendering work end to end") {
  gatar_world* world = nullptr;
  REQUIRE(gatar_world_generate(kWorldConfig, 11, &world) == GATAR_OK);

  gatar_episode* episode = nullptr;
  const char* options = R"({"max_steps": 20, "seed": 5})";
  REQUIRE(gatar_rollout(world, "1A1G", 3, "greedy_no_comm", nullptr, options, &episode) ==
          GATAR_OK);

  std::uint64_t localized = 0;
  int steps = 0;
  REQUIRE(gatar_episode_coverage(episode, &localized, &steps) == GATAR_OK);
  CHECK(localized <= 3);
  CHECK(steps >= 1);
  CHECK(steps <= 20);

  REQUIRE(gatar_episode_save(episode, "capi_episode.json") == GATAR_OK);
  gatar_episode* loaded = nullptr;
  REQUIRE(gatar_episode_load("capi_episode.json", &loaded) == GATAR_OK);
  std::uint64_t localized_again = 0;
  int steps_again = 0;
  REQUIRE(gatar_episode_coverage(loaded, &localized_again, &steps_again) == GATAR_OK);
  CHECK(localized_again == localized);
  CHECK(steps_again == steps);

  // identical seeds replay identical missions
  gatar_episode* repeat = nullptr;
  REQUIRE(gatar_rollout(world, "1A1G", 3, "greedy_no_comm", nullptr, options, &repeat) ==
          GATAR_OK);
  REQUIRE(gatar_episode_save(repeat, "capi_episode_repeat.json") == GATAR_OK);
  CHECK(read_file("capi_episode_repeat.json") == read_file("capi_episode.json"));

  REQUIRE(gatar_render(episode, "capi_frames") == GATAR_OK);
  CHECK(std::ifstream("capi_frames/frame_0001.ppm").good());
  CHECK(read_lines("capi_frames/coverage.csv")[0] ==
        "step,agent_id,targets_localized_cumulative");

  CHECK(gatar_rollout(world, "1A1G", 3, "wander", nullptr, nullptr, &episode) ==
        GATAR_ERR_CONFIG);
  CHECK(gatar_rollout(world, "1A1G", 3, "gatar", nullptr, nullptr, &episode) == GATAR_ERR_CONFIG);
  CHECK(gatar_rollout(world, "oneAoneG", 3, "random", nullptr, nullptr, &episode) ==
        GATAR_ERR_CONFIG);
  CHECK(gatar_rollout(world, "1A1G", -1, "random", nullptr, nullptr, &episode) ==
        GATAR_ERR_CONFIG);
  CHECK(gatar_rollout(world, "1A1G", 3, "random", nullptr, "{\"max_steps\": \"soon\"}",
                      &episode) == GATAR_ERR_PARSE);
  CHECK(gatar_episode_load("missing_episode.json", &loaded) == GATAR_ERR_IO);

  gatar_episode_free(repeat);
  gatar_episode_free(loaded);
  gatar_episode_free(episode);
  gatar_world_free(world);
}

TEST_CASE("a model-driven rollout runs when the grids line up") {
  gatar_world* world = nullptr;
  REQUIRE(gatar_world_generate(kWorldConfig, 2, &world) == GATAR_OK);
  gatar_model* model = nullptr;
  REQUIRE(gatar_model_init(kModelConfig, 5, &model) == GATAR_OK);

  gatar_episode* episode = nullptr;
  REQUIRE(gatar_rollout(world, "1A1G", 2, "gatar", model, R"({"max_steps": 6, "seed": 9})",
                        &episode) == GATAR_OK);
  int steps = 0;
  REQUIRE(gatar_episode_coverage(episode, nullptr, &steps) == GATAR_OK);
  CHECK(steps >= 1);
  gatar_episode_free(episode);

  // a 15x15 default world rejects the 9x9 model
  gatar_world* wide = nullptr;
  REQUIRE(gatar_world_generate(nullptr, 2, &wide) == GATAR_OK);
  CHECK(gatar_rollout(wide, "1A1G", 2, "gatar", model, nullptr, &episode) == GATAR_ERR_CONFIG);

  gatar_world_free(wide);
  gatar_model_free(model);
  gatar_world_free(world);
}
