// Command-line front end over the C API: generate worlds and datasets, train,
// evaluate, sweep, ablate, roll out missions, and render them. Every
// subcommand writes its outputs plus a run_config.json snapshot under --out.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gatar.h"
#include "json.hpp"

namespace {

// GATAR_OUT_ROOT reroots relative --out paths; absolute paths stay put.
std::string resolve_out(const std::string& out) {
  const char* root = std::getenv("GATAR_OUT_ROOT");
  if (root == nullptr || *root == '\0' || std::filesystem::path(out).is_absolute()) return out;
  return (std::filesystem::path(root) / out).string();
}

int runtime_error_exit(const std::string& context) {
  std::fprintf(stderr, "error: %s: %s\n", context.c_str(), gatar_last_error());
  return 1;
}

bool check(gatar_status status) { return status == GATAR_OK; }

int prepare_out_dir(const std::string& dir, const nlohmann::json& run_config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create %s: %s\n", dir.c_str(), ec.message().c_str());
    return 1;
  }
  std::ofstream snapshot(dir + "/run_config.json");
  snapshot << run_config.dump(2) << "\n";
  if (!snapshot.good()) {
    std::fprintf(stderr, "error: cannot write %s/run_config.json\n", dir.c_str());
    return 1;
  }
  return 0;
}

struct WorldFlags {
  int width = 15;
  int height = 15;
  int subarea_rows = 3;
  int subarea_cols = 3;
  int rich_count = 4;
  double obstacle_density = 0.3;

  void attach(CLI::App& cmd) {
    cmd.add_option("--width", width, "world width in cells")->capture_default_str();
    cmd.add_option("--height", height, "world height in cells")->capture_default_str();
    cmd.add_option("--subarea-rows", subarea_rows, "sub-area grid rows")->capture_default_str();
    cmd.add_option("--subarea-cols", subarea_cols, "sub-area grid columns")
        ->capture_default_str();
    cmd.add_option("--rich-count", rich_count, "obstacle-rich sub-areas")->capture_default_str();
    cmd.add_option("--obstacle-density", obstacle_density,
                   "obstacle fraction inside rich sub-areas")
        ->capture_default_str();
  }

  nlohmann::json json() const {
    return {{"width", width},
            {"height", height},
            {"subarea_rows", subarea_rows},
            {"subarea_cols", subarea_cols},
            {"rich_count", rich_count},
            {"obstacle_density", obstacle_density}};
  }
};

struct FeatureFlags {
  double sigma = 1.2;
  bool no_cost_map = false;
  bool no_gaussian_targets = false;
  bool no_product = false;

  void attach(CLI::App& cmd) {
    cmd.add_option("--sigma", sigma, "gaussian target spread")->capture_default_str();
    cmd.add_flag("--no-cost-map", no_cost_map, "plain traversability instead of the cost map");
    cmd.add_flag("--no-gaussian-targets", no_gaussian_targets,
                 "plain target hits instead of gaussians");
    cmd.add_flag("--no-product", no_product, "zero the product channel");
  }

  nlohmann::json json() const {
    return {{"sigma", sigma},
            {"cost_map", !no_cost_map},
            {"gaussian_targets", !no_gaussian_targets},
            {"product", !no_product}};
  }
};

struct ModelFlags {
  int grid_h = 15;
  int grid_w = 15;
  int conv1 = 8;
  int conv2 = 16;
  int embed = 32;
  int heads = 4;
  int layers = 2;
  int decoder_hidden = 64;
  bool no_vcycle_shortcut = false;
  bool tied_passes = false;
  FeatureFlags features;

  void attach(CLI::App& cmd) {
    cmd.add_option("--grid-h", grid_h, "model input grid height")->capture_default_str();
    cmd.add_option("--grid-w", grid_w, "model input grid width")->capture_default_str();
    cmd.add_option("--conv1", conv1, "first conv channels")->capture_default_str();
    cmd.add_option("--conv2", conv2, "second conv channels")->capture_default_str();
    cmd.add_option("--embed", embed, "embedding width")->capture_default_str();
    cmd.add_option("--heads", heads, "attention heads")->capture_default_str();
    cmd.add_option("--layers", layers, "exchange rounds (resolution levels)")
        ->capture_default_str();
    cmd.add_option("--decoder-hidden", decoder_hidden, "decoder hidden width")
        ->capture_default_str();
    cmd.add_flag("--no-vcycle-shortcut", no_vcycle_shortcut, "drop the upward shortcut term");
    cmd.add_flag("--tied-passes", tied_passes, "share attention parameters per level");
    features.attach(cmd);
  }

  nlohmann::json json() const {
    return {{"grid_h", grid_h},
            {"grid_w", grid_w},
            {"conv1", conv1},
            {"conv2", conv2},
            {"embed", embed},
            {"heads", heads},
            {"layers", layers},
            {"decoder_hidden", decoder_hidden},
            {"vcycle_shortcut", !no_vcycle_shortcut},
            {"tied_passes", tied_passes},
            {"features", features.json()}};
  }
};

struct TrainFlags {
  double lr = 1e-3;
  int batch = 32;
  int epochs = 500;
  int patience = 10;
  double budget_seconds = 1800.0;

  void attach(CLI::App& cmd) {
    cmd.add_option("--lr", lr, "learning rate")->capture_default_str();
    cmd.add_option("--batch", batch, "batch size")->capture_default_str();
    cmd.add_option("--epochs", epochs, "maximum training epochs")->capture_default_str();
    cmd.add_option("--patience", patience, "early-stop patience in epochs")
        ->capture_default_str();
    cmd.add_option("--budget-seconds", budget_seconds, "wall-clock training budget")
        ->capture_default_str();
  }

  nlohmann::json json(std::uint64_t seed, int jobs) const {
    return {{"lr", lr},         {"batch", batch},
            {"max_epochs", epochs}, {"patience", patience},
            {"budget_seconds", budget_seconds}, {"seed", seed},
            {"jobs", jobs}};
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heterogeneous multi-robot task allocation toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int jobs = 0;
  app.add_option("--seed", seed, "random seed (default 0)")->capture_default_str();
  app.add_option("--jobs", jobs, "worker threads, 0 = all cores")->capture_default_str();

  // gen-world
  auto* gen_world = app.add_subcommand("gen-world", "generate a world map JSON");
  WorldFlags gw_world;
  std::string gw_out;
  gw_world.attach(*gen_world);
  gen_world->add_option("--out", gw_out, "output directory")->required();

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "generate a labeled dataset");
  WorldFlags gd_world;
  FeatureFlags gd_features;
  std::string gd_team = "2A2G";
  int gd_maps = 100;
  int gd_samples_per_map = 10;
  int gd_targets_per_agent = 10;
  std::string gd_out;
  gd_world.attach(*gen_data);
  gd_features.attach(*gen_data);
  gen_data->add_option("--team", gd_team, "composition, e.g. 2A2G = 2 flyers + 2 ground")
      ->capture_default_str();
  gen_data->add_option("--maps", gd_maps, "distinct maps")->capture_default_str();
  gen_data->add_option("--samples-per-map", gd_samples_per_map, "placements per map")
      ->capture_default_str();
  gen_data->add_option("--targets-per-agent", gd_targets_per_agent, "targets per team member")
      ->capture_default_str();
  gen_data->add_option("--out", gd_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train a model on a dataset");
  std::string tr_data;
  std::string tr_out;
  ModelFlags tr_model;
  TrainFlags tr_opts;
  train->add_option("--data", tr_data, "dataset file from gen-data")->required();
  tr_model.attach(*train);
  tr_opts.attach(*train);
  train->add_option("--out", tr_out, "output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or baseline on a test set");
  std::string ev_ckpt;
  std::string ev_test;
  std::string ev_out;
  std::string ev_baseline = "model";
  double ev_r_comm = 0.0;
  std::string ev_composition;
  eval->add_option("--ckpt", ev_ckpt, "model checkpoint (required unless --baseline)");
  eval->add_option("--test", ev_test, "test dataset file")->required();
  eval->add_option("--baseline", ev_baseline,
                   "what to score: model, nearest_visible, or random_visible")
      ->capture_default_str();
  auto* ev_r_opt = eval->add_option("--r-comm", ev_r_comm, "override communication radius");
  auto* ev_c_opt =
      eval->add_option("--composition", ev_composition, "override team composition, e.g. 4A1G");
  eval->add_option("--out", ev_out, "output directory")->required();

  // sweep-comm
  auto* sweep = app.add_subcommand("sweep-comm", "evaluate across communication radii");
  std::string sw_ckpt;
  std::string sw_test;
  std::string sw_range = "0:7";
  std::string sw_out;
  sweep->add_option("--ckpt", sw_ckpt, "model checkpoint")->required();
  sweep->add_option("--test", sw_test, "test dataset file")->required();
  sweep->add_option("--range", sw_range, "radius range lo:hi inclusive")->capture_default_str();
  sweep->add_option("--out", sw_out, "output directory")->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "train and score every ablation variant");
  std::string ab_train;
  std::string ab_test;
  std::string ab_out;
  ModelFlags ab_model;
  TrainFlags ab_opts;
  ablate->add_option("--train", ab_train, "training dataset file")->required();
  ablate->add_option("--test", ab_test, "test dataset file")->required();
  ab_model.attach(*ablate);
  ab_opts.attach(*ablate);
  ablate->add_option("--out", ab_out, "output directory")->required();

  // rollout
  auto* rollout = app.add_subcommand("rollout", "run a sequential localization mission");
  std::string ro_world;
  std::string ro_team = "2A2G";
  int ro_targets = -1;
  std::string ro_policy = "gatar";
  std::string ro_ckpt;
  int ro_steps = 40;
  bool ro_no_commit = false;
  std::string ro_out;
  rollout->add_option("--world", ro_world, "world JSON from gen-world")->required();
  rollout->add_option("--team", ro_team, "composition, e.g. 2A2G")->capture_default_str();
  rollout->add_option("--targets", ro_targets,
                      "targets to place (default ten per agent, 0 keeps the world's)");
  rollout->add_option("--policy", ro_policy, "gatar, greedy_no_comm, random, or expert")
      ->capture_default_str();
  rollout->add_option("--ckpt", ro_ckpt, "model checkpoint (gatar policy only)");
  rollout->add_option("--steps", ro_steps, "mission step limit")->capture_default_str();
  rollout->add_flag("--no-commit", ro_no_commit, "re-allocate every step instead of committing");
  rollout->add_option("--out", ro_out, "output directory")->required();

  // render
  auto* render = app.add_subcommand("render", "draw an episode as pixmap frames");
  std::string rd_episode;
  std::string rd_out;
  render->add_option("--episode", rd_episode, "episode JSON from rollout")->required();
  render->add_option("--out", rd_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (gen_world->parsed()) {
    const std::string out = resolve_out(gw_out);
    const nlohmann::json config = gw_world.json();
    const nlohmann::json snapshot = {
        {"subcommand", "gen-world"}, {"seed", seed}, {"world", config}};
    if (const int rc = prepare_out_dir(out, snapshot)) return rc;
    gatar_world* world = nullptr;
    if (!check(gatar_world_generate(config.dump().c_str(), seed, &world))) {
      return runtime_error_exit("gen-world");
    }
    const gatar_status status = gatar_world_save(world, (out + "/world.json").c_str());
    gatar_world_free(world);
    if (status != GATAR_OK) return runtime_error_exit("gen-world");
    std::printf("wrote %s/world.json\n", out.c_str());
    return 0;
  }

  if (gen_data->parsed()) {
    const std::string out = resolve_out(gd_out);
    const nlohmann::json config = {{"world", gd_world.json()},
                                   {"team", gd_team},
                                   {"maps", gd_maps},
                                   {"placements_per_map", gd_samples_per_map},
                                   {"targets_per_agent", gd_targets_per_agent},
                                   {"features", gd_features.json()}};
    const nlohmann::json snapshot = {
        {"subcommand", "gen-data"}, {"seed", seed}, {"dataset", config}};
    if (const int rc = prepare_out_dir(out, snapshot)) return rc;
    gatar_dataset* dataset = nullptr;
    if (!check(gatar_dataset_generate(config.dump().c_str(), seed, &dataset))) {
      return runtime_error_exit("gen-data");
    }
    uint64_t n = 0;
    gatar_dataset_size(dataset, &n);
    const gatar_status status = gatar_dataset_save(dataset, (out + "/data.gtds").c_str());
    gatar_dataset_free(dataset);
    if (status != GATAR_OK) return runtime_error_exit("gen-data");
    std::printf("wrote %s/data.gtds (%llu samples)\n", out.c_str(),
                static_cast<unsigned long long>(n));
    return 0;
  }

  if (train->parsed()) {
    const std::string out = resolve_out(tr_out);
    const nlohmann::json model_config = tr_model.json();
    const nlohmann::json options = tr_opts.json(seed, jobs);
    const nlohmann::json snapshot = {{"subcommand", "train"},
                                     {"data", tr_data},
                                     {"model", model_config},
                                     {"options", options}};
    if (const int rc = prepare_out_dir(out, snapshot)) return rc;
    gatar_dataset* dataset = nullptr;
    if (!check(gatar_dataset_load(tr_data.c_str(), &dataset))) {
      return runtime_error_exit("train");
    }
    gatar_model* model = nullptr;
    const gatar_status status =
        gatar_train(dataset, model_config.dump().c_str(), options.dump().c_str(),
                    (out + "/loss.csv").c_str(), &model);
    gatar_dataset_free(dataset);
    if (status != GATAR_OK) return runtime_error_exit("train");
    const gatar_status saved = gatar_model_save(model, (out + "/model.ckpt").c_str());
    gatar_model_free(model);
    if (saved != GATAR_OK) return runtime_error_exit("train");
    std::printf("wrote %s/model.ckpt and %s/loss.csv\n", out.c_str(), out.c_str());
    return 0;
  }

  if (eval->parsed()) {
    const std::string out = resolve_out(ev_out);
    nlohmann::json overrides = {{"seed", seed}, {"jobs", jobs}};
    if (ev_r_opt->count() > 0) overrides["r_comm"] = ev_r_comm;
    if (ev_c_opt->count() > 0) overrides["composition"] = ev_composition;
    const nlohmann::json snapshot = {{"subcommand", "eval"},
                                     {"ckpt", ev_ckpt},
                                     {"test", ev_test},
                                     {"baseline", ev_baseline},
                                     {"overrides", overrides}};
    if (ev_baseline == "model" && ev_ckpt.empty()) {
      std::fprintf(stderr, "eval: --ckpt is required when scoring the model\n");
      return 2;
    }
    if (const int rc = prepare_out_dir(out, snapshot)) return rc;
    gatar_dataset* test = nullptr;
    if (!check(gatar_dataset_load(ev_test.c_str(), &test))) return runtime_error_exit("eval");
    gatar_status status;
    if (ev_baseline == "model") {
      gatar_model* model = nullptr;
      if (!check(gatar_model_load(ev_ckpt.c_str(), &model))) {
        gatar_dataset_free(test);
        return runtime_error_exit("eval");
      }
      status = gatar_evaluate(model, test, overrides.dump().c_str(),
                              (out + "/metrics.csv").c_str());
      gatar_model_free(model);
    } else {
      status = gatar_evaluate_baseline(ev_baseline.c_str(), test, overrides.dump().c_str(),
                                       (out + "/metrics.csv").c_str());
    }
    gatar_dataset_free(test);
    if (status != GATAR_OK) return runtime_error_exit("eval");
    std::printf("wrote %s/metrics.csv\n", out.c_str());
    return 0;
  }

  if (sweep->parsed()) {
    const std::string out = resolve_out(sw_out);
    int lo = 0;
    int hi = 0;
    if (std::sscanf(sw_range.c_str(), "%d:%d", &lo, &hi) != 2 || lo > hi || lo < 0) {
      std::fprintf(stderr, "sweep-comm: --range wants lo:hi with 0 <= lo <= hi\n");
      return 2;
    }
    const nlohmann::json snapshot = {{"subcommand", "sweep-comm"},
                                     {"ckpt", sw_ckpt},
                                     {"test", sw_test},
                                     {"range", sw_range},
                                     {"jobs", jobs}};
    if (const int rc = prepare_out_dir(out, snapshot)) return rc;
    gatar_model* model = nullptr;
    if (!check(gatar_model_load(sw_ckpt.c_str(), &model))) return runtime_error_exit("sweep-comm");
    gatar_dataset* test = nullptr;
    if (!check(gatar_dataset_load(sw_test.c_str(), &test))) {
      gatar_model_free(model);
      return runtime_error_exit("sweep-comm");
    }
    const gatar_status status =
        gatar_sweep_comm(model, test, lo, hi, jobs, (out + "/sweep.csv").c_str());
    gatar_model_free(model);
    gatar_dataset_free(test);
    if (status != GATAR_OK) return runtime_error_exit("sweep-comm");
    std::printf("wrote %s/sweep.csv\n", out.c_str());
    return 0;
  }

  if (ablate->parsed()) {
    const std::string out = resolve_out(ab_out);
    const nlohmann::json model_config = ab_model.json();
    const nlohmann::json options = ab_opts.json(seed, jobs);
    const nlohmann::json snapshot = {{"subcommand", "ablate"},
                                     {"train", ab_train},
                                     {"test", ab_test},
                                     {"model", model_config},
                                     {"options", options}};
    if (const int rc = prepare_out_dir(out, snapshot)) return rc;
    gatar_dataset* train_ds = nullptr;
    if (!check(gatar_dataset_load(ab_train.c_str(), &train_ds))) {
      return runtime_error_exit("ablate");
    }
    gatar_dataset* test_ds = nullptr;
    if (!check(gatar_dataset_load(ab_test.c_str(), &test_ds))) {
      gatar_dataset_free(train_ds);
      return runtime_error_exit("ablate");
    }
    const gatar_status status =
        gatar_ablate(train_ds, test_ds, model_config.dump().c_str(), options.dump().c_str(),
                     (out + "/ablation.csv").c_str());
    gatar_dataset_free(train_ds);
    gatar_dataset_free(test_ds);
    if (status != GATAR_OK) return runtime_error_exit("ablate");
    std::printf("wrote %s/ablation.csv\n", out.c_str());
    return 0;
  }

  if (rollout->parsed()) {
    if (ro_policy == "gatar" && ro_ckpt.empty()) {
      std::fprintf(stderr, "rollout: --ckpt is required for the gatar policy\n");
      return 2;
    }
    const std::string out = resolve_out(ro_out);
    const nlohmann::json options = {
        {"max_steps", ro_steps}, {"commit", !ro_no_commit}, {"seed", seed}};
    const nlohmann::json snapshot = {{"subcommand", "rollout"}, {"world", ro_world},
                                     {"team", ro_team},         {"targets", ro_targets},
                                     {"policy", ro_policy},     {"ckpt", ro_ckpt},
                                     {"options", options}};
    if (const int rc = prepare_out_dir(out, snapshot)) return rc;
    gatar_world* world = nullptr;
    if (!check(gatar_world_load(ro_world.c_str(), &world))) return runtime_error_exit("rollout");
    gatar_model* model = nullptr;
    if (ro_policy == "gatar") {
      if (!check(gatar_model_load(ro_ckpt.c_str(), &model))) {
        gatar_world_free(world);
        return runtime_error_exit("rollout");
      }
    }
    int n_targets = ro_targets;
    if (n_targets < 0) {
      int flyers = 0;
      int grounds = 0;
      if (std::sscanf(ro_team.c_str(), "%dA%dG", &flyers, &grounds) == 2) {
        n_targets = 10 * (flyers + grounds);
      } else {
        n_targets = 0;  // the library reports the malformed team precisely
      }
    }
    gatar_episode* episode = nullptr;
    const gatar_status status = gatar_rollout(world, ro_team.c_str(), n_targets,
                                              ro_policy.c_str(), model,
                                              options.dump().c_str(), &episode);
    gatar_world_free(world);
    gatar_model_free(model);
    if (status != GATAR_OK) return runtime_error_exit("rollout");
    uint64_t localized = 0;
    int steps = 0;
    gatar_episode_coverage(episode, &localized, &steps);
    const gatar_status saved = gatar_episode_save(episode, (out + "/episode.json").c_str());
    gatar_episode_free(episode);
    if (saved != GATAR_OK) return runtime_error_exit("rollout");
    std::printf("wrote %s/episode.json (%llu targets localized in %d steps)\n", out.c_str(),
                static_cast<unsigned long long>(localized), steps);
    return 0;
  }

  if (render->parsed()) {
    const std::string out = resolve_out(rd_out);
    const nlohmann::json snapshot = {{"subcommand", "render"}, {"episode", rd_episode}};
    if (const int rc = prepare_out_dir(out, snapshot)) return rc;
    gatar_episode* episode = nullptr;
    if (!check(gatar_episode_load(rd_episode.c_str(), &episode))) {
      return runtime_error_exit("render");
    }
    const gatar_status status = gatar_render(episode, out.c_str());
    gatar_episode_free(episode);
    if (status != GATAR_OK) return runtime_error_exit("render");
    std::printf("wrote frames and coverage.csv under %s\n", out.c_str());
    return 0;
  }

  return 2;
}
