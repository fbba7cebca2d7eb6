#include "gatar.h"

#include <algorithm>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include "core/agent.hpp"
#include "core/dataset.hpp"
#include "core/errors.hpp"
#include "core/model.hpp"
#include "core/pipeline.hpp"
#include "core/render.hpp"
#include "core/rng.hpp"
#include "core/rollout.hpp"
#include "core/world.hpp"
#include "json.hpp"

struct gatar_world {
  gatar::GridWorld world;
};
struct gatar_dataset {
  gatar::Dataset dataset;
};
struct gatar_model {
  gatar::ModelParams params;
};
struct gatar_episode {
  gatar::Episode episode;
};

namespace {

thread_local std::string g_last_error;

gatar_status fail(gatar_status code, const char* message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
gatar_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GATAR_OK;
  } catch (const gatar::ConfigError& e) {
    return fail(GATAR_ERR_CONFIG, e.what());
  } catch (const gatar::ParseError& e) {
    return fail(GATAR_ERR_PARSE, e.what());
  } catch (const gatar::IoError& e) {
    return fail(GATAR_ERR_IO, e.what());
  } catch (const gatar::RuntimeFailure& e) {
    return fail(GATAR_ERR_RUNTIME, e.what());
  } catch (const gatar::ContractError& e) {
    return fail(GATAR_ERR_CONTRACT, e.what());
  } catch (const std::exception& e) {
    return fail(GATAR_ERR_RUNTIME, e.what());
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw gatar::ContractError(message);
}

// NULL counts as an empty object so every config argument is optional.
nlohmann::json parse_object(const char* text, const std::string& what) {
  if (text == nullptr) return nlohmann::json::object();
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) throw gatar::ParseError(what + ": expected a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw gatar::ParseError(what + ": " + e.what());
  }
}

gatar::WorldConfig world_config_from(const char* text) {
  const nlohmann::json j = parse_object(text, "world config");
  gatar::WorldConfig c;
  try {
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.subarea_rows = j.value("subarea_rows", c.subarea_rows);
    c.subarea_cols = j.value("subarea_cols", c.subarea_cols);
    c.rich_count = j.value("rich_count", c.rich_count);
    c.obstacle_density = j.value("obstacle_density", c.obstacle_density);
  } catch (const nlohmann::json::exception& e) {
    throw gatar::ParseError(std::string("world config: ") + e.what());
  }
  return c;
}

gatar::TrainOptions train_options_from(const char* text) {
  const nlohmann::json j = parse_object(text, "train options");
  gatar::TrainOptions o;
  try {
    o.lr = j.value("lr", o.lr);
    o.batch = j.value("batch", o.batch);
    o.max_epochs = j.value("max_epochs", o.max_epochs);
    o.patience = j.value("patience", o.patience);
    o.budget_seconds = j.value("budget_seconds", o.budget_seconds);
    o.seed = j.value("seed", o.seed);
    o.jobs = j.value("jobs", o.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw gatar::ParseError(std::string("train options: ") + e.what());
  }
  return o;
}

gatar::EvalOverrides overrides_from(const char* text) {
  const nlohmann::json j = parse_object(text, "eval overrides");
  gatar::EvalOverrides o;
  try {
    if (j.contains("r_comm")) o.r_comm = j.at("r_comm").get<double>();
    if (j.contains("composition")) o.composition = j.at("composition").get<std::string>();
    o.seed = j.value("seed", o.seed);
    o.jobs = j.value("jobs", o.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw gatar::ParseError(std::string("eval overrides: ") + e.what());
  }
  return o;
}

}  // namespace

extern "C" {

const char* gatar_last_error(void) { return g_last_error.c_str(); }

gatar_status gatar_world_generate(const char* config_json, uint64_t seed, gatar_world** out) {
  return guarded([&] {
    require(out != nullptr, "gatar_world_generate: out is null");
    const gatar::WorldConfig config = world_config_from(config_json);
    *out = new gatar_world{gatar::generate_world(config, seed)};
  });
}

gatar_status gatar_world_load(const char* path, gatar_world** out) {
  return guarded([&] {
    require(out != nullptr && path != nullptr, "gatar_world_load: null argument");
    *out = new gatar_world{gatar::load_world(path)};
  });
}

gatar_status gatar_world_save(const gatar_world* world, const char* path) {
  return guarded([&] {
    require(world != nullptr && path != nullptr, "gatar_world_save: null argument");
    gatar::save_world(world->world, path);
  });
}

gatar_status gatar_world_size(const gatar_world* world, int* width, int* height) {
  return guarded([&] {
    require(world != nullptr, "gatar_world_size: world is null");
    if (width != nullptr) *width = world->world.width();
    if (height != nullptr) *height = world->world.height();
  });
}

void gatar_world_free(gatar_world* world) { delete world; }

gatar_status gatar_dataset_generate(const char* config_json, uint64_t seed, gatar_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "gatar_dataset_generate: out is null");
    const gatar::DatasetConfig config = gatar::DatasetConfig::from_json(
        config_json == nullptr ? "{}" : std::string(config_json));
    *out = new gatar_dataset{gatar::generate_dataset(config, seed)};
  });
}

gatar_status gatar_dataset_load(const char* path, gatar_dataset** out) {
  return guarded([&] {
    require(out != nullptr && path != nullptr, "gatar_dataset_load: null argument");
    *out = new gatar_dataset{gatar::load_dataset(path)};
  });
}

gatar_status gatar_dataset_save(const gatar_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset != nullptr && path != nullptr, "gatar_dataset_save: null argument");
    gatar::save_dataset(dataset->dataset, path);
  });
}

gatar_status gatar_dataset_size(const gatar_dataset* dataset, uint64_t* n_samples) {
  return guarded([&] {
    require(dataset != nullptr && n_samples != nullptr, "gatar_dataset_size: null argument");
    *n_samples = dataset->dataset.samples.size();
  });
}

void gatar_dataset_free(gatar_dataset* dataset) { delete dataset; }

gatar_status gatar_model_init(const char* model_config_json, uint64_t seed, gatar_model** out) {
  return guarded([&] {
    require(out != nullptr, "gatar_model_init: out is null");
    const gatar::ModelConfig config = gatar::ModelConfig::from_json(
        model_config_json == nullptr ? "{}" : std::string(model_config_json));
    *out = new gatar_model{gatar::ModelParams::init(config, seed)};
  });
}

gatar_status gatar_train(const gatar_dataset* data, const char* model_config_json,
                         const char* train_options_json, const char* loss_csv_path,
                         gatar_model** out) {
  return guarded([&] {
    require(data != nullptr && out != nullptr, "gatar_train: null argument");
    const gatar::ModelConfig config = gatar::ModelConfig::from_json(
        model_config_json == nullptr ? "{}" : std::string(model_config_json));
    const gatar::TrainOptions options = train_options_from(train_options_json);
    gatar::TrainResult result = gatar::train_model(data->dataset, config, options);
    if (loss_csv_path != nullptr) gatar::write_loss_csv(result.curve, loss_csv_path);
    *out = new gatar_model{std::move(result.best)};
  });
}

gatar_status gatar_model_load(const char* path, gatar_model** out) {
  return guarded([&] {
    require(out != nullptr && path != nullptr, "gatar_model_load: null argument");
    *out = new gatar_model{gatar::load_checkpoint(path)};
  });
}

gatar_status gatar_model_save(const gatar_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr && path != nullptr, "gatar_model_save: null argument");
    gatar::save_checkpoint(model->params, path);
  });
}

void gatar_model_free(gatar_model* model) { delete model; }

gatar_status gatar_evaluate(const gatar_model* model, const gatar_dataset* test,
                            const char* overrides_json, const char* metrics_csv_path) {
  return guarded([&] {
    require(model != nullptr && test != nullptr && metrics_csv_path != nullptr,
            "gatar_evaluate: null argument");
    const gatar::MetricsReport report =
        gatar::evaluate_model(model->params, test->dataset, overrides_from(overrides_json));
    gatar::write_metrics_csv({report}, metrics_csv_path);
  });
}

gatar_status gatar_evaluate_baseline(const char* baseline, const gatar_dataset* test,
                                     const char* overrides_json, const char* metrics_csv_path) {
  return guarded([&] {
    require(baseline != nullptr && test != nullptr && metrics_csv_path != nullptr,
            "gatar_evaluate_baseline: null argument");
    const std::string name(baseline);
    gatar::Baseline which;
    if (name == "nearest_visible") {
      which = gatar::Baseline::NearestVisible;
    } else if (name == "random_visible") {
      which = gatar::Baseline::RandomVisible;
    } else {
      throw gatar::ConfigError("unknown baseline \"" + name +
                               "\" (expected nearest_visible or random_visible)");
    }
    const gatar::MetricsReport report =
        gatar::evaluate_baseline(which, test->dataset, overrides_from(overrides_json));
    gatar::write_metrics_csv({report}, metrics_csv_path);
  });
}

gatar_status gatar_sweep_comm(const gatar_model* model, const gatar_dataset* test, int lo, int hi,
                              int jobs, const char* metrics_csv_path) {
  return guarded([&] {
    require(model != nullptr && test != nullptr && metrics_csv_path != nullptr,
            "gatar_sweep_comm: null argument");
    const std::vector<gatar::MetricsReport> rows =
        gatar::sweep_comm(model->params, test->dataset, lo, hi, jobs);
    gatar::write_metrics_csv(rows, metrics_csv_path);
  });
}

gatar_status gatar_ablate(const gatar_dataset* train, const gatar_dataset* test,
                          const char* model_config_json, const char* train_options_json,
                          const char* metrics_csv_path) {
  return guarded([&] {
    require(train != nullptr && test != nullptr && metrics_csv_path != nullptr,
            "gatar_ablate: null argument");
    const gatar::ModelConfig config = gatar::ModelConfig::from_json(
        model_config_json == nullptr ? "{}" : std::string(model_config_json));
    const gatar::TrainOptions options = train_options_from(train_options_json);
    const std::vector<gatar::MetricsReport> rows =
        gatar::run_ablation(train->dataset, test->dataset, config, options);
    gatar::write_metrics_csv(rows, metrics_csv_path);
  });
}

gatar_status gatar_rollout(const gatar_world* world, const char* team, int n_targets,
                           const char* policy, const gatar_model* model,
                           const char* options_json, gatar_episode** out) {
  return guarded([&] {
    require(world != nullptr && team != nullptr && policy != nullptr && out != nullptr,
            "gatar_rollout: null argument");
    if (n_targets < 0) throw gatar::ConfigError("gatar_rollout: n_targets must be >= 0");

    const std::string policy_name(policy);
    gatar::RolloutPolicy which;
    if (policy_name == "gatar") {
      which = gatar::RolloutPolicy::Gatar;
    } else if (policy_name == "greedy_no_comm") {
      which = gatar::RolloutPolicy::GreedyNoComm;
    } else if (policy_name == "random") {
      which = gatar::RolloutPolicy::Random;
    } else if (policy_name == "expert") {
      which = gatar::RolloutPolicy::Expert;
    } else {
      throw gatar::ConfigError("unknown rollout policy \"" + policy_name +
                               "\" (expected gatar, greedy_no_comm, random, or expert)");
    }

    const nlohmann::json j = parse_object(options_json, "rollout options");
    gatar::RolloutOptions options;
    try {
      options.max_steps = j.value("max_steps", options.max_steps);
      options.commit = j.value("commit", options.commit);
      options.seed = j.value("seed", options.seed);
    } catch (const nlohmann::json::exception& e) {
      throw gatar::ParseError(std::string("rollout options: ") + e.what());
    }
    if (which == gatar::RolloutPolicy::Gatar) {
      if (model == nullptr) throw gatar::ConfigError("gatar policy needs a model");
      options.model = &model->params;
    }

    const std::vector<gatar::AgentSpec> specs = gatar::parse_team(team);
    const std::vector<gatar::Cell>& kept = world->world.targets();

    // Placement stream 0 never collides with the random policy, which derives
    // from steps >= 1. With n_targets == 0 the world's own targets stay, so
    // agents re-sample until they avoid them.
    gatar::GridWorld staged = world->world;
    std::vector<gatar::Cell> agent_cells;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 100) {
        throw gatar::ConfigError("gatar_rollout: cannot place agents off existing targets");
      }
      const std::uint64_t place_seed =
          gatar::Rng::derive(gatar::Rng::derive(options.seed, 0), attempt);
      const gatar::Placement placement =
          gatar::place_entities(world->world, static_cast<int>(specs.size()), n_targets,
                                place_seed);
      if (n_targets > 0) {
        staged = world->world.with_targets(placement.targets);
        agent_cells = placement.agents;
        break;
      }
      const bool clear = std::none_of(
          placement.agents.begin(), placement.agents.end(), [&](gatar::Cell c) {
            return std::find(kept.begin(), kept.end(), c) != kept.end();
          });
      if (clear) {
        agent_cells = placement.agents;
        break;
      }
    }

    const std::vector<gatar::AgentState> agents = gatar::make_team(specs, agent_cells);
    *out = new gatar_episode{gatar::run_episode(staged, agents, which, options)};
  });
}

gatar_status gatar_episode_save(const gatar_episode* episode, const char* path) {
  return guarded([&] {
    require(episode != nullptr && path != nullptr, "gatar_episode_save: null argument");
    gatar::save_episode(episode->episode, path);
  });
}

gatar_status gatar_episode_load(const char* path, gatar_episode** out) {
  return guarded([&] {
    require(out != nullptr && path != nullptr, "gatar_episode_load: null argument");
    *out = new gatar_episode{gatar::load_episode(path)};
  });
}

gatar_status gatar_episode_coverage(const gatar_episode* episode, uint64_t* localized,
                                    int* steps) {
  return guarded([&] {
    require(episode != nullptr, "gatar_episode_coverage: episode is null");
    if (localized != nullptr) *localized = episode->episode.events.size();
    if (steps != nullptr) *steps = episode->episode.step_count;
  });
}

gatar_status gatar_render(const gatar_episode* episode, const char* out_dir) {
  return guarded([&] {
    require(episode != nullptr && out_dir != nullptr, "gatar_render: null argument");
    gatar::render_frames(episode->episode, out_dir);
  });
}

void gatar_episode_free(gatar_episode* episode) { delete episode; }

}  // extern "C"
