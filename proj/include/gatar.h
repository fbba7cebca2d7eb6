#ifndef GATAR_H
#define GATAR_H

/* C interface to the task-allocation library: world generation, dataset
 * building, model training, evaluation, and mission rollout. Objects are
 * opaque handles created and destroyed here; configuration travels as JSON
 * strings. Every fallible call returns a status code; on failure
 * gatar_last_error() describes what went wrong for the calling thread. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gatar_status {
  GATAR_OK = 0,
  GATAR_ERR_CONFIG = 1,   /* invalid configuration value */
  GATAR_ERR_PARSE = 2,    /* malformed file or JSON */
  GATAR_ERR_IO = 3,       /* file system failure */
  GATAR_ERR_RUNTIME = 4,  /* operation could not finish */
  GATAR_ERR_CONTRACT = 5, /* API misuse, including null handles */
} gatar_status;

/* Message for the calling thread's most recent failure; empty string after a
 * success. The pointer stays valid until the thread's next library call. */
const char* gatar_last_error(void);

typedef struct gatar_world gatar_world;
typedef struct gatar_dataset gatar_dataset;
typedef struct gatar_model gatar_model;
typedef struct gatar_episode gatar_episode;

/* ---- worlds ----
 * config_json keys (all optional): width, height, subarea_rows, subarea_cols,
 * rich_count, obstacle_density. Pass NULL or "{}" for defaults. */
gatar_status gatar_world_generate(const char* config_json, uint64_t seed, gatar_world** out);
gatar_status gatar_world_load(const char* path, gatar_world** out);
gatar_status gatar_world_save(const gatar_world* world, const char* path);
gatar_status gatar_world_size(const gatar_world* world, int* width, int* height);
void gatar_world_free(gatar_world* world);

/* ---- datasets ----
 * config_json keys (all optional): world (object as above), team ("2A2G"
 * style), maps, placements_per_map, targets_per_agent, features (object:
 * sigma, cost_map, gaussian_targets, product). */
gatar_status gatar_dataset_generate(const char* config_json, uint64_t seed, gatar_dataset** out);
gatar_status gatar_dataset_load(const char* path, gatar_dataset** out);
gatar_status gatar_dataset_save(const gatar_dataset* dataset, const char* path);
gatar_status gatar_dataset_size(const gatar_dataset* dataset, uint64_t* n_samples);
void gatar_dataset_free(gatar_dataset* dataset);

/* ---- models ----
 * model_config_json keys (all optional): grid_h, grid_w, conv1, conv2, embed,
 * heads, layers, decoder_hidden, leaky_slope, vcycle_shortcut, tied_passes,
 * features (object: sigma, cost_map, gaussian_targets, product).
 * train_options_json keys (all optional): lr, batch, max_epochs, patience,
 * budget_seconds, seed, jobs.
 * gatar_train writes the per-epoch loss curve to loss_csv_path unless that is
 * NULL, and returns the best-validation parameter set. */
gatar_status gatar_model_init(const char* model_config_json, uint64_t seed, gatar_model** out);
gatar_status gatar_train(const gatar_dataset* data, const char* model_config_json,
                         const char* train_options_json, const char* loss_csv_path,
                         gatar_model** out);
gatar_status gatar_model_load(const char* path, gatar_model** out);
gatar_status gatar_model_save(const gatar_model* model, const char* path);
void gatar_model_free(gatar_model* model);

/* ---- evaluation ----
 * overrides_json keys (all optional): r_comm, composition, seed, jobs.
 * Each call appends nothing: it writes a complete CSV with a header to the
 * given path. `baseline` is "nearest_visible" or "random_visible". */
gatar_status gatar_evaluate(const gatar_model* model, const gatar_dataset* test,
                            const char* overrides_json, const char* metrics_csv_path);
gatar_status gatar_evaluate_baseline(const char* baseline, const gatar_dataset* test,
                                     const char* overrides_json, const char* metrics_csv_path);
gatar_status gatar_sweep_comm(const gatar_model* model, const gatar_dataset* test, int lo, int hi,
                              int jobs, const char* metrics_csv_path);
gatar_status gatar_ablate(const gatar_dataset* train, const gatar_dataset* test,
                          const char* model_config_json, const char* train_options_json,
                          const char* metrics_csv_path);

/* ---- rollout ----
 * Places `team` ("2A2G" style) plus n_targets on the world, then runs the
 * mission. policy is "gatar", "greedy_no_comm", "random", or "expert"; model
 * may be NULL except for "gatar". options_json keys (all optional):
 * max_steps, commit, seed (also drives the placement). */
gatar_status gatar_rollout(const gatar_world* world, const char* team, int n_targets,
                           const char* policy, const gatar_model* model,
                           const char* options_json, gatar_episode** out);
gatar_status gatar_episode_save(const gatar_episode* episode, const char* path);
gatar_status gatar_episode_load(const char* path, gatar_episode** out);
/* Localized-target count and executed steps. Either output may be NULL. */
gatar_status gatar_episode_coverage(const gatar_episode* episode, uint64_t* localized,
                                    int* steps);
/* One pixmap frame per step plus coverage.csv under out_dir. */
gatar_status gatar_render(const gatar_episode* episode, const char* out_dir);
void gatar_episode_free(gatar_episode* episode);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GATAR_H */
