#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/model.hpp"

namespace gatar {

// Pooled prediction-error summary. Distances are Euclidean cell units between
// the denormalized prediction and the expert label, over labeled agents only.
struct MetricsReport {
  std::string config_label;
  double r_comm = 0.0;
  std::string composition;
  double dist_avg = 0.0;
  double dist_50 = 0.0;
  double dist_90 = 0.0;
  int n = 0;
};

// Nearest-rank percentile: the ceil(p * N)-th smallest value, p in (0, 1].
double percentile_nearest_rank(std::vector<double> values, double p);

// Fills dist_avg / dist_50 / dist_90 / n; the labeling fields stay empty.
MetricsReport summarize_distances(std::vector<double> distances);

void write_metrics_csv(const std::vector<MetricsReport>& rows, const std::string& path);

struct TrainOptions {
  double lr = 1e-3;
  int batch = 32;
  int max_epochs = 500;
  int patience = 10;           // epochs without validation improvement
  double budget_seconds = 1800.0;
  std::uint64_t seed = 0;      // parameter init and batch shuffling
  int jobs = 0;                // 0 = all cores; parallelism never changes results
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_dist50 = 0.0;
};

struct TrainResult {
  ModelParams best;
  int best_epoch = 0;
  double best_val_dist50 = 0.0;
  std::vector<EpochStats> curve;
};

// Supervised regression onto the stored expert labels. Validation is the
// held-out placement slice; the returned parameters are the best-validation
// snapshot. Stops on patience, epoch cap, or wall-clock budget.
TrainResult train_model(const Dataset& ds, const ModelConfig& model, const TrainOptions& opt);

void write_loss_csv(const std::vector<EpochStats>& curve, const std::string& path);

// Inference-time substitutions: a communication radius applied to every
// agent, or a different team composition re-placed onto the stored maps
// (fresh placements and labels, seeded).
struct EvalOverrides {
  std::optional<double> r_comm;
  std::optional<std::string> composition;
  std::uint64_t seed = 0;
  int jobs = 0;
};

MetricsReport evaluate_model(const ModelParams& params, const Dataset& test,
                             const EvalOverrides& overrides = {});

// Communication-free baselines run through the same metric path; an agent
// with no visible target predicts its own position.
enum class Baseline { NearestVisible, RandomVisible };

MetricsReport evaluate_baseline(Baseline baseline, const Dataset& test,
                                const EvalOverrides& overrides = {});

// One report per radius in [lo, hi].
std::vector<MetricsReport> sweep_comm(const ModelParams& params, const Dataset& test, int lo,
                                      int hi, int jobs = 0);

// Named model variants with one ingredient removed each, plus the full model.
struct AblationVariant {
  std::string name;
  ModelConfig config;
};

std::vector<AblationVariant> ablation_variants(const ModelConfig& base);

// Trains every variant under the same budget and seed, then scores it on the
// test set. Row order follows ablation_variants.
std::vector<MetricsReport> run_ablation(const Dataset& train, const Dataset& test,
                                        const ModelConfig& base, const TrainOptions& opt);

}  // namespace gatar
