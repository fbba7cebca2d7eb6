#include "core/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "core/allocators.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace gatar {

namespace {

constexpr int kPlacementAttempts = 100;

double distance_cells(const std::array<double, 2>& pred, const std::array<double, 2>& label,
                      int width, int height) {
  const std::array<double, 2> p = denormalize(pred, width, height);
  const std::array<double, 2> q = denormalize(label, width, height);
  return std::hypot(p[0] - q[0], p[1] - q[1]);
}

// Everything one evaluation needs about one sample after overrides resolve.
struct EvalInstance {
  GridWorld world;
  std::vector<AgentState> team;
  CommGraph graph;
  std::vector<std::optional<std::array<double, 2>>> labels;
};

EvalInstance resolve_instance(const Sample& s, const DatasetConfig& cfg,
                              const EvalOverrides& ov, std::size_t index) {
  GridWorld world = s.world;
  std::vector<AgentState> team = s.team;
  auto labels = s.labels;

  if (ov.composition) {
    const std::vector<AgentSpec> specs = parse_team(*ov.composition);
    const int n_agents = static_cast<int>(specs.size());
    const int n_targets = cfg.targets_per_agent * n_agents;
    const std::uint64_t base_seed =
        Rng::derive(ov.seed, static_cast<std::uint64_t>(index) + 1);
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const Placement pl = place_entities(
          s.world, n_agents, n_targets,
          Rng::derive(base_seed, static_cast<std::uint64_t>(attempt)));
      world = s.world.with_targets(pl.targets);
      team = make_team(specs, pl.agents);
      labels = expert_labels(world, team);
      for (const auto& l : labels) placed = placed || l.has_value();
    }
    if (!placed) {
      throw RuntimeFailure("evaluate: no placement with a visible target after " +
                           std::to_string(kPlacementAttempts) + " draws (map seed " +
                           std::to_string(s.map_seed) + ")");
    }
  }

  if (ov.r_comm) {
    for (AgentState& a : team) a.spec.r_comm = *ov.r_comm;
  }
  CommGraph graph = (ov.r_comm || ov.composition) ? build_graph(team) : s.graph;
  return EvalInstance{std::move(world), std::move(team), std::move(graph), std::move(labels)};
}

std::string label_composition(const Dataset& ds, const EvalOverrides& ov) {
  return ov.composition ? *ov.composition : ds.config.team;
}

double label_r_comm(const Dataset& ds, const EvalOverrides& ov) {
  if (ov.r_comm) return *ov.r_comm;
  if (!ds.samples.empty() && !ds.samples.front().team.empty()) {
    return ds.samples.front().team.front().spec.r_comm;
  }
  return 0.0;
}

std::vector<double> pool_distances(std::vector<std::vector<double>>& per_sample) {
  std::vector<double> pooled;
  for (const auto& d : per_sample) pooled.insert(pooled.end(), d.begin(), d.end());
  return pooled;
}

}  // namespace

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw ContractError("percentile: empty value list");
  if (!(p > 0.0) || p > 1.0) throw ContractError("percentile: p must be in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

MetricsReport summarize_distances(std::vector<double> distances) {
  if (distances.empty()) throw ContractError("metrics: no labeled agents to score");
  MetricsReport r;
  double total = 0.0;
  for (const double d : distances) total += d;
  r.n = static_cast<int>(distances.size());
  r.dist_avg = total / static_cast<double>(distances.size());
  r.dist_50 = percentile_nearest_rank(distances, 0.5);
  r.dist_90 = percentile_nearest_rank(distances, 0.9);
  return r;
}

void write_metrics_csv(const std::vector<MetricsReport>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("metrics: cannot open for writing: " + path);
  out << "config,r_comm,composition,dist_avg,dist_50,dist_90,n\n";
  char line[256];
  for (const MetricsReport& r : rows) {
    std::snprintf(line, sizeof line, "%s,%g,%s,%.6f,%.6f,%.6f,%d\n", r.config_label.c_str(),
                  r.r_comm, r.composition.c_str(), r.dist_avg, r.dist_50, r.dist_90, r.n);
    out << line;
  }
  if (!out) throw IoError("metrics: write failed: " + path);
}

void write_loss_csv(const std::vector<EpochStats>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("loss curve: cannot open for writing: " + path);
  out << "epoch,train_loss,val_dist50\n";
  char line[128];
  for (const EpochStats& row : curve) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.6f\n", row.epoch, row.train_loss,
                  row.val_dist50);
    out << line;
  }
  if (!out) throw IoError("loss curve: write failed: " + path);
}

namespace {

// Validation score used for early stopping: pooled dist_50 over the held-out
// placements.
double validation_dist50(const ModelParams& params,
                         const std::vector<const Sample*>& val,
                         const std::vector<const std::vector<Tensor>*>& val_planes, int jobs) {
  std::vector<std::vector<double>> per_sample(val.size());
  parallel_for(static_cast<int>(val.size()), jobs, [&](int i) {
    const Sample& s = *val[static_cast<std::size_t>(i)];
    const auto coords =
        forward_centralized(params, *val_planes[static_cast<std::size_t>(i)], s.graph);
    auto& out = per_sample[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < s.team.size(); ++a) {
      if (!s.labels[a]) continue;
      out.push_back(distance_cells(coords[a], *s.labels[a], s.world.width(), s.world.height()));
    }
  });
  std::vector<double> pooled = pool_distances(per_sample);
  return percentile_nearest_rank(std::move(pooled), 0.5);
}

}  // namespace

TrainResult train_model(const Dataset& ds, const ModelConfig& model, const TrainOptions& opt) {
  if (ds.samples.empty()) throw ContractError("train: empty dataset");
  if (opt.batch <= 0 || opt.max_epochs < 0) throw ConfigError("train: bad batch or epoch count");
  model.validate();

  // Rebuild inputs only when the model wants different features than the
  // dataset carries.
  const bool stored_ok = model.features == ds.config.features;
  std::vector<std::vector<Tensor>> rebuilt;
  if (!stored_ok) {
    rebuilt.resize(ds.samples.size());
    parallel_for(static_cast<int>(ds.samples.size()), opt.jobs, [&](int i) {
      rebuilt[static_cast<std::size_t>(i)] =
          planes_with(ds.samples[static_cast<std::size_t>(i)], model.features);
    });
  }
  const auto planes_of = [&](std::size_t i) -> const std::vector<Tensor>& {
    return stored_ok ? ds.samples[i].planes : rebuilt[i];
  };

  std::vector<std::size_t> train_idx;
  std::vector<const Sample*> val;
  std::vector<const std::vector<Tensor>*> val_planes;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (is_validation(ds, i)) {
      val.push_back(&ds.samples[i]);
      val_planes.push_back(&planes_of(i));
    } else {
      train_idx.push_back(i);
    }
  }
  if (train_idx.empty() || val.empty()) {
    throw ContractError("train: need both training and validation samples");
  }

  ModelParams params = ModelParams::init(model, opt.seed);
  AdamState adam;
  AdamConfig adam_cfg;
  adam_cfg.lr = opt.lr;

  TrainResult result{params, 0, std::numeric_limits<double>::infinity(), {}};
  int stale = 0;
  const auto started = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(opt.seed, 0xE90C + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order = train_idx;
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(opt.batch)) {
      const std::size_t batch_end = std::min(order.size(), at + static_cast<std::size_t>(opt.batch));
      const int batch_n = static_cast<int>(batch_end - at);

      std::vector<std::map<std::string, Tensor>> grads(static_cast<std::size_t>(batch_n));
      std::vector<double> losses(static_cast<std::size_t>(batch_n));
      parallel_for(batch_n, opt.jobs, [&](int b) {
        const Sample& s = ds.samples[order[at + static_cast<std::size_t>(b)]];
        Tape tape;
        ModelRuntime rt(tape, params, true);
        const TeamForward fwd =
            forward_team(tape, rt, planes_of(order[at + static_cast<std::size_t>(b)]), s.graph,
                         s.labels);
        if (fwd.labeled_agents == 0) {
          throw ContractError("train: sample without labeled agents");
        }
        tape.backward(fwd.loss);
        losses[static_cast<std::size_t>(b)] = tape.val(fwd.loss).data[0];
        auto& slot = grads[static_cast<std::size_t>(b)];
        for (const auto& [name, tensor] : params.tensors) {
          slot.emplace(name, tape.grad(rt.param_id(name)));
        }
      });

      std::map<std::string, Tensor> mean_grads;
      for (const auto& [name, tensor] : params.tensors) mean_grads.emplace(name, Tensor(tensor.shape));
      double batch_loss = 0.0;
      for (int b = 0; b < batch_n; ++b) {
        batch_loss += losses[static_cast<std::size_t>(b)];
        for (auto& [name, acc] : mean_grads) {
          const Tensor& g = grads[static_cast<std::size_t>(b)].at(name);
          for (std::size_t e = 0; e < acc.data.size(); ++e) acc.data[e] += g.data[e];
        }
      }
      const double scale = 1.0 / static_cast<double>(batch_n);
      for (auto& [name, acc] : mean_grads) {
        for (double& v : acc.data) v *= scale;
      }
      batch_loss *= scale;
      if (!std::isfinite(batch_loss)) {
        throw RuntimeFailure("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch starting at sample " + std::to_string(at));
      }
      epoch_loss += batch_loss * static_cast<double>(batch_n);
      adam_step(params.tensors, mean_grads, adam, adam_cfg);
    }
    epoch_loss /= static_cast<double>(order.size());

    const double val50 = validation_dist50(params, val, val_planes, opt.jobs);
    result.curve.push_back(EpochStats{epoch, epoch_loss, val50});
    if (val50 < result.best_val_dist50) {
      result.best_val_dist50 = val50;
      result.best_epoch = epoch;
      result.best = params;
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= opt.patience) break;
    const auto elapsed = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - started);
    if (elapsed.count() > opt.budget_seconds) break;
  }

  if (result.curve.empty()) {
    // zero-epoch runs hand back the untouched initialization
    result.best = params;
    result.best_val_dist50 = validation_dist50(params, val, val_planes, opt.jobs);
  }
  return result;
}

MetricsReport evaluate_model(const ModelParams& params, const Dataset& test,
                             const EvalOverrides& overrides) {
  if (test.samples.empty()) throw ContractError("evaluate: empty test set");
  const bool stored_ok =
      params.config.features == test.config.features && !overrides.composition;

  std::vector<std::vector<double>> per_sample(test.samples.size());
  parallel_for(static_cast<int>(test.samples.size()), overrides.jobs, [&](int i) {
    const Sample& s = test.samples[static_cast<std::size_t>(i)];
    const EvalInstance inst =
        resolve_instance(s, test.config, overrides, static_cast<std::size_t>(i));
    std::vector<Tensor> planes;
    if (stored_ok) {
      planes = s.planes;
    } else {
      planes.reserve(inst.team.size());
      for (const AgentState& a : inst.team) {
        planes.push_back(planes_for(inst.world, a, params.config.features));
      }
    }
    const auto coords = forward_centralized(params, planes, inst.graph);
    auto& out = per_sample[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < inst.team.size(); ++a) {
      if (!inst.labels[a]) continue;
      out.push_back(
          distance_cells(coords[a], *inst.labels[a], inst.world.width(), inst.world.height()));
    }
  });

  MetricsReport report = summarize_distances(pool_distances(per_sample));
  report.config_label = "model";
  report.r_comm = label_r_comm(test, overrides);
  report.composition = label_composition(test, overrides);
  return report;
}

MetricsReport evaluate_baseline(Baseline baseline, const Dataset& test,
                                const EvalOverrides& overrides) {
  if (test.samples.empty()) throw ContractError("evaluate: empty test set");
  std::vector<std::vector<double>> per_sample(test.samples.size());
  parallel_for(static_cast<int>(test.samples.size()), overrides.jobs, [&](int i) {
    const Sample& s = test.samples[static_cast<std::size_t>(i)];
    const EvalInstance inst =
        resolve_instance(s, test.config, overrides, static_cast<std::size_t>(i));
    auto& out = per_sample[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < inst.team.size(); ++a) {
      if (!inst.labels[a]) continue;
      const AgentState& agent = inst.team[a];
      const Observation obs = observe(inst.world, agent);
      std::optional<Cell> choice;
      if (baseline == Baseline::NearestVisible) {
        choice = greedy_no_comm(agent, obs);
      } else {
        Rng rng(Rng::derive(Rng::derive(overrides.seed, static_cast<std::uint64_t>(i) + 0x9D),
                            static_cast<std::uint64_t>(a)));
        choice = random_select(obs, rng);
      }
      const Cell predicted = choice.value_or(agent.position);
      const auto pred = normalize_cell(predicted, inst.world.width(), inst.world.height());
      out.push_back(
          distance_cells(pred, *inst.labels[a], inst.world.width(), inst.world.height()));
    }
  });

  MetricsReport report = summarize_distances(pool_distances(per_sample));
  report.config_label = baseline == Baseline::NearestVisible ? "nearest_visible" : "random_visible";
  report.r_comm = label_r_comm(test, overrides);
  report.composition = label_composition(test, overrides);
  return report;
}

std::vector<MetricsReport> sweep_comm(const ModelParams& params, const Dataset& test, int lo,
                                      int hi, int jobs) {
  if (lo > hi) throw ContractError("sweep: empty radius range");
  std::vector<MetricsReport> rows;
  for (int r = lo; r <= hi; ++r) {
    EvalOverrides ov;
    ov.r_comm = static_cast<double>(r);
    ov.jobs = jobs;
    rows.push_back(evaluate_model(params, test, ov));
  }
  return rows;
}

std::vector<AblationVariant> ablation_variants(const ModelConfig& base) {
  std::vector<AblationVariant> out;
  out.push_back({"full", base});

  ModelConfig no_gt = base;
  no_gt.features.gaussian_targets = false;
  out.push_back({"no_GT", no_gt});

  ModelConfig no_pm = base;
  no_pm.features.product = false;
  out.push_back({"no_PM", no_pm});

  ModelConfig no_ec = base;
  no_ec.features.cost_map = false;
  out.push_back({"no_EC", no_ec});

  ModelConfig no_shortcut = base;
  no_shortcut.vcycle_shortcut = false;
  out.push_back({"no_vcycle_shortcut", no_shortcut});

  ModelConfig bare = base;
  bare.features.gaussian_targets = false;
  bare.features.product = false;
  bare.features.cost_map = false;
  out.push_back({"none_of_preprocessing", bare});
  return out;
}

std::vector<MetricsReport> run_ablation(const Dataset& train, const Dataset& test,
                                        const ModelConfig& base, const TrainOptions& opt) {
  std::vector<MetricsReport> rows;
  for (const AblationVariant& variant : ablation_variants(base)) {
    const TrainResult trained = train_model(train, variant.config, opt);
    EvalOverrides ov;
    ov.jobs = opt.jobs;
    MetricsReport row = evaluate_model(trained.best, test, ov);
    row.config_label = variant.name;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gatar
