#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <utility>

#include <json.hpp>

#include "core/binio.hpp"
#include "core/rng.hpp"

namespace gatar {

namespace {

using nlohmann::json;

enum class InitKind { Zeros, HeNormal, GlorotUniform };

struct TensorSpec {
  std::string name;
  std::vector<int> shape;
  InitKind kind = InitKind::Zeros;
  int fan_in = 1;
  int fan_out = 1;
};

// Attention layer names. Untied runs keep separate weights for the downward
// pass and both upward terms; tied runs share one set per feature level, so
// a layer whose self input lives at level m draws from shared{m}.
std::vector<std::string> gat_layer_names(const ModelConfig& c) {
  std::vector<std::string> names;
  if (c.tied_passes) {
    for (int l = 0; l <= c.layers; ++l) names.push_back("gat.shared" + std::to_string(l));
  } else {
    for (int l = 0; l < c.layers; ++l) names.push_back("gat.down" + std::to_string(l));
    for (int l = 0; l < c.layers; ++l) names.push_back("gat.up_skip" + std::to_string(l));
    for (int l = 0; l < c.layers; ++l) names.push_back("gat.up_deep" + std::to_string(l));
  }
  return names;
}

std::vector<TensorSpec> tensor_specs(const ModelConfig& c) {
  std::vector<TensorSpec> specs;
  auto add = [&specs](std::string name, std::vector<int> shape, InitKind kind, int fan_in = 1,
                      int fan_out = 1) {
    specs.push_back({std::move(name), std::move(shape), kind, fan_in, fan_out});
  };
  add("enc.conv1.w", {c.conv1, 4, 3, 3}, InitKind::HeNormal, 4 * 9);
  add("enc.conv1.b", {c.conv1}, InitKind::Zeros);
  add("enc.conv2.w", {c.conv2, c.conv1, 3, 3}, InitKind::HeNormal, c.conv1 * 9);
  add("enc.conv2.b", {c.conv2}, InitKind::Zeros);
  add("enc.fc.w", {c.flat_dim(), c.embed}, InitKind::HeNormal, c.flat_dim());
  add("enc.fc.b", {1, c.embed}, InitKind::Zeros);
  const int dh = c.head_dim();
  for (const std::string& layer : gat_layer_names(c)) {
    for (int k = 0; k < c.heads; ++k) {
      const std::string head = layer + ".h" + std::to_string(k);
      add(head + ".w", {c.embed, dh}, InitKind::GlorotUniform, c.embed, dh);
      add(head + ".a_self", {dh, 1}, InitKind::GlorotUniform, dh, 1);
      add(head + ".a_nbr", {dh, 1}, InitKind::GlorotUniform, dh, 1);
    }
  }
  add("dec.fc1.w", {2 * c.embed, c.decoder_hidden}, InitKind::HeNormal, 2 * c.embed);
  add("dec.fc1.b", {1, c.decoder_hidden}, InitKind::Zeros);
  add("dec.fc2.w", {c.decoder_hidden, 2}, InitKind::GlorotUniform, c.decoder_hidden, 2);
  add("dec.fc2.b", {1, 2}, InitKind::Zeros);
  return specs;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known, const char* where) {
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ParseError(std::string(where) + ": unknown key '" + item.key() + "'");
    }
  }
}

}  // namespace

int ModelConfig::conv_out(int extent) const { return (extent + 2 * 1 - 3) / 2 + 1; }

int ModelConfig::flat_dim() const {
  return conv2 * conv_out(conv_out(grid_h)) * conv_out(conv_out(grid_w));
}

void ModelConfig::validate() const {
  if (grid_h < 1 || grid_w < 1) throw ConfigError("model: grid dimensions must be positive");
  if (conv1 < 1 || conv2 < 1) throw ConfigError("model: conv channel counts must be positive");
  if (embed < 1 || decoder_hidden < 1) throw ConfigError("model: layer widths must be positive");
  if (layers < 1) throw ConfigError("model: need at least one message round");
  if (heads < 1) throw ConfigError("model: need at least one attention head");
  if (embed % heads != 0) {
    throw ConfigError("model: embedding width must divide evenly across heads");
  }
  if (!(leaky_slope > 0.0) || leaky_slope >= 1.0) {
    throw ConfigError("model: leaky slope must be in (0, 1)");
  }
  if (!(features.sigma > 0.0)) throw ConfigError("model: target map sigma must be positive");
}

std::string ModelConfig::to_json() const {
  json j;
  j["grid_h"] = grid_h;
  j["grid_w"] = grid_w;
  j["conv1"] = conv1;
  j["conv2"] = conv2;
  j["embed"] = embed;
  j["layers"] = layers;
  j["heads"] = heads;
  j["decoder_hidden"] = decoder_hidden;
  j["leaky_slope"] = leaky_slope;
  j["vcycle_shortcut"] = vcycle_shortcut;
  j["tied_passes"] = tied_passes;
  j["features"] = {{"sigma", features.sigma},
                   {"cost_map", features.cost_map},
                   {"gaussian_targets", features.gaussian_targets},
                   {"product", features.product}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("model config: expected a JSON object");
  static const std::set<std::string> known = {
      "grid_h", "grid_w", "conv1", "conv2", "embed", "layers", "heads", "decoder_hidden",
      "leaky_slope", "vcycle_shortcut", "tied_passes", "features"};
  reject_unknown_keys(j, known, "model config");
  ModelConfig c;
  try {
    c.grid_h = j.value("grid_h", c.grid_h);
    c.grid_w = j.value("grid_w", c.grid_w);
    c.conv1 = j.value("conv1", c.conv1);
    c.conv2 = j.value("conv2", c.conv2);
    c.embed = j.value("embed", c.embed);
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.vcycle_shortcut = j.value("vcycle_shortcut", c.vcycle_shortcut);
    c.tied_passes = j.value("tied_passes", c.tied_passes);
    if (j.contains("features")) {
      const json& f = j.at("features");
      if (!f.is_object()) throw ParseError("model config: features must be an object");
      static const std::set<std::string> fkeys = {"sigma", "cost_map", "gaussian_targets",
                                                  "product"};
      reject_unknown_keys(f, fkeys, "model config features");
      c.features.sigma = f.value("sigma", c.features.sigma);
      c.features.cost_map = f.value("cost_map", c.features.cost_map);
      c.features.gaussian_targets = f.value("gaussian_targets", c.features.gaussian_targets);
      c.features.product = f.value("product", c.features.product);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  for (const TensorSpec& spec : tensor_specs(config)) {
    Tensor t(spec.shape);
    if (spec.kind != InitKind::Zeros) {
      Rng rng(Rng::derive(seed, Rng::hash_string(spec.name)));
      if (spec.kind == InitKind::HeNormal) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(spec.fan_in));
        for (double& v : t.data) v = stddev * rng.normal();
      } else {
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.fan_in + spec.fan_out));
        for (double& v : t.data) v = limit * (2.0 * rng.next_unit() - 1.0);
      }
    }
    p.tensors.emplace(spec.name, std::move(t));
  }
  return p;
}

std::int64_t ModelParams::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : tensors) n += t.size();
  return n;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
  out.write("GTCK", 4);
  write_u32(out, 1);
  write_string(out, params.config.to_json());
  write_u32(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& [name, t] : params.tensors) {
    write_string(out, name);
    write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (const int d : t.shape) write_u32(out, static_cast<std::uint32_t>(d));
    for (const double v : t.data) write_f64(out, v);
  }
  if (!out) throw IoError("checkpoint: write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "GTCK") {
    throw ParseError("checkpoint: not a model checkpoint file: " + path);
  }
  const std::uint32_t version = read_u32(in);
  if (version != 1) {
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  }
  ModelParams p;
  p.config = ModelConfig::from_json(read_string(in));
  const std::vector<TensorSpec> specs = tensor_specs(p.config);
  std::map<std::string, const TensorSpec*> by_name;
  for (const TensorSpec& s : specs) by_name.emplace(s.name, &s);
  const std::uint32_t count = read_u32(in);
  if (count != specs.size()) {
    throw ParseError("checkpoint: expected " + std::to_string(specs.size()) + " tensors, found " +
                     std::to_string(count));
  }
  for (std::uint32_t idx = 0; idx < count; ++idx) {
    const std::string name = read_string(in, 4096);
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError("checkpoint: unexpected tensor '" + name + "'");
    const std::uint32_t rank = read_u32(in);
    if (rank != it->second->shape.size()) {
      throw ParseError("checkpoint: tensor '" + name + "' has wrong rank");
    }
    std::vector<int> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(read_u32(in));
    if (shape != it->second->shape) {
      throw ParseError("checkpoint: tensor '" + name + "' has unexpected shape " +
                       Tensor(shape).shape_string());
    }
    Tensor t(shape);
    for (double& v : t.data) v = read_f64(in);
    if (!p.tensors.emplace(name, std::move(t)).second) {
      throw ParseError("checkpoint: duplicate tensor '" + name + "'");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("checkpoint: trailing data after tensors");
  }
  return p;
}

ModelRuntime::ModelRuntime(Tape& tape, const ModelParams& params, bool trainable)
    : tape_(&tape), params_(&params) {
  params.config.validate();
  for (const auto& [name, t] : params.tensors) ids_.emplace(name, tape.leaf(t, trainable));
}

Tape::Id ModelRuntime::param_id(const std::string& name) const {
  const auto it = ids_.find(name);
  if (it == ids_.end()) throw ContractError("model: unknown parameter '" + name + "'");
  return it->second;
}

Tape::Id ModelRuntime::encode(const Tensor& feature_planes) {
  const ModelConfig& c = params_->config;
  if (feature_planes.rank() != 3 || feature_planes.dim(0) != 4 ||
      feature_planes.dim(1) != c.grid_h || feature_planes.dim(2) != c.grid_w) {
    throw ContractError("encode: expected feature planes (4, " + std::to_string(c.grid_h) + ", " +
                        std::to_string(c.grid_w) + "), got " + feature_planes.shape_string());
  }
  Tape& t = *tape_;
  Tape::Id x = t.leaf(feature_planes);
  x = t.relu(t.conv2d(x, param_id("enc.conv1.w"), param_id("enc.conv1.b"), 2, 1));
  x = t.relu(t.conv2d(x, param_id("enc.conv2.w"), param_id("enc.conv2.b"), 2, 1));
  x = t.reshape(x, {1, c.flat_dim()});
  x = t.relu(t.add(t.matmul(x, param_id("enc.fc.w")), param_id("enc.fc.b")));
  return x;
}

std::vector<Tape::Id> ModelRuntime::project_heads(Tape::Id feature, const std::string& layer) {
  std::vector<Tape::Id> out;
  out.reserve(static_cast<std::size_t>(config().heads));
  for (int k = 0; k < config().heads; ++k) {
    out.push_back(tape_->matmul(feature, param_id(layer + ".h" + std::to_string(k) + ".w")));
  }
  return out;
}

Tape::Id ModelRuntime::attend(const std::vector<Tape::Id>& self_heads,
                              const std::vector<std::vector<Tape::Id>>& neighbor_heads,
                              const std::string& layer,
                              std::vector<std::vector<double>>* attention_out) {
  const ModelConfig& c = config();
  if (static_cast<int>(self_heads.size()) != c.heads ||
      static_cast<int>(neighbor_heads.size()) != c.heads) {
    throw ContractError("attend: head count mismatch");
  }
  const std::size_t m = neighbor_heads[0].size();
  for (const auto& per_head : neighbor_heads) {
    if (per_head.size() != m) throw ContractError("attend: ragged neighbor projections");
  }
  if (attention_out) attention_out->assign(static_cast<std::size_t>(c.heads), {});
  Tape& t = *tape_;
  if (m == 0) return t.leaf(Tensor::zeros({1, c.embed}));
  std::vector<Tape::Id> head_outputs;
  head_outputs.reserve(static_cast<std::size_t>(c.heads));
  for (int k = 0; k < c.heads; ++k) {
    const std::string head = layer + ".h" + std::to_string(k);
    const Tape::Id stacked = m == 1 ? neighbor_heads[k][0] : t.concat(neighbor_heads[k], 0);
    const Tape::Id scores = t.add(t.matmul(stacked, param_id(head + ".a_nbr")),
                                  t.matmul(self_heads[k], param_id(head + ".a_self")));
    const Tape::Id alpha = t.softmax(t.leaky_relu(scores, c.leaky_slope), 0);
    if (attention_out) (*attention_out)[k] = t.val(alpha).data;
    head_outputs.push_back(t.relu(t.matmul(t.transpose(alpha), stacked)));
  }
  return c.heads == 1 ? head_outputs[0] : t.concat(head_outputs, 1);
}

Tape::Id ModelRuntime::decode(Tape::Id ego, Tape::Id aggregated) {
  Tape& t = *tape_;
  Tape::Id x = t.concat({ego, aggregated}, 1);
  x = t.relu(t.add(t.matmul(x, param_id("dec.fc1.w")), param_id("dec.fc1.b")));
  x = t.sigmoid(t.add(t.matmul(x, param_id("dec.fc2.w")), param_id("dec.fc2.b")));
  return x;
}

std::string ModelRuntime::down_layer(int l) const {
  return config().tied_passes ? "gat.shared" + std::to_string(l)
                              : "gat.down" + std::to_string(l);
}

std::string ModelRuntime::up_skip_layer(int l) const {
  return config().tied_passes ? "gat.shared" + std::to_string(l)
                              : "gat.up_skip" + std::to_string(l);
}

std::string ModelRuntime::up_deep_layer(int l) const {
  return config().tied_passes ? "gat.shared" + std::to_string(l + 1)
                              : "gat.up_deep" + std::to_string(l);
}

TeamForward forward_team(Tape& tape, ModelRuntime& rt, const std::vector<Tensor>& feature_planes,
                         const CommGraph& graph,
                         const std::vector<std::optional<std::array<double, 2>>>& labels) {
  if (&rt.tape() != &tape) throw ContractError("forward_team: runtime bound to a different tape");
  const ModelConfig& c = rt.config();
  const int n = graph.size();
  if (static_cast<int>(feature_planes.size()) != n) {
    throw ContractError("forward_team: feature count does not match agent count");
  }
  if (!labels.empty() && static_cast<int>(labels.size()) != n) {
    throw ContractError("forward_team: label count does not match agent count");
  }
  const int L = c.layers;

  // Project one round's payloads once per consuming layer; every receiver
  // reuses the projection nodes.
  const auto project_round = [&](const std::vector<Tape::Id>& payloads, const std::string& layer) {
    std::vector<std::vector<Tape::Id>> proj(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) proj[static_cast<std::size_t>(i)] = rt.project_heads(payloads[static_cast<std::size_t>(i)], layer);
    return proj;
  };
  const auto gather = [&](const std::vector<std::vector<Tape::Id>>& proj, int i) {
    std::vector<std::vector<Tape::Id>> nbr(static_cast<std::size_t>(c.heads));
    for (const int j : graph.neighbors(i)) {
      for (int k = 0; k < c.heads; ++k) {
        nbr[static_cast<std::size_t>(k)].push_back(proj[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]);
      }
    }
    return nbr;
  };

  // Downward sweep: rounds[r] holds every agent's level-r feature; round r is
  // what each agent broadcasts on exchange r.
  std::vector<std::vector<Tape::Id>> rounds(static_cast<std::size_t>(L) + 1,
                                            std::vector<Tape::Id>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    rounds[0][static_cast<std::size_t>(i)] = rt.encode(feature_planes[static_cast<std::size_t>(i)]);
  }
  for (int l = 0; l < L; ++l) {
    const std::string layer = rt.down_layer(l);
    const auto proj = project_round(rounds[static_cast<std::size_t>(l)], layer);
    for (int i = 0; i < n; ++i) {
      rounds[static_cast<std::size_t>(l) + 1][static_cast<std::size_t>(i)] =
          rt.attend(proj[static_cast<std::size_t>(i)], gather(proj, i), layer);
    }
  }

  // Upward sweep over the stored rounds, consumed in reverse: finishing level
  // l re-reads the round-(L-1-l) payloads, so the last step sees the most
  // aggregated messages and deep information reaches even single-neighbor
  // agents through the values, not just the attention scores. The deep term
  // carries the coarser aggregate, the skip term re-injects the matching
  // downward level; nothing beyond the L broadcasts is required.
  std::vector<Tape::Id> vhat = rounds[static_cast<std::size_t>(L)];
  for (int l = L - 1; l >= 0; --l) {
    const std::string deep_layer = rt.up_deep_layer(l);
    const std::string skip_layer = rt.up_skip_layer(l);
    const std::size_t round = static_cast<std::size_t>(L - 1 - l);
    const auto deep_proj = project_round(rounds[round], deep_layer);
    const auto skip_proj = c.vcycle_shortcut
                               ? project_round(rounds[round], skip_layer)
                               : std::vector<std::vector<Tape::Id>>{};
    std::vector<Tape::Id> next(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto deep_self = rt.project_heads(vhat[static_cast<std::size_t>(i)], deep_layer);
      Tape::Id acc = rt.attend(deep_self, gather(deep_proj, i), deep_layer);
      if (c.vcycle_shortcut) {
        const auto skip_self =
            rt.project_heads(rounds[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)],
                             skip_layer);
        const Tape::Id skip = rt.attend(skip_self, gather(skip_proj, i), skip_layer);
        acc = tape.add(skip, acc);
      }
      next[static_cast<std::size_t>(i)] = acc;
    }
    vhat = std::move(next);
  }

  TeamForward out;
  out.coords.resize(static_cast<std::size_t>(n));
  out.outputs.resize(static_cast<std::size_t>(n));
  std::vector<Tape::Id> labeled_preds;
  std::vector<double> label_data;
  for (int i = 0; i < n; ++i) {
    const Tape::Id y =
        rt.decode(rounds[0][static_cast<std::size_t>(i)], vhat[static_cast<std::size_t>(i)]);
    out.outputs[static_cast<std::size_t>(i)] = y;
    const Tensor& v = tape.val(y);
    out.coords[static_cast<std::size_t>(i)] = {v.data[0], v.data[1]};
    if (!labels.empty() && labels[static_cast<std::size_t>(i)].has_value()) {
      labeled_preds.push_back(y);
      label_data.push_back((*labels[static_cast<std::size_t>(i)])[0]);
      label_data.push_back((*labels[static_cast<std::size_t>(i)])[1]);
    }
  }
  out.labeled_agents = static_cast<int>(labeled_preds.size());
  if (!labeled_preds.empty()) {
    const Tape::Id pred =
        labeled_preds.size() == 1 ? labeled_preds[0] : tape.concat(labeled_preds, 0);
    const Tape::Id target = tape.leaf(
        Tensor({static_cast<int>(labeled_preds.size()), 2}, std::move(label_data)));
    out.loss = tape.mse_loss(pred, target);
  }
  return out;
}

std::vector<std::array<double, 2>> forward_centralized(const ModelParams& params,
                                                       const std::vector<Tensor>& feature_planes,
                                                       const CommGraph& graph) {
  Tape tape(false);
  ModelRuntime rt(tape, params, false);
  return forward_team(tape, rt, feature_planes, graph).coords;
}

std::vector<std::array<double, 2>> forward_decentralized(const ModelParams& params,
                                                         const std::vector<Tensor>& feature_planes,
                                                         const CommGraph& graph) {
  const ModelConfig& c = params.config;
  const int n = graph.size();
  if (static_cast<int>(feature_planes.size()) != n) {
    throw ContractError("forward_decentralized: feature count does not match agent count");
  }
  const int L = c.layers;

  // One tape per agent; values cross agent boundaries only as raw payload
  // vectors moved by exchange_round.
  std::vector<std::unique_ptr<Tape>> tapes;
  std::vector<std::unique_ptr<ModelRuntime>> rts;
  tapes.reserve(static_cast<std::size_t>(n));
  rts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    tapes.push_back(std::make_unique<Tape>(false));
    rts.push_back(std::make_unique<ModelRuntime>(*tapes.back(), params, false));
  }

  // own[i][r]: agent i's level-r feature node. stored[i][r]: leaf nodes for
  // the round-r messages agent i received, in inbox (sender id) order.
  std::vector<std::vector<Tape::Id>> own(static_cast<std::size_t>(n),
                                         std::vector<Tape::Id>(static_cast<std::size_t>(L) + 1));
  std::vector<std::vector<std::vector<Tape::Id>>> stored(
      static_cast<std::size_t>(n), std::vector<std::vector<Tape::Id>>(static_cast<std::size_t>(L)));
  for (int i = 0; i < n; ++i) {
    own[static_cast<std::size_t>(i)][0] = rts[static_cast<std::size_t>(i)]->encode(
        feature_planes[static_cast<std::size_t>(i)]);
  }

  const auto project_stored = [&](int i, int r, const std::string& layer) {
    std::vector<std::vector<Tape::Id>> nbr(static_cast<std::size_t>(c.heads));
    for (const Tape::Id leaf : stored[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)]) {
      const auto heads = rts[static_cast<std::size_t>(i)]->project_heads(leaf, layer);
      for (int k = 0; k < c.heads; ++k) nbr[static_cast<std::size_t>(k)].push_back(heads[static_cast<std::size_t>(k)]);
    }
    return nbr;
  };

  for (int r = 0; r < L; ++r) {
    std::vector<std::vector<double>> outgoing(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      outgoing[static_cast<std::size_t>(i)] =
          tapes[static_cast<std::size_t>(i)]->val(own[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)]).data;
    }
    const Mailbox mail = exchange_round(graph, outgoing);
    for (int i = 0; i < n; ++i) {
      Tape& t = *tapes[static_cast<std::size_t>(i)];
      ModelRuntime& rt = *rts[static_cast<std::size_t>(i)];
      for (const Message& msg : mail.inbox(i)) {
        if (static_cast<int>(msg.payload.size()) != c.embed) {
          throw ContractError("forward_decentralized: payload width mismatch");
        }
        stored[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)].push_back(
            t.leaf(Tensor({1, c.embed}, msg.payload)));
      }
      const std::string layer = rt.down_layer(r);
      const auto self_heads =
          rt.project_heads(own[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)], layer);
      own[static_cast<std::size_t>(i)][static_cast<std::size_t>(r) + 1] =
          rt.attend(self_heads, project_stored(i, r, layer), layer);
    }
  }

  // The upward sweep is agent-local: every term attends over payloads already
  // sitting in the stored inboxes (read back in reverse round order, matching
  // the centralized sweep), so it needs no further communication.
  std::vector<std::array<double, 2>> coords(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Tape& t = *tapes[static_cast<std::size_t>(i)];
    ModelRuntime& rt = *rts[static_cast<std::size_t>(i)];
    Tape::Id vhat = own[static_cast<std::size_t>(i)][static_cast<std::size_t>(L)];
    for (int l = L - 1; l >= 0; --l) {
      const std::string deep_layer = rt.up_deep_layer(l);
      const std::string skip_layer = rt.up_skip_layer(l);
      const int round = L - 1 - l;
      const auto deep_self = rt.project_heads(vhat, deep_layer);
      Tape::Id acc = rt.attend(deep_self, project_stored(i, round, deep_layer), deep_layer);
      if (c.vcycle_shortcut) {
        const auto skip_self = rt.project_heads(
            own[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)], skip_layer);
        const Tape::Id skip =
            rt.attend(skip_self, project_stored(i, round, skip_layer), skip_layer);
        acc = t.add(skip, acc);
      }
      vhat = acc;
    }
    const Tape::Id y = rt.decode(own[static_cast<std::size_t>(i)][0], vhat);
    const Tensor& v = t.val(y);
    coords[static_cast<std::size_t>(i)] = {v.data[0], v.data[1]};
  }
  return coords;
}

Tensor feature_map_to_tensor(const FeatureMap& fm) {
  Tensor t({4, fm.height, fm.width});
  const std::size_t hw = static_cast<std::size_t>(fm.height) * static_cast<std::size_t>(fm.width);
  for (int ch = 0; ch < 4; ++ch) {
    const auto& plane = fm.channels[static_cast<std::size_t>(ch)];
    if (plane.size() != hw) throw ContractError("feature map: channel size mismatch");
    std::copy(plane.begin(), plane.end(),
              t.data.begin() + static_cast<std::ptrdiff_t>(ch) * static_cast<std::ptrdiff_t>(hw));
  }
  return t;
}

}  // namespace gatar
