#pragma once

#include <functional>
#include <map>

#include "core/tensor.hpp"

namespace gatar {

// Define-by-run reverse-mode tape. Every op appends a node whose backward
// closure scatters the node's gradient into its parents; backward() walks the
// nodes in reverse creation order, which is a valid reverse topological order
// by construction. All shape violations throw ContractError naming the op.
class Tape {
 public:
  using Id = std::int32_t;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Id leaf(Tensor value, bool requires_grad = false);

  const Tensor& val(Id id) const { return nodes_[check(id)].value; }
  const Tensor& grad(Id id) const;
  bool requires_grad(Id id) const { return nodes_[check(id)].requires_grad; }

  // Seeds the (scalar or tensor-uniform) root gradient with `seed` and runs
  // every backward closure once.
  void backward(Id root, double seed = 1.0);
  void zero_grad();

  // Rewind support: drop every node created after the checkpoint. Gradients
  // of surviving nodes are untouched, so a batch can accumulate across
  // samples before the caller zeroes them.
  std::size_t checkpoint() const { return nodes_.size(); }
  void rewind(std::size_t mark);

  std::size_t node_count() const { return nodes_.size(); }

  // Ops. Mixed requires_grad inputs are fine; gradient only flows where asked.
  Id matmul(Id a, Id b);
  Id add(Id a, Id b);    // equal shapes, or b a single-element scalar
  Id mul(Id a, Id b);    // elementwise, equal shapes
  Id relu(Id a);
  Id leaky_relu(Id a, double slope);
  Id sigmoid(Id a);
  Id softmax(Id a, int axis);  // rank-2, axis 0 or 1
  Id concat(const std::vector<Id>& parts, int axis);  // rank-2, axis 0 or 1
  Id slice(Id a, int axis, int start, int length);    // rank-2
  Id reshape(Id a, std::vector<int> shape);
  Id transpose(Id a);  // rank-2
  Id mse_loss(Id prediction, Id target);  // mean over elements, scalar (1,1)
  // Input (C,H,W), kernel (F,C,kh,kw), optional bias (F) passed as -1 to skip.
  Id conv2d(Id input, Id kernel, Id bias, int stride, int padding);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void()> back;
  };

  Id check(Id id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
      throw ContractError("Tape: node id out of range");
    }
    return id;
  }

  Id push(Tensor value, bool requires_grad, std::function<void()> back);
  Tensor& grad_mut(Id id) { return nodes_[static_cast<std::size_t>(id)].grad; }

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

// Adam with bias correction. Parameters and gradients are keyed by name; the
// ordered map fixes the update order, keeping runs reproducible.
struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  std::int64_t step = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace gatar
