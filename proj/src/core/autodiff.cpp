#include "core/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace gatar {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Tensor& a) {
  throw ContractError(op + ": unsupported shape " + a.shape_string());
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw ContractError(op + ": incompatible shapes " + a.shape_string() + " and " +
                      b.shape_string());
}

void require_rank2(const std::string& op, const Tensor& t) {
  if (t.rank() != 2) shape_error(op, t);
}

}  // namespace

Tape::Id Tape::push(Tensor value, bool requires_grad, std::function<void()> back) {
  Node node;
  node.requires_grad = requires_grad && grad_enabled_;
  if (node.requires_grad) {
    node.grad = Tensor(value.shape);
    node.back = std::move(back);
  }
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

const Tensor& Tape::grad(Id id) const {
  const Node& node = nodes_[static_cast<std::size_t>(check(id))];
  if (!node.requires_grad) throw ContractError("Tape: node does not track gradients");
  return node.grad;
}

void Tape::backward(Id root, double seed) {
  check(root);
  Node& r = nodes_[static_cast<std::size_t>(root)];
  if (!r.requires_grad) throw ContractError("Tape: backward on a node without gradients");
  std::fill(r.grad.data.begin(), r.grad.data.end(), seed);
  for (Id i = root; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.requires_grad && node.back) node.back();
  }
}

void Tape::zero_grad() {
  for (Node& node : nodes_) {
    if (node.requires_grad) std::fill(node.grad.data.begin(), node.grad.data.end(), 0.0);
  }
}

void Tape::rewind(std::size_t mark) {
  if (mark > nodes_.size()) throw ContractError("Tape: rewind past the end");
  nodes_.resize(mark);
}

Tape::Id Tape::matmul(Id a, Id b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require_rank2("matmul", ta);
  require_rank2("matmul", tb);
  if (ta.dim(1) != tb.dim(0)) shape_error("matmul", ta, tb);
  const int m = ta.dim(0);
  const int k = ta.dim(1);
  const int n = tb.dim(1);
  Tensor out({m, n});
  {
    const double* pa = ta.data.data();
    const double* pb = tb.data.data();
    double* po = out.data.data();
    for (int i = 0; i < m; ++i) {
      for (int p = 0; p < k; ++p) {
        const double av = pa[static_cast<std::size_t>(i) * k + p];
        if (av == 0.0) continue;
        const double* brow = pb + static_cast<std::size_t>(p) * n;
        double* orow = po + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  }
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [this, a, b, id, m, k, n] {
                const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
                if (nodes_[static_cast<std::size_t>(a)].requires_grad) {
                  // dA = g * B^T
                  double* ga = grad_mut(a).data.data();
                  const double* pb = nodes_[static_cast<std::size_t>(b)].value.data.data();
                  for (int i = 0; i < m; ++i) {
                    const double* grow = g.data.data() + static_cast<std::size_t>(i) * n;
                    double* garow = ga + static_cast<std::size_t>(i) * k;
                    for (int p = 0; p < k; ++p) {
                      const double* brow = pb + static_cast<std::size_t>(p) * n;
                      double acc = 0.0;
                      for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                      garow[p] += acc;
                    }
                  }
                }
                if (nodes_[static_cast<std::size_t>(b)].requires_grad) {
                  // dB = A^T * g
                  double* gb = grad_mut(b).data.data();
                  const double* pa = nodes_[static_cast<std::size_t>(a)].value.data.data();
                  for (int p = 0; p < k; ++p) {
                    for (int i = 0; i < m; ++i) {
                      const double av = pa[static_cast<std::size_t>(i) * k + p];
                      if (av == 0.0) continue;
                      const double* grow = g.data.data() + static_cast<std::size_t>(i) * n;
                      double* brow = gb + static_cast<std::size_t>(p) * n;
                      for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
                    }
                  }
                }
              });
}

Tape::Id Tape::add(Id a, Id b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  const bool scalar_b = tb.size() == 1 && ta.size() != 1;
  if (!scalar_b && ta.shape != tb.shape) shape_error("add", ta, tb);
  Tensor out = ta;
  if (scalar_b) {
    const double s = tb.data[0];
    for (double& v : out.data) v += s;
  } else {
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
  }
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [this, a, b, id, scalar_b] {
                const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
                if (nodes_[static_cast<std::size_t>(a)].requires_grad) {
                  double* ga = grad_mut(a).data.data();
                  for (std::size_t i = 0; i < g.data.size(); ++i) ga[i] += g.data[i];
                }
                if (nodes_[static_cast<std::size_t>(b)].requires_grad) {
                  double* gb = grad_mut(b).data.data();
                  if (scalar_b) {
                    double sum = 0.0;
                    for (const double v : g.data) sum += v;
                    gb[0] += sum;
                  } else {
                    for (std::size_t i = 0; i < g.data.size(); ++i) gb[i] += g.data[i];
                  }
                }
              });
}

Tape::Id Tape::mul(Id a, Id b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (ta.shape != tb.shape) shape_error("mul", ta, tb);
  Tensor out = ta;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a) || requires_grad(b), [this, a, b, id] {
    const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
    if (nodes_[static_cast<std::size_t>(a)].requires_grad) {
      double* ga = grad_mut(a).data.data();
      const double* pb = nodes_[static_cast<std::size_t>(b)].value.data.data();
      for (std::size_t i = 0; i < g.data.size(); ++i) ga[i] += g.data[i] * pb[i];
    }
    if (nodes_[static_cast<std::size_t>(b)].requires_grad) {
      double* gb = grad_mut(b).data.data();
      const double* pa = nodes_[static_cast<std::size_t>(a)].value.data.data();
      for (std::size_t i = 0; i < g.data.size(); ++i) gb[i] += g.data[i] * pa[i];
    }
  });
}

Tape::Id Tape::relu(Id a) {
  Tensor out = val(a);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a), [this, a, id] {
    const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
    const double* x = nodes_[static_cast<std::size_t>(a)].value.data.data();
    double* ga = grad_mut(a).data.data();
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g.data[i];
    }
  });
}

Tape::Id Tape::leaky_relu(Id a, double slope) {
  Tensor out = val(a);
  for (double& v : out.data) v = v > 0.0 ? v : slope * v;
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a), [this, a, id, slope] {
    const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
    const double* x = nodes_[static_cast<std::size_t>(a)].value.data.data();
    double* ga = grad_mut(a).data.data();
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      ga[i] += g.data[i] * (x[i] > 0.0 ? 1.0 : slope);
    }
  });
}

Tape::Id Tape::sigmoid(Id a) {
  Tensor out = val(a);
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a), [this, a, id] {
    const Node& self = nodes_[static_cast<std::size_t>(id)];
    double* ga = grad_mut(a).data.data();
    for (std::size_t i = 0; i < self.grad.data.size(); ++i) {
      const double s = self.value.data[i];
      ga[i] += self.grad.data[i] * s * (1.0 - s);
    }
  });
}

Tape::Id Tape::softmax(Id a, int axis) {
  const Tensor& ta = val(a);
  require_rank2("softmax", ta);
  if (axis != 0 && axis != 1) throw ContractError("softmax: axis must be 0 or 1");
  const int rows = ta.dim(0);
  const int cols = ta.dim(1);
  const int slices = axis == 1 ? rows : cols;
  const int extent = axis == 1 ? cols : rows;
  const int slice_stride = axis == 1 ? cols : 1;
  const int elem_stride = axis == 1 ? 1 : cols;

  Tensor out(ta.shape);
  for (int s = 0; s < slices; ++s) {
    const double* xin = ta.data.data() + static_cast<std::size_t>(s) * slice_stride;
    double* xout = out.data.data() + static_cast<std::size_t>(s) * slice_stride;
    double top = xin[0];
    for (int e = 1; e < extent; ++e) top = std::max(top, xin[static_cast<std::size_t>(e) * elem_stride]);
    double total = 0.0;
    for (int e = 0; e < extent; ++e) {
      const double v = std::exp(xin[static_cast<std::size_t>(e) * elem_stride] - top);
      xout[static_cast<std::size_t>(e) * elem_stride] = v;
      total += v;
    }
    for (int e = 0; e < extent; ++e) xout[static_cast<std::size_t>(e) * elem_stride] /= total;
  }
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a),
              [this, a, id, slices, extent, slice_stride, elem_stride] {
                const Node& self = nodes_[static_cast<std::size_t>(id)];
                double* ga = grad_mut(a).data.data();
                for (int s = 0; s < slices; ++s) {
                  const std::size_t base = static_cast<std::size_t>(s) * slice_stride;
                  double dot = 0.0;
                  for (int e = 0; e < extent; ++e) {
                    const std::size_t i = base + static_cast<std::size_t>(e) * elem_stride;
                    dot += self.grad.data[i] * self.value.data[i];
                  }
                  for (int e = 0; e < extent; ++e) {
                    const std::size_t i = base + static_cast<std::size_t>(e) * elem_stride;
                    ga[i] += self.value.data[i] * (self.grad.data[i] - dot);
                  }
                }
              });
}

Tape::Id Tape::concat(const std::vector<Id>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ContractError("concat: axis must be 0 or 1");
  const Tensor& first = val(parts.front());
  require_rank2("concat", first);
  const int fixed = axis == 0 ? first.dim(1) : first.dim(0);
  int total = 0;
  bool req = false;
  for (const Id p : parts) {
    const Tensor& t = val(p);
    require_rank2("concat", t);
    const int f = axis == 0 ? t.dim(1) : t.dim(0);
    if (f != fixed) shape_error("concat", first, t);
    total += axis == 0 ? t.dim(0) : t.dim(1);
    req = req || requires_grad(p);
  }
  const int rows = axis == 0 ? total : fixed;
  const int cols = axis == 0 ? fixed : total;
  Tensor out({rows, cols});
  int offset = 0;
  for (const Id p : parts) {
    const Tensor& t = val(p);
    if (axis == 0) {
      std::copy(t.data.begin(), t.data.end(),
                out.data.begin() + static_cast<std::ptrdiff_t>(offset) * cols);
      offset += t.dim(0);
    } else {
      for (int r = 0; r < rows; ++r) {
        std::copy(t.data.begin() + static_cast<std::ptrdiff_t>(r) * t.dim(1),
                  t.data.begin() + static_cast<std::ptrdiff_t>(r + 1) * t.dim(1),
                  out.data.begin() + static_cast<std::ptrdiff_t>(r) * cols + offset);
      }
      offset += t.dim(1);
    }
  }
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), req, [this, id, axis, rows, cols, parts] {
    const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
    int offset = 0;
    for (const Id p : parts) {
      const Tensor& t = nodes_[static_cast<std::size_t>(p)].value;
      const bool want = nodes_[static_cast<std::size_t>(p)].requires_grad;
      if (axis == 0) {
        if (want) {
          double* gp = grad_mut(p).data.data();
          const double* src = g.data.data() + static_cast<std::size_t>(offset) * cols;
          for (std::size_t i = 0; i < t.data.size(); ++i) gp[i] += src[i];
        }
        offset += t.dim(0);
      } else {
        if (want) {
          double* gp = grad_mut(p).data.data();
          for (int r = 0; r < rows; ++r) {
            const double* src = g.data.data() + static_cast<std::size_t>(r) * cols + offset;
            for (int c = 0; c < t.dim(1); ++c) {
              gp[static_cast<std::size_t>(r) * t.dim(1) + c] += src[c];
            }
          }
        }
        offset += t.dim(1);
      }
    }
  });
}

Tape::Id Tape::slice(Id a, int axis, int start, int length) {
  const Tensor& ta = val(a);
  require_rank2("slice", ta);
  if (axis != 0 && axis != 1) throw ContractError("slice: axis must be 0 or 1");
  const int extent = ta.dim(axis);
  if (start < 0 || length <= 0 || start + length > extent) {
    throw ContractError("slice: range [" + std::to_string(start) + ", " +
                        std::to_string(start + length) + ") outside extent " +
                        std::to_string(extent));
  }
  const int rows = axis == 0 ? length : ta.dim(0);
  const int cols = axis == 0 ? ta.dim(1) : length;
  Tensor out({rows, cols});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int sr = axis == 0 ? r + start : r;
      const int sc = axis == 0 ? c : c + start;
      out.data[static_cast<std::size_t>(r) * cols + c] = ta.at(sr, sc);
    }
  }
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a), [this, a, id, axis, start, rows, cols] {
    const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
    Tensor& ga = grad_mut(a);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const int sr = axis == 0 ? r + start : r;
        const int sc = axis == 0 ? c : c + start;
        ga.at(sr, sc) += g.data[static_cast<std::size_t>(r) * cols + c];
      }
    }
  });
}

Tape::Id Tape::reshape(Id a, std::vector<int> shape) {
  const Tensor& ta = val(a);
  if (Tensor::count(shape) != ta.size()) {
    throw ContractError("reshape: cannot view " + ta.shape_string() + " as " +
                        Tensor(shape).shape_string());
  }
  Tensor out(std::move(shape), ta.data);
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a), [this, a, id] {
    const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
    double* ga = grad_mut(a).data.data();
    for (std::size_t i = 0; i < g.data.size(); ++i) ga[i] += g.data[i];
  });
}

Tape::Id Tape::transpose(Id a) {
  const Tensor& ta = val(a);
  require_rank2("transpose", ta);
  const int m = ta.dim(0);
  const int n = ta.dim(1);
  Tensor out({n, m});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out.at(j, i) = ta.at(i, j);
  }
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(a), [this, a, id, m, n] {
    const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
    Tensor& ga = grad_mut(a);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
    }
  });
}

Tape::Id Tape::mse_loss(Id prediction, Id target) {
  const Tensor& tp = val(prediction);
  const Tensor& tt = val(target);
  if (tp.shape != tt.shape) shape_error("mse_loss", tp, tt);
  const double inv_n = 1.0 / static_cast<double>(tp.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < tp.data.size(); ++i) {
    const double d = tp.data[i] - tt.data[i];
    acc += d * d;
  }
  Tensor out = Tensor::scalar(acc * inv_n);
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), requires_grad(prediction) || requires_grad(target),
              [this, prediction, target, id, inv_n] {
                const double g = nodes_[static_cast<std::size_t>(id)].grad.data[0];
                const Tensor& tp = nodes_[static_cast<std::size_t>(prediction)].value;
                const Tensor& tt = nodes_[static_cast<std::size_t>(target)].value;
                const double scale = 2.0 * inv_n * g;
                if (nodes_[static_cast<std::size_t>(prediction)].requires_grad) {
                  double* gp = grad_mut(prediction).data.data();
                  for (std::size_t i = 0; i < tp.data.size(); ++i) {
                    gp[i] += scale * (tp.data[i] - tt.data[i]);
                  }
                }
                if (nodes_[static_cast<std::size_t>(target)].requires_grad) {
                  double* gt = grad_mut(target).data.data();
                  for (std::size_t i = 0; i < tp.data.size(); ++i) {
                    gt[i] -= scale * (tp.data[i] - tt.data[i]);
                  }
                }
              });
}

Tape::Id Tape::conv2d(Id input, Id kernel, Id bias, int stride, int padding) {
  const Tensor& tx = val(input);
  const Tensor& tk = val(kernel);
  if (tx.rank() != 3) shape_error("conv2d", tx);
  if (tk.rank() != 4) shape_error("conv2d", tk);
  if (tx.dim(0) != tk.dim(1)) shape_error("conv2d", tx, tk);
  if (stride <= 0 || padding < 0) throw ContractError("conv2d: bad stride or padding");
  const int C = tx.dim(0);
  const int H = tx.dim(1);
  const int W = tx.dim(2);
  const int F = tk.dim(0);
  const int kh = tk.dim(2);
  const int kw = tk.dim(3);
  const int oh = (H + 2 * padding - kh) / stride + 1;
  const int ow = (W + 2 * padding - kw) / stride + 1;
  if (kh > H + 2 * padding || kw > W + 2 * padding || oh <= 0 || ow <= 0) {
    shape_error("conv2d", tx, tk);
  }
  const bool with_bias = bias >= 0;
  if (with_bias) {
    const Tensor& tb = val(bias);
    if (tb.rank() != 1 || tb.dim(0) != F) shape_error("conv2d", tk, tb);
  }

  Tensor out({F, oh, ow});
  {
    const double* px = tx.data.data();
    const double* pk = tk.data.data();
    const double* pb = with_bias ? val(bias).data.data() : nullptr;
    double* po = out.data.data();
    for (int f = 0; f < F; ++f) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = with_bias ? pb[f] : 0.0;
          for (int c = 0; c < C; ++c) {
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = oy * stride + ky - padding;
              if (iy < 0 || iy >= H) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ox * stride + kx - padding;
                if (ix < 0 || ix >= W) continue;
                acc += px[(static_cast<std::size_t>(c) * H + iy) * W + ix] *
                       pk[((static_cast<std::size_t>(f) * C + c) * kh + ky) * kw + kx];
              }
            }
          }
          po[(static_cast<std::size_t>(f) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
  const bool req =
      requires_grad(input) || requires_grad(kernel) || (with_bias && requires_grad(bias));
  const Id id = static_cast<Id>(nodes_.size());
  return push(std::move(out), req,
              [this, input, kernel, bias, id, stride, padding, C, H, W, F, kh, kw, oh, ow,
               with_bias] {
                const Tensor& g = nodes_[static_cast<std::size_t>(id)].grad;
                const double* pg = g.data.data();
                const double* px = nodes_[static_cast<std::size_t>(input)].value.data.data();
                const double* pk = nodes_[static_cast<std::size_t>(kernel)].value.data.data();
                const bool want_x = nodes_[static_cast<std::size_t>(input)].requires_grad;
                const bool want_k = nodes_[static_cast<std::size_t>(kernel)].requires_grad;
                const bool want_b =
                    with_bias && nodes_[static_cast<std::size_t>(bias)].requires_grad;
                double* gx = want_x ? grad_mut(input).data.data() : nullptr;
                double* gk = want_k ? grad_mut(kernel).data.data() : nullptr;
                double* gb = want_b ? grad_mut(bias).data.data() : nullptr;
                for (int f = 0; f < F; ++f) {
                  for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                      const double gv = pg[(static_cast<std::size_t>(f) * oh + oy) * ow + ox];
                      if (gv == 0.0) continue;
                      if (gb) gb[f] += gv;
                      if (!want_x && !want_k) continue;
                      for (int c = 0; c < C; ++c) {
                        for (int ky = 0; ky < kh; ++ky) {
                          const int iy = oy * stride + ky - padding;
                          if (iy < 0 || iy >= H) continue;
                          for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ox * stride + kx - padding;
                            if (ix < 0 || ix >= W) continue;
                            const std::size_t xi =
                                (static_cast<std::size_t>(c) * H + iy) * W + ix;
                            const std::size_t ki =
                                ((static_cast<std::size_t>(f) * C + c) * kh + ky) * kw + kx;
                            if (gx) gx[xi] += gv * pk[ki];
                            if (gk) gk[ki] += gv * px[xi];
                          }
                        }
                      }
                    }
                  }
                }
              });
}

void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state,
               const AdamConfig& config) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (auto& [name, param] : params) {
    const auto git = grads.find(name);
    if (git == grads.end()) throw ContractError("adam_step: missing gradient for " + name);
    const Tensor& g = git->second;
    if (g.shape != param.shape) {
      throw ContractError("adam_step: gradient shape mismatch for " + name);
    }
    Tensor& m = state.m.try_emplace(name, Tensor(param.shape)).first->second;
    Tensor& v = state.v.try_emplace(name, Tensor(param.shape)).first->second;
    for (std::size_t i = 0; i < param.data.size(); ++i) {
      m.data[i] = config.beta1 * m.data[i] + (1.0 - config.beta1) * g.data[i];
      v.data[i] = config.beta2 * v.data[i] + (1.0 - config.beta2) * g.data[i] * g.data[i];
      const double m_hat = m.data[i] / bc1;
      const double v_hat = v.data[i] / bc2;
      param.data[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace gatar
