#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace gatar {

// Dense row-major f64 tensor. Small and deliberately boring: shape plus a
// flat buffer, no views, no strides.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(count(shape)), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != static_cast<std::size_t>(count(shape))) {
      throw ContractError("Tensor: data length does not match shape");
    }
  }

  static std::int64_t count(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (const int d : shape) {
      if (d <= 0) throw ContractError("Tensor: shape entries must be positive");
      n *= d;
    }
    return n;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  // 2-D accessors; the hot paths index data directly.
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * dim(1) + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * dim(1) + c]; }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }

  std::string shape_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
  }
};

}  // namespace gatar
