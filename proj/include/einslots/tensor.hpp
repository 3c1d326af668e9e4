// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace einslots {

inline std::size_t numel(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::vector<std::size_t> row_major_strides(std::span<const std::size_t> shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

// Dense row-major tensor of doubles. Rank 0 is a scalar with one element.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() : data(1, 0.0) {}
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel(shape)) throw std::invalid_argument("Tensor: data/shape mismatch");
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::vector<double> d(numel(s), 0.0);
    return Tensor(std::move(s), std::move(d));
  }
  static Tensor scalar(double v) { return Tensor({}, {v}); }

  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return data.size(); }

  double at(std::span<const std::size_t> idx) const { return data[flat(idx)]; }
  double& at(std::span<const std::size_t> idx) { return data[flat(idx)]; }

  std::size_t flat(std::span<const std::size_t> idx) const {
    std::size_t off = 0, stride = 1;
    for (std::size_t i = shape.size(); i-- > 0;) {
      off += idx[i] * stride;
      stride *= shape[i];
    }
    return off;
  }
};

// Odometer over a multi-index; fn receives the current index vector.
template <typename Fn>
void for_each_index(std::span<const std::size_t> shape, Fn&& fn) {
  for (auto d : shape)
    if (d == 0) return;
  std::vector<std::size_t> idx(shape.size(), 0);
  while (true) {
    fn(std::span<const std::size_t>(idx));
    std::size_t i = shape.size();
    while (i > 0) {
      --i;
      if (++idx[i] < shape[i]) break;
      idx[i] = 0;
      if (i == 0) return;
    }
    if (shape.empty()) return;
  }
}

}  // namespace einslots
