// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0
//
// Mapping between logical tensors and one-dimensional slot vectors. Tensors
// are flattened row-major over a power-of-two padded shape; padding positions
// and the tail of the vector are exactly zero.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "einslots/backend.hpp"
#include "einslots/equation.hpp"
#include "einslots/errors.hpp"
#include "einslots/tensor.hpp"

namespace einslots {

// A slot vector together with the shapes needed to read it back.
struct PackedTensor {
  std::vector<std::size_t> logical_shape;
  std::vector<std::size_t> padded_shape;
  SlotVector vec;
};

inline std::vector<std::size_t> pad_shape(std::span<const std::size_t> shape) {
  std::vector<std::size_t> padded(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) padded[i] = next_pow2(shape[i]);
  return padded;
}

inline std::vector<double> pack(const Tensor& t, std::size_t slot_count) {
  std::vector<std::size_t> padded = pad_shape(t.shape);
  if (numel(padded) > slot_count)
    throw DoesNotFit("tensor needs " + std::to_string(numel(padded)) +
                     " slots after padding but only " + std::to_string(slot_count) +
                     " are available");
  std::vector<double> slots(slot_count, 0.0);
  std::vector<std::size_t> padded_strides = row_major_strides(padded);
  for_each_index(t.shape, [&](std::span<const std::size_t> idx) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) off += idx[i] * padded_strides[i];
    slots[off] = t.at(idx);
  });
  return slots;
}

inline Tensor unpack(std::span<const double> slots, std::vector<std::size_t> logical_shape,
                     std::span<const std::size_t> padded_shape) {
  Tensor t = Tensor::zeros(std::move(logical_shape));
  std::vector<std::size_t> padded_strides = row_major_strides(padded_shape);
  for_each_index(t.shape, [&](std::span<const std::size_t> idx) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) off += idx[i] * padded_strides[i];
    t.at(idx) = slots[off];
  });
  return t;
}

inline PackedTensor pack_encrypt(Backend& backend, const Tensor& t) {
  std::vector<double> slots = pack(t, backend.slots());
  PackedTensor pt;
  pt.logical_shape = t.shape;
  pt.padded_shape = pad_shape(t.shape);
  pt.vec = backend.encrypt(backend.encode(slots));
  return pt;
}

inline Tensor decrypt_unpack(const Backend& backend, const PackedTensor& pt) {
  return unpack(backend.decrypt(pt.vec), pt.logical_shape, pt.padded_shape);
}

}  // namespace einslots
