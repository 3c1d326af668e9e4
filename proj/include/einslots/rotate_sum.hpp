// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0
//
// Logarithmic rotate-and-sum broadcasting and reduction, plus the final mask.
// Broadcasting rotates down the vector (negative amounts), reduction rotates
// up (positive amounts); both need log2(size) rotations per dimension and
// leave the level unchanged.

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "einslots/backend.hpp"
#include "einslots/equation.hpp"

namespace einslots {

// Fill a freshly inserted dimension: data must sit at index 0 of the new
// dimension with zeros in the placeholder slots.
inline SlotVector broadcast_dim(Backend& backend, SlotVector x, std::size_t stride,
                                std::size_t size) {
  for (std::size_t step = stride; step < stride * size; step <<= 1)
    x = backend.add(x, backend.rotate(x, -static_cast<std::int64_t>(step)));
  return x;
}

// Sum over contraction dimensions given as (stride, padded size) pairs,
// outermost first. The leading slots hold the sums; slots past the inner
// region hold wrap-around garbage until masked.
inline SlotVector reduce_dims(Backend& backend, SlotVector x,
                              std::span<const std::pair<std::size_t, std::size_t>> dims) {
  for (auto [stride, size] : dims)
    for (std::size_t step = stride; step < stride * size; step <<= 1)
      x = backend.add(x, backend.rotate(x, static_cast<std::int64_t>(step)));
  return x;
}

// Multiply by the binary vector 1^count 0^(S-count); consumes one level.
inline SlotVector mask_top(Backend& backend, const SlotVector& x, std::size_t count) {
  std::vector<double> mask(backend.slots(), 0.0);
  for (std::size_t i = 0; i < count && i < mask.size(); ++i) mask[i] = 1.0;
  backend.note_mask();
  return backend.mul_pt(x, backend.encode(mask));
}

}  // namespace einslots
