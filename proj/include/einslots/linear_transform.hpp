// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0
//
// Slot permutations as diagonal-form matrix-vector products. A permutation is
// stored as a sparse dest -> src map, decomposed into generalized diagonals
// d_k with d_k[i] = M[i, (i+k) mod S], and applied either as the plain
// diagonal method (one homomorphic rotation per nonzero off-diagonal) or as
// baby-step giant-step, which pre-rotates the cleartext diagonals and needs
// only O(sqrt(S)) homomorphic rotations.

#pragma once

#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "einslots/backend.hpp"
#include "einslots/equation.hpp"
#include "einslots/tensor.hpp"

namespace einslots {

// Sparse slot permutation: dest -> src, injective. Destination slots outside
// the domain are implicitly zero after application.
struct PermutationPlan {
  std::size_t size = 0;
  std::map<std::size_t, std::size_t> dest_to_src;
};

// Generalized diagonals of an S x S matrix, stored sparsely per offset.
// Entries are (row index i, value M[i, (i+k) mod S]); only nonzero diagonals
// are present. For permutation plans every value is 1.
struct DiagonalSet {
  std::size_t size = 0;
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> diagonals;

  std::vector<double> dense(std::size_t offset) const {
    std::vector<double> d(size, 0.0);
    auto it = diagonals.find(offset);
    if (it != diagonals.end())
      for (auto [i, v] : it->second) d[i] = v;
    return d;
  }

  static DiagonalSet from_matrix(const std::vector<std::vector<double>>& m) {
    DiagonalSet set;
    set.size = m.size();
    for (std::size_t i = 0; i < set.size; ++i)
      for (std::size_t j = 0; j < set.size; ++j)
        if (m[i][j] != 0.0) {
          std::size_t k = (j + set.size - i) % set.size;
          set.diagonals[k].emplace_back(i, m[i][j]);
        }
    return set;
  }
};

// Build the permutation that moves an operand from its own packed row-major
// layout into the broadcast layout: for every logical multi-index over the
// operand's labels, dest = sum(index * broadcast stride) with missing labels
// at index zero, src = the row-major offset over the operand's padded shape.
// A transposed label order is covered by the same rule.
inline PermutationPlan build_expansion_permutation(std::string_view labels,
                                                   std::span<const std::size_t> padded_shape,
                                                   const LayoutPlan& layout) {
  PermutationPlan plan;
  plan.size = layout.slot_count;

  std::vector<std::size_t> logical(labels.size());
  std::vector<std::size_t> dest_strides(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    logical[i] = layout.sizes.at(labels[i]);
    dest_strides[i] = layout.strides.at(labels[i]);
  }
  std::vector<std::size_t> src_strides = row_major_strides(padded_shape);

  for_each_index(logical, [&](std::span<const std::size_t> idx) {
    std::size_t dest = 0, src = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      dest += idx[i] * dest_strides[i];
      src += idx[i] * src_strides[i];
    }
    plan.dest_to_src.emplace(dest, src);
  });
  return plan;
}

inline bool is_identity(const PermutationPlan& plan) {
  for (auto [dest, src] : plan.dest_to_src)
    if (dest != src) return false;
  return true;
}

inline DiagonalSet extract_diagonals(const PermutationPlan& plan) {
  DiagonalSet set;
  set.size = plan.size;
  for (auto [dest, src] : plan.dest_to_src) {
    std::size_t k = (src + plan.size - dest) % plan.size;
    set.diagonals[k].emplace_back(dest, 1.0);
  }
  return set;
}

// y = sum_k encode(d_k) * rotate(x, k). Consumes exactly one level; one
// homomorphic rotation per nonzero offset k != 0.
inline SlotVector apply_halevi_shoup(Backend& backend, const SlotVector& x,
                                     const DiagonalSet& diags) {
  if (diags.diagonals.empty()) {
    std::vector<double> zeros(backend.slots(), 0.0);
    return backend.mul_pt(x, backend.encode(zeros));
  }
  SlotVector acc;
  for (const auto& [k, entries] : diags.diagonals) {
    SlotVector rotated = (k == 0) ? x : backend.rotate(x, static_cast<std::int64_t>(k));
    SlotVector term = backend.mul_pt(rotated, backend.encode(diags.dense(k)));
    acc = acc.valid() ? backend.add(acc, term) : term;
  }
  return acc;
}

// Same result as apply_halevi_shoup with the offsets factored as
// k = n1*j + i: the giant rotation by n1*j moves to the ciphertext while the
// remaining n1*j part of each diagonal is rolled in the clear before
// encoding. Baby rotations are computed once and reused across giant groups;
// the i = 0 baby step and the j = 0 giant step are elided.
inline SlotVector apply_bsgs(Backend& backend, const SlotVector& x, const DiagonalSet& diags) {
  std::size_t s = backend.slots();
  auto [n1, n2] = bsgs_split(s);

  if (diags.diagonals.empty()) {
    std::vector<double> zeros(s, 0.0);
    return backend.mul_pt(x, backend.encode(zeros));
  }

  // offset -> (j, i) with only nonempty giant groups materialized
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (const auto& [k, entries] : diags.diagonals) groups[k / n1].push_back(k % n1);

  std::map<std::size_t, SlotVector> baby;  // i -> rotate(x, i)
  auto baby_rotated = [&](std::size_t i) -> const SlotVector& {
    if (i == 0) return x;
    auto it = baby.find(i);
    if (it == baby.end())
      it = baby.emplace(i, backend.rotate(x, static_cast<std::int64_t>(i))).first;
    return it->second;
  };

  SlotVector acc;
  std::vector<double> buf(s);
  for (const auto& [j, babies] : groups) {
    std::size_t giant = n1 * j;
    SlotVector inner;
    for (std::size_t i : babies) {
      // roll(d_k, -giant): the entry at index q lands at (q + giant) mod S
      buf.assign(s, 0.0);
      for (auto [q, v] : diags.diagonals.at(giant + i)) buf[(q + giant) % s] = v;
      SlotVector term = backend.mul_pt(baby_rotated(i), backend.encode(buf));
      inner = inner.valid() ? backend.add(inner, term) : term;
    }
    if (j != 0) inner = backend.rotate(inner, static_cast<std::int64_t>(giant));
    acc = acc.valid() ? backend.add(acc, inner) : inner;
  }

  backend.note_hoisted_baby_steps(n1 - 1);
  return acc;
}

}  // namespace einslots
