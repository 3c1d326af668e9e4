// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0
//
// Einsum equation parsing and broadcast-layout planning. The layout places
// contraction labels as the outer dimensions and output labels as the inner
// dimensions, so every reduction lands in the leading slots of the vector.

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "einslots/errors.hpp"

namespace einslots {

constexpr std::size_t kMaxOperands = 8;

inline bool is_pow2(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

inline std::size_t ilog2(std::size_t v) {
  std::size_t t = 0;
  while ((std::size_t{1} << t) < v) ++t;
  return t;
}

// A validated einsum equation with extents bound from the operand shapes.
struct EinsumSpec {
  std::vector<std::string> inputs;    // one label list per operand
  std::string output;                 // output label list
  std::map<char, std::size_t> sizes;  // label -> logical extent
  std::string contraction;            // labels absent from the output, in
                                      // first-appearance order across inputs
};

enum class AlignmentKind { identity, permute };

// How one operand's packed layout relates to the broadcast layout. An operand
// whose labels form, in order, a contiguous suffix of the broadcast order is
// already laid out correctly and needs no slot permutation.
struct AlignmentPlan {
  AlignmentKind kind = AlignmentKind::identity;
  std::string labels;
  std::vector<std::size_t> padded_shape;
};

struct LayoutPlan {
  std::string broadcast_order;           // contraction labels, then output labels
  std::map<char, std::size_t> sizes;     // logical extents (copied from the spec)
  std::map<char, std::size_t> padded;    // label -> power-of-two extent
  std::map<char, std::size_t> strides;   // row-major strides over broadcast_order
  std::size_t broadcast_count = 1;       // product of padded extents
  std::size_t output_count = 1;          // product of padded output extents
  std::vector<AlignmentPlan> per_operand;
  std::size_t slot_count = 0;
};

inline EinsumSpec parse(std::string_view equation,
                        std::span<const std::vector<std::size_t>> shapes) {
  std::string eq;
  eq.reserve(equation.size());
  for (char c : equation)
    if (c != ' ') eq.push_back(c);

  auto arrow = eq.find("->");
  if (arrow == std::string::npos)
    throw ImplicitOutput("equation \"" + eq + "\" has no \"->\"; implicit output is unsupported");
  if (eq.find("->", arrow + 2) != std::string::npos)
    throw MalformedEquation("equation contains more than one \"->\"");

  std::string lhs = eq.substr(0, arrow);
  std::string rhs = eq.substr(arrow + 2);

  EinsumSpec spec;
  spec.inputs.emplace_back();
  for (char c : lhs) {
    if (c == ',') {
      spec.inputs.emplace_back();
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      spec.inputs.back().push_back(c);
    } else {
      throw MalformedEquation(std::string("invalid character '") + c + "' in equation");
    }
  }
  for (char c : rhs) {
    if (!std::isalpha(static_cast<unsigned char>(c)))
      throw MalformedEquation(std::string("invalid character '") + c + "' in output");
  }
  spec.output = rhs;

  if (spec.inputs.size() != shapes.size())
    throw MalformedEquation("equation names " + std::to_string(spec.inputs.size()) +
                            " operands but " + std::to_string(shapes.size()) +
                            " shapes were given");
  if (spec.inputs.size() > kMaxOperands)
    throw MalformedEquation("at most " + std::to_string(kMaxOperands) +
                            " operands are supported");

  for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
    const std::string& labels = spec.inputs[i];
    if (labels.size() != shapes[i].size())
      throw RankMismatch("operand " + std::to_string(i) + " subscript \"" + labels +
                         "\" does not match rank " + std::to_string(shapes[i].size()));
    for (std::size_t p = 0; p < labels.size(); ++p) {
      char l = labels[p];
      if (labels.find(l) != p)
        throw RepeatedLabel("label '" + std::string(1, l) + "' repeats within operand " +
                            std::to_string(i));
      std::size_t extent = shapes[i][p];
      if (extent == 0)
        throw SizeConflict("label '" + std::string(1, l) + "' has zero extent");
      auto [it, inserted] = spec.sizes.emplace(l, extent);
      if (!inserted && it->second != extent)
        throw SizeConflict("label '" + std::string(1, l) + "' bound to both " +
                           std::to_string(it->second) + " and " + std::to_string(extent));
    }
  }

  for (std::size_t p = 0; p < spec.output.size(); ++p) {
    char l = spec.output[p];
    if (spec.output.find(l) != p)
      throw RepeatedLabel("label '" + std::string(1, l) + "' repeats in the output");
    if (!spec.sizes.count(l))
      throw UnknownOutputLabel("output label '" + std::string(1, l) +
                               "' does not appear in any input");
  }

  // Contraction labels ordered by first appearance scanning inputs left to right.
  for (const std::string& labels : spec.inputs)
    for (char l : labels)
      if (spec.output.find(l) == std::string::npos &&
          spec.contraction.find(l) == std::string::npos)
        spec.contraction.push_back(l);

  return spec;
}

inline LayoutPlan plan_layout(const EinsumSpec& spec, std::size_t slot_count) {
  if (!is_pow2(slot_count))
    throw std::invalid_argument("plan_layout: slot count must be a power of two");

  LayoutPlan plan;
  plan.slot_count = slot_count;
  plan.sizes = spec.sizes;
  plan.broadcast_order = spec.contraction + spec.output;

  for (auto [label, extent] : spec.sizes) plan.padded[label] = next_pow2(extent);

  std::size_t stride = 1;
  for (std::size_t p = plan.broadcast_order.size(); p-- > 0;) {
    char l = plan.broadcast_order[p];
    plan.strides[l] = stride;
    stride *= plan.padded[l];
  }
  plan.broadcast_count = stride;
  for (char l : spec.output) plan.output_count *= plan.padded[l];

  if (plan.broadcast_count > slot_count)
    throw DoesNotFit("broadcast layout needs " + std::to_string(plan.broadcast_count) +
                     " slots but only " + std::to_string(slot_count) + " are available");

  for (const std::string& labels : spec.inputs) {
    AlignmentPlan ap;
    ap.labels = labels;
    for (char l : labels) ap.padded_shape.push_back(plan.padded[l]);
    bool suffix = labels.size() <= plan.broadcast_order.size() &&
                  plan.broadcast_order.compare(plan.broadcast_order.size() - labels.size(),
                                               labels.size(), labels) == 0;
    ap.kind = suffix ? AlignmentKind::identity : AlignmentKind::permute;
    plan.per_operand.push_back(std::move(ap));
  }
  return plan;
}

}  // namespace einslots
