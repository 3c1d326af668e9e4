// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0
//
// Direct nested-loop einsum evaluation on dense tensors. This is the ground
// truth the engine is checked against, so it deliberately shares nothing with
// the slot pipeline beyond equation validation: no packing, no padding, no
// layout planning.

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "einslots/equation.hpp"
#include "einslots/tensor.hpp"

namespace einslots {

inline Tensor naive_einsum_oracle(std::string_view equation, std::span<const Tensor> operands) {
  std::vector<std::vector<std::size_t>> shapes;
  for (const Tensor& t : operands) shapes.push_back(t.shape);
  EinsumSpec spec = parse(equation, shapes);

  std::vector<std::size_t> out_shape;
  for (char l : spec.output) out_shape.push_back(spec.sizes.at(l));
  std::vector<std::size_t> sum_shape;
  for (char l : spec.contraction) sum_shape.push_back(spec.sizes.at(l));

  // For each operand label, where its current index lives: the output index
  // vector or the contraction index vector.
  struct Source {
    bool from_output;
    std::size_t pos;
  };
  std::vector<std::vector<Source>> sources(operands.size());
  for (std::size_t op = 0; op < operands.size(); ++op) {
    for (char l : spec.inputs[op]) {
      auto out_pos = spec.output.find(l);
      if (out_pos != std::string::npos)
        sources[op].push_back({true, out_pos});
      else
        sources[op].push_back({false, spec.contraction.find(l)});
    }
  }

  Tensor out = Tensor::zeros(out_shape);
  std::size_t out_flat = 0;
  for_each_index(out_shape, [&](std::span<const std::size_t> out_idx) {
    double sum = 0.0;
    for_each_index(sum_shape, [&](std::span<const std::size_t> sum_idx) {
      double prod = 1.0;
      for (std::size_t op = 0; op < operands.size(); ++op) {
        std::size_t flat = 0, stride = 1;
        const std::vector<std::size_t>& shape = operands[op].shape;
        for (std::size_t d = shape.size(); d-- > 0;) {
          const Source& s = sources[op][d];
          flat += (s.from_output ? out_idx[s.pos] : sum_idx[s.pos]) * stride;
          stride *= shape[d];
        }
        prod *= operands[op].data[flat];
      }
      sum += prod;
    });
    out.data[out_flat++] = sum;
  });
  return out;
}

}  // namespace einslots
