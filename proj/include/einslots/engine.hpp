// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0
//
// The full pipeline: parse -> plan -> align (BSGS or nop) -> broadcast ->
// tree-multiply -> reduce -> mask. Encrypted operands are aligned with
// homomorphic permutations; raw tensors ride along as plaintexts, aligned and
// broadcast in the clear, and enter at the multiply step.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "einslots/backend.hpp"
#include "einslots/equation.hpp"
#include "einslots/errors.hpp"
#include "einslots/linear_transform.hpp"
#include "einslots/packing.hpp"
#include "einslots/rotate_sum.hpp"
#include "einslots/tensor.hpp"

namespace einslots {

using EinsumInput = std::variant<Tensor, PackedTensor>;

// One pipeline segment of the recorded execution: which phase, which operand
// (-1 for expression-wide segments), the primitives issued, and the cost and
// level movement they caused.
struct PhaseRecord {
  Phase phase = Phase::setup;
  int operand = -1;
  std::vector<TraceOp> ops;
  CostReport delta;
  int level_after = -1;
  std::string note;
};

struct ExecutionTrace {
  std::vector<PhaseRecord> records;
  std::vector<std::uint64_t> input_ids;  // ciphertext operands, in operand order
  std::uint64_t result_id = 0;
};

struct EinsumResult {
  PackedTensor output;
  ExecutionTrace trace;
  CostReport cost;  // delta for this call
  int depth = 0;    // levels consumed by this call
};

namespace detail {

// Value of one operand at a full broadcast position, honoring zero padding.
inline double broadcast_value(const Tensor& t, std::string_view labels,
                              const std::map<char, std::size_t>& label_index) {
  std::size_t flat = 0, stride = 1;
  for (std::size_t d = labels.size(); d-- > 0;) {
    std::size_t idx = label_index.at(labels[d]);
    if (idx >= t.shape[d]) return 0.0;
    flat += idx * stride;
    stride *= t.shape[d];
  }
  return t.data[flat];
}

// Cleartext counterpart of permute + broadcast for plaintext operands: fill
// every broadcast position directly.
inline std::vector<double> materialize_broadcast(const Tensor& t, std::string_view labels,
                                                 const LayoutPlan& plan) {
  std::vector<double> slots(plan.slot_count, 0.0);
  std::vector<std::size_t> order_padded;
  for (char l : plan.broadcast_order) order_padded.push_back(plan.padded.at(l));
  std::map<char, std::size_t> label_index;
  std::size_t pos = 0;
  for_each_index(order_padded, [&](std::span<const std::size_t> idx) {
    for (std::size_t i = 0; i < idx.size(); ++i) label_index[plan.broadcast_order[i]] = idx[i];
    // Padding positions of the operand's own labels must stay zero; the
    // logical-extent check in broadcast_value handles that.
    bool in_logical = true;
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (idx[i] >= plan.sizes.at(plan.broadcast_order[i]) &&
          labels.find(plan.broadcast_order[i]) != std::string_view::npos)
        in_logical = false;
    slots[pos++] = in_logical ? broadcast_value(t, labels, label_index) : 0.0;
  });
  return slots;
}

}  // namespace detail

// Left-balanced pairwise product tree over ciphertexts: depth ceil(log2(k)).
inline SlotVector multiply_tree(Backend& backend, std::span<const SlotVector> cts) {
  if (cts.empty()) throw std::invalid_argument("multiply_tree: no operands");
  std::vector<SlotVector> level(cts.begin(), cts.end());
  while (level.size() > 1) {
    std::vector<SlotVector> next;
    for (std::size_t i = 0; i + 1 < level.size(); i += 2)
      next.push_back(backend.mul_ct(level[i], level[i + 1]));
    if (level.size() % 2 != 0) next.push_back(level.back());
    level = std::move(next);
  }
  return level.front();
}

class Engine {
 public:
  explicit Engine(Backend& backend) : backend_(backend) {}

  EinsumResult einsum(std::string_view equation, std::span<const EinsumInput> inputs) {
    std::vector<std::vector<std::size_t>> shapes;
    for (const EinsumInput& in : inputs)
      shapes.push_back(std::holds_alternative<Tensor>(in) ? std::get<Tensor>(in).shape
                                                          : std::get<PackedTensor>(in).logical_shape);
    EinsumSpec spec = parse(equation, shapes);
    LayoutPlan plan = plan_layout(spec, backend_.slots());

    EinsumResult result;
    CostReport cost_before = backend_.cost();

    int base_level = backend_.start_level();
    bool have_cipher = false;
    for (const EinsumInput& in : inputs)
      if (const auto* pt = std::get_if<PackedTensor>(&in)) {
        if (pt->vec.size() != backend_.slots())
          throw LengthMismatch("operand ciphertext uses a different slot count");
        if (pt->vec.kind() != Kind::cipher)
          throw std::invalid_argument("packed operands must be ciphertexts");
        base_level = have_cipher ? std::min(base_level, pt->vec.level()) : pt->vec.level();
        have_cipher = true;
        result.trace.input_ids.push_back(pt->vec.id());
      }

    // Each aligned operand is either a ciphertext or a cleartext vector that
    // has not been encoded yet.
    std::vector<Node> nodes;

    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const AlignmentPlan& align = plan.per_operand[i];
      if (const auto* packed = std::get_if<PackedTensor>(&inputs[i])) {
        SlotVector current = packed->vec;
        {
          Segment seg(*this, result.trace, Phase::permute, static_cast<int>(i));
          if (align.kind == AlignmentKind::permute) {
            const CachedPlan& cached = alignment_diagonals(align, plan);
            if (cached.identity) {
              seg.set_note("identity map (nop)");
            } else {
              current = apply_bsgs(backend_, current, cached.diags);
              seg.set_note("bsgs, " + std::to_string(cached.diags.diagonals.size()) + " diagonals");
            }
          } else {
            seg.set_note("layout already aligned (nop)");
          }
          seg.set_level(current.level());
        }
        {
          Segment seg(*this, result.trace, Phase::broadcast, static_cast<int>(i));
          for (char l : plan.broadcast_order)
            if (align.labels.find(l) == std::string::npos && plan.padded.at(l) > 1)
              current = broadcast_dim(backend_, current, plan.strides.at(l), plan.padded.at(l));
          seg.set_level(current.level());
        }
        nodes.push_back({current, {}});
      } else {
        const Tensor& t = std::get<Tensor>(inputs[i]);
        if (numel(pad_shape(t.shape)) > backend_.slots())
          throw DoesNotFit("plaintext operand does not fit the slot vector");
        // Free in the clear; record empty segments to keep the trace uniform.
        Segment(*this, result.trace, Phase::permute, static_cast<int>(i))
            .set_note("plaintext, aligned in the clear");
        Segment(*this, result.trace, Phase::broadcast, static_cast<int>(i))
            .set_note("plaintext, broadcast in the clear");
        nodes.push_back({std::nullopt, detail::materialize_broadcast(t, align.labels, plan)});
      }
    }

    SlotVector product;
    {
      Segment seg(*this, result.trace, Phase::multiply, -1);
      while (nodes.size() > 1) {
        std::vector<Node> next;
        for (std::size_t i = 0; i + 1 < nodes.size(); i += 2)
          next.push_back(combine(nodes[i], nodes[i + 1]));
        if (nodes.size() % 2 != 0) next.push_back(std::move(nodes.back()));
        nodes = std::move(next);
      }
      if (nodes.front().sv) {
        product = *nodes.front().sv;
      } else {
        // Every operand was a plaintext; encrypt the combined product so the
        // result is a ciphertext like any other.
        product = backend_.encrypt(backend_.encode(nodes.front().raw));
      }
      seg.set_level(product.level());
    }

    {
      Segment seg(*this, result.trace, Phase::reduce, -1);
      std::vector<std::pair<std::size_t, std::size_t>> dims;
      for (char l : spec.contraction)
        if (plan.padded.at(l) > 1) dims.emplace_back(plan.strides.at(l), plan.padded.at(l));
      product = reduce_dims(backend_, product, dims);
      seg.set_level(product.level());
    }

    {
      Segment seg(*this, result.trace, Phase::mask, -1);
      product = mask_top(backend_, product, plan.output_count);
      seg.set_note("count=" + std::to_string(plan.output_count));
      seg.set_level(product.level());
    }
    backend_.begin_phase(Phase::setup);

    result.output.logical_shape.clear();
    result.output.padded_shape.clear();
    for (char l : spec.output) {
      result.output.logical_shape.push_back(spec.sizes.at(l));
      result.output.padded_shape.push_back(plan.padded.at(l));
    }
    result.output.vec = product;
    result.trace.result_id = product.id();
    result.cost = backend_.cost() - cost_before;
    result.depth = base_level - product.level();
    return result;
  }

 private:
  struct CachedPlan {
    bool identity = false;
    DiagonalSet diags;
  };

  // Scoped phase segment: switches the backend phase and collects the ops and
  // cost delta issued while alive.
  class Segment {
   public:
    Segment(Engine& engine, ExecutionTrace& trace, Phase phase, int operand)
        : engine_(engine), trace_(trace) {
      record_.phase = phase;
      record_.operand = operand;
      mark_ = engine_.backend_.op_count();
      before_ = engine_.backend_.cost();
      engine_.backend_.begin_phase(phase);
    }
    Segment& set_note(std::string note) {
      record_.note = std::move(note);
      return *this;
    }
    Segment& set_level(int level) {
      record_.level_after = level;
      return *this;
    }
    ~Segment() {
      record_.ops = engine_.backend_.ops_since(mark_);
      record_.delta = engine_.backend_.cost() - before_;
      trace_.records.push_back(std::move(record_));
    }

   private:
    Engine& engine_;
    ExecutionTrace& trace_;
    PhaseRecord record_;
    std::size_t mark_ = 0;
    CostReport before_;
  };

  struct Node {
    std::optional<SlotVector> sv;
    std::vector<double> raw;
  };

  Node combine(Node& a, Node& b) {
    if (a.sv && b.sv) return {backend_.mul_ct(*a.sv, *b.sv), {}};
    if (a.sv && !b.sv) return {backend_.mul_pt(*a.sv, backend_.encode(b.raw)), {}};
    if (!a.sv && b.sv) return {backend_.mul_pt(*b.sv, backend_.encode(a.raw)), {}};
    // plain * plain stays in the clear
    std::vector<double> prod(a.raw.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = a.raw[i] * b.raw[i];
    return {std::nullopt, std::move(prod)};
  }

  const CachedPlan& alignment_diagonals(const AlignmentPlan& align, const LayoutPlan& plan) {
    // The permutation is determined by the operand's labels with their logical
    // extents and target strides, the operand's padded shape, and S.
    std::ostringstream key;
    for (std::size_t i = 0; i < align.labels.size(); ++i)
      key << align.labels[i] << plan.sizes.at(align.labels[i]) << ':'
          << plan.strides.at(align.labels[i]) << ':' << align.padded_shape[i] << '|';
    key << '@' << plan.slot_count;
    auto it = cache_.find(key.str());
    if (it == cache_.end()) {
      PermutationPlan perm = build_expansion_permutation(align.labels, align.padded_shape, plan);
      CachedPlan cached;
      cached.identity = is_identity(perm);
      if (!cached.identity) cached.diags = extract_diagonals(perm);
      it = cache_.emplace(key.str(), std::move(cached)).first;
    }
    return it->second;
  }

  Backend& backend_;
  std::map<std::string, CachedPlan> cache_;
};

inline EinsumResult einsum(Backend& backend, std::string_view equation,
                           std::span<const EinsumInput> inputs) {
  return Engine(backend).einsum(equation, inputs);
}

// Re-issue a recorded trace against another backend. `env` maps recorded
// handle ids to live handles for any inputs created outside the trace.
inline SlotVector replay_trace(Backend& backend, const ExecutionTrace& trace,
                               std::map<std::uint64_t, SlotVector> env = {}) {
  auto lookup = [&](std::uint64_t id) -> const SlotVector& {
    auto it = env.find(id);
    if (it == env.end()) throw std::invalid_argument("replay_trace: unknown handle id");
    return it->second;
  };
  for (const PhaseRecord& rec : trace.records) {
    backend.begin_phase(rec.phase);
    for (const TraceOp& op : rec.ops) {
      switch (op.kind) {
        case OpKind::encode:
          env.emplace(op.result, backend.encode(*op.payload));
          break;
        case OpKind::encrypt:
          env.emplace(op.result, backend.encrypt(lookup(op.a)));
          break;
        case OpKind::rotate:
          env.emplace(op.result, backend.rotate(lookup(op.a), op.amount));
          break;
        case OpKind::add:
          env.emplace(op.result, backend.add(lookup(op.a), lookup(op.b)));
          break;
        case OpKind::mul_ct:
          env.emplace(op.result, backend.mul_ct(lookup(op.a), lookup(op.b)));
          break;
        case OpKind::mul_pt:
          env.emplace(op.result, backend.mul_pt(lookup(op.a), lookup(op.b)));
          break;
      }
    }
  }
  backend.begin_phase(Phase::setup);
  return lookup(trace.result_id);
}

}  // namespace einslots
