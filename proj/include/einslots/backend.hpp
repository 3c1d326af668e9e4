// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0
//
// The slot-vector virtual machine. Everything above this layer manipulates
// encrypted data exclusively through encode/encrypt/decrypt, cyclic rotate,
// SIMD add and SIMD multiply. Backend implements the exact reference
// semantics; MeteredBackend adds rotation-key modeling, key-switch and
// decomposition accounting, and optional noise injection.

#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "einslots/equation.hpp"
#include "einslots/errors.hpp"

namespace einslots {

enum class Kind { plain, cipher };

enum class Phase { setup, permute, broadcast, multiply, reduce, mask };
constexpr std::size_t kPhaseCount = 6;

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::setup: return "setup";
    case Phase::permute: return "permute";
    case Phase::broadcast: return "broadcast";
    case Phase::multiply: return "multiply";
    case Phase::reduce: return "reduce";
    case Phase::mask: return "mask";
  }
  return "?";
}

// Immutable handle to a backend-owned vector of S slots. The slot contents are
// private to the backend; levels only ever decrease, and only via multiplies.
class SlotVector {
 public:
  SlotVector() = default;

  std::uint64_t id() const { return id_; }
  Kind kind() const { return kind_; }
  int level() const { return level_; }
  std::size_t size() const { return slots_ ? slots_->size() : 0; }
  bool valid() const { return slots_ != nullptr; }

 private:
  friend class Backend;
  SlotVector(std::uint64_t id, Kind kind, int level,
             std::shared_ptr<const std::vector<double>> slots)
      : id_(id), kind_(kind), level_(level), slots_(std::move(slots)) {}

  std::uint64_t id_ = 0;
  Kind kind_ = Kind::plain;
  int level_ = 0;
  std::shared_ptr<const std::vector<double>> slots_;
};

enum class KeyMode { pow2, pow2_bsgs };

inline const char* key_mode_name(KeyMode m) {
  return m == KeyMode::pow2 ? "pow2" : "pow2+bsgs";
}

struct BsgsSplit {
  std::size_t n1;  // baby-step count
  std::size_t n2;  // giant-step count
};

// n1 = 2^ceil(log2(S)/2), n2 = S / n1; equal halves when log2(S) is even.
inline BsgsSplit bsgs_split(std::size_t slots) {
  std::size_t log = ilog2(slots);
  std::size_t n1 = std::size_t{1} << ((log + 1) / 2);
  return {n1, slots / n1};
}

// The set of rotation amounts directly backed by key material. Amounts are
// normalized to [0, S); a requested amount k and k - S are the same rotation.
// pow2 holds one key per power-of-two magnitude (log2(S) keys). pow2_bsgs adds
// the baby steps {1..n1-1}, the giant steps {n1*j : 1 <= j < n2}, and the two
// negative unit steps S-1 and S-n1, for n1 + n2 additional keys.
class KeyConfig {
 public:
  static KeyConfig power_of_two(std::size_t slots) {
    KeyConfig cfg(KeyMode::pow2, slots);
    for (std::size_t t = 0; (std::size_t{1} << t) < slots; ++t)
      cfg.amounts_.insert(std::size_t{1} << t);
    cfg.key_count_ = ilog2(slots);
    return cfg;
  }

  static KeyConfig power_of_two_plus_bsgs(std::size_t slots) {
    KeyConfig cfg = power_of_two(slots);
    cfg.mode_ = KeyMode::pow2_bsgs;
    auto [n1, n2] = bsgs_split(slots);
    for (std::size_t i = 1; i < n1; ++i) cfg.amounts_.insert(i);
    for (std::size_t j = 1; j < n2; ++j) cfg.amounts_.insert(n1 * j);
    if (slots > 1) cfg.amounts_.insert(slots - 1);
    if (slots > n1) cfg.amounts_.insert(slots - n1);
    cfg.key_count_ = ilog2(slots) + n1 + n2;
    return cfg;
  }

  static KeyConfig make(KeyMode mode, std::size_t slots) {
    return mode == KeyMode::pow2 ? power_of_two(slots) : power_of_two_plus_bsgs(slots);
  }

  KeyMode mode() const { return mode_; }
  std::size_t slots() const { return slots_; }
  bool available(std::size_t amount) const { return amounts_.count(amount % slots_) != 0; }
  std::size_t key_count() const { return key_count_; }
  const std::set<std::size_t>& amounts() const { return amounts_; }

 private:
  KeyConfig(KeyMode mode, std::size_t slots) : mode_(mode), slots_(slots) {
    if (!is_pow2(slots)) throw std::invalid_argument("KeyConfig: slots must be a power of two");
  }

  KeyMode mode_;
  std::size_t slots_;
  std::set<std::size_t> amounts_;
  std::size_t key_count_ = 0;
};

struct PhaseCounters {
  std::size_t rotations = 0;
  std::size_t key_switches = 0;
  std::size_t ct_ct_mults = 0;
  std::size_t pt_ct_mults = 0;
  std::size_t adds = 0;
  std::size_t masks = 0;

  PhaseCounters operator-(const PhaseCounters& o) const {
    return {rotations - o.rotations, key_switches - o.key_switches,
            ct_ct_mults - o.ct_ct_mults, pt_ct_mults - o.pt_ct_mults,
            adds - o.adds, masks - o.masks};
  }
};

struct CostReport {
  std::size_t rotations_total = 0;
  std::size_t rotations_decomposed = 0;  // extra hops beyond one per requested rotation
  std::size_t key_switches = 0;
  std::size_t hoisted_decompositions = 0;  // decompose operations saved by hoisting
  std::size_t ct_ct_mults = 0;
  std::size_t pt_ct_mults = 0;
  std::size_t adds = 0;
  std::size_t masks = 0;
  std::size_t levels_consumed = 0;
  std::array<PhaseCounters, kPhaseCount> per_phase{};

  const PhaseCounters& phase(Phase p) const { return per_phase[static_cast<std::size_t>(p)]; }

  CostReport operator-(const CostReport& o) const {
    CostReport d;
    d.rotations_total = rotations_total - o.rotations_total;
    d.rotations_decomposed = rotations_decomposed - o.rotations_decomposed;
    d.key_switches = key_switches - o.key_switches;
    d.hoisted_decompositions = hoisted_decompositions - o.hoisted_decompositions;
    d.ct_ct_mults = ct_ct_mults - o.ct_ct_mults;
    d.pt_ct_mults = pt_ct_mults - o.pt_ct_mults;
    d.adds = adds - o.adds;
    d.masks = masks - o.masks;
    d.levels_consumed = levels_consumed - o.levels_consumed;
    for (std::size_t i = 0; i < kPhaseCount; ++i) d.per_phase[i] = per_phase[i] - o.per_phase[i];
    return d;
  }
};

enum class OpKind { encode, encrypt, rotate, add, mul_ct, mul_pt };

inline const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::encode: return "encode";
    case OpKind::encrypt: return "encrypt";
    case OpKind::rotate: return "rotate";
    case OpKind::add: return "add";
    case OpKind::mul_ct: return "mul_ct";
    case OpKind::mul_pt: return "mul_pt";
  }
  return "?";
}

// One recorded primitive. Encode ops keep a shared alias of their payload so a
// trace can be replayed against a fresh backend.
struct TraceOp {
  OpKind kind = OpKind::encode;
  Phase phase = Phase::setup;
  std::uint64_t result = 0;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::int64_t amount = 0;  // rotate only; the requested (signed) amount
  int level_after = 0;
  std::shared_ptr<const std::vector<double>> payload;  // encode only
};

struct BackendOptions {
  std::size_t slots = 16384;
  int start_level = 4;
  bool record_trace = true;
};

// Reference backend: exact double-precision slot semantics with level
// bookkeeping and basic operation counts. Handles are immutable; counters and
// the op log are guarded by a mutex so distinct handles may be used from
// multiple threads.
class Backend {
 public:
  explicit Backend(BackendOptions opts = {}) : opts_(opts) {
    if (!is_pow2(opts.slots)) throw std::invalid_argument("Backend: slots must be a power of two");
    if (opts.start_level < 0) throw std::invalid_argument("Backend: negative start level");
  }
  virtual ~Backend() = default;

  virtual std::string_view name() const { return "reference"; }

  std::size_t slots() const { return opts_.slots; }
  int start_level() const { return opts_.start_level; }

  SlotVector encode(std::span<const double> values) {
    if (values.size() != opts_.slots)
      throw LengthMismatch("encode expects " + std::to_string(opts_.slots) +
                           " values, got " + std::to_string(values.size()));
    auto data = std::make_shared<std::vector<double>>(values.begin(), values.end());
    std::lock_guard lock(mu_);
    SlotVector v(next_id_++, Kind::plain, opts_.start_level, data);
    log_op({OpKind::encode, phase_, v.id(), 0, 0, 0, v.level(), data});
    return v;
  }

  SlotVector encrypt(const SlotVector& plain) {
    require(plain, Kind::plain, "encrypt");
    auto data = std::make_shared<std::vector<double>>(*plain.slots_);
    std::lock_guard lock(mu_);
    apply_noise(*data);
    SlotVector v(next_id_++, Kind::cipher, plain.level(), data);
    log_op({OpKind::encrypt, phase_, v.id(), plain.id(), 0, 0, v.level(), nullptr});
    return v;
  }

  // Plaintexts are readable; ciphertexts decrypt to their slot contents.
  std::vector<double> decrypt(const SlotVector& v) const {
    if (!v.valid()) throw std::invalid_argument("decrypt: empty handle");
    return *v.slots_;
  }

  // result[i] = x[(i + k) mod S]; positive k rotates toward slot 0. A zero
  // amount is a no-op and is not counted or logged.
  SlotVector rotate(const SlotVector& x, std::int64_t k) {
    require(x, Kind::cipher, "rotate");
    std::size_t s = opts_.slots;
    std::size_t amount = normalize(k);
    if (amount == 0) return x;
    auto data = std::make_shared<std::vector<double>>(s);
    const std::vector<double>& in = *x.slots_;
    for (std::size_t i = 0; i < s; ++i) (*data)[i] = in[(i + amount) % s];
    std::lock_guard lock(mu_);
    account_rotation(amount);
    SlotVector v(next_id_++, Kind::cipher, x.level(), data);
    log_op({OpKind::rotate, phase_, v.id(), x.id(), 0, k, v.level(), nullptr});
    return v;
  }

  // Slotwise sum. Operands at different levels align by dropping the higher
  // one (free mod-drop). Level is unchanged.
  SlotVector add(const SlotVector& a, const SlotVector& b) {
    check_pair(a, b, "add");
    int level = std::min(a.level(), b.level());
    auto data = std::make_shared<std::vector<double>>(opts_.slots);
    for (std::size_t i = 0; i < opts_.slots; ++i) (*data)[i] = (*a.slots_)[i] + (*b.slots_)[i];
    Kind kind = (a.kind() == Kind::cipher || b.kind() == Kind::cipher) ? Kind::cipher : Kind::plain;
    std::lock_guard lock(mu_);
    cost_.adds += 1;
    bump(phase_).adds += 1;
    SlotVector v(next_id_++, kind, level, data);
    log_op({OpKind::add, phase_, v.id(), a.id(), b.id(), 0, v.level(), nullptr});
    return v;
  }

  SlotVector mul_ct(const SlotVector& a, const SlotVector& b) {
    check_pair(a, b, "mul_ct");
    require(a, Kind::cipher, "mul_ct");
    require(b, Kind::cipher, "mul_ct");
    return mul_impl(a, b, OpKind::mul_ct);
  }

  SlotVector mul_pt(const SlotVector& x, const SlotVector& plain) {
    check_pair(x, plain, "mul_pt");
    require(x, Kind::cipher, "mul_pt");
    require(plain, Kind::plain, "mul_pt");
    return mul_impl(x, plain, OpKind::mul_pt);
  }

  void begin_phase(Phase p) {
    std::lock_guard lock(mu_);
    phase_ = p;
  }
  Phase current_phase() const {
    std::lock_guard lock(mu_);
    return phase_;
  }

  void note_mask() {
    std::lock_guard lock(mu_);
    cost_.masks += 1;
    bump(phase_).masks += 1;
  }

  // Hoisting is cost accounting only; the reference backend ignores it.
  virtual void note_hoisted_baby_steps(std::size_t /*saved*/) {}

  CostReport cost() const {
    std::lock_guard lock(mu_);
    return cost_;
  }

  std::size_t op_count() const {
    std::lock_guard lock(mu_);
    return ops_.size();
  }

  std::vector<TraceOp> ops_since(std::size_t mark) const {
    std::lock_guard lock(mu_);
    if (mark >= ops_.size()) return {};
    return std::vector<TraceOp>(ops_.begin() + static_cast<std::ptrdiff_t>(mark), ops_.end());
  }

 protected:
  std::size_t normalize(std::int64_t k) const {
    auto s = static_cast<std::int64_t>(opts_.slots);
    std::int64_t m = k % s;
    if (m < 0) m += s;
    return static_cast<std::size_t>(m);
  }

  // Counting policy for one requested rotation of `amount` slots; called with
  // the accounting mutex held.
  virtual void account_rotation(std::size_t /*amount*/) {
    cost_.rotations_total += 1;
    bump(phase_).rotations += 1;
  }

  // Noise hook, called with the mutex held; the reference backend is exact.
  virtual void apply_noise(std::vector<double>& /*slots*/) {}

  CostReport cost_;        // guarded by mu_
  Phase phase_ = Phase::setup;  // guarded by mu_

  PhaseCounters& bump(Phase p) { return cost_.per_phase[static_cast<std::size_t>(p)]; }

  mutable std::mutex mu_;

 private:
  void require(const SlotVector& v, Kind kind, const char* who) const {
    if (!v.valid()) throw std::invalid_argument(std::string(who) + ": empty handle");
    if (v.size() != opts_.slots)
      throw LengthMismatch(std::string(who) + ": handle from a different slot count");
    if (v.kind() != kind)
      throw std::invalid_argument(std::string(who) + ": expected a " +
                                  (kind == Kind::cipher ? "ciphertext" : "plaintext"));
  }

  void check_pair(const SlotVector& a, const SlotVector& b, const char* who) const {
    if (!a.valid() || !b.valid()) throw std::invalid_argument(std::string(who) + ": empty handle");
    if (a.size() != opts_.slots || b.size() != opts_.slots)
      throw LengthMismatch(std::string(who) + ": slot count mismatch");
  }

  SlotVector mul_impl(const SlotVector& a, const SlotVector& b, OpKind op) {
    int level = std::min(a.level(), b.level());
    if (level <= 0)
      throw LevelExhausted("multiply requested at level 0; bootstrapping is not available");
    auto data = std::make_shared<std::vector<double>>(opts_.slots);
    for (std::size_t i = 0; i < opts_.slots; ++i) (*data)[i] = (*a.slots_)[i] * (*b.slots_)[i];
    std::lock_guard lock(mu_);
    apply_noise(*data);
    if (op == OpKind::mul_ct) {
      cost_.ct_ct_mults += 1;
      bump(phase_).ct_ct_mults += 1;
    } else {
      cost_.pt_ct_mults += 1;
      bump(phase_).pt_ct_mults += 1;
    }
    SlotVector v(next_id_++, Kind::cipher, level - 1, data);
    if (v.level() < min_level_seen_) {
      min_level_seen_ = v.level();
      cost_.levels_consumed = static_cast<std::size_t>(opts_.start_level - min_level_seen_);
    }
    log_op({op, phase_, v.id(), a.id(), b.id(), 0, v.level(), nullptr});
    return v;
  }

  void log_op(TraceOp op) {
    if (opts_.record_trace) ops_.push_back(std::move(op));
  }

  BackendOptions opts_;
  std::uint64_t next_id_ = 1;
  int min_level_seen_ = 1 << 20;
  std::vector<TraceOp> ops_;
};

struct NoiseOptions {
  double stddev = 0.0;  // zero disables injection
  std::uint64_t seed = 0x6e015e;
};

// FHE-model backend: identical slot values (noise off), plus rotation-key
// bookkeeping. A rotation whose amount has no key decomposes into the
// available power-of-two amounts (binary decomposition of k mod S) and every
// hop is counted. Gaussian noise, when enabled, is injected at encrypt and
// after each multiply.
class MeteredBackend final : public Backend {
 public:
  MeteredBackend(BackendOptions opts, KeyConfig keys, NoiseOptions noise = {})
      : Backend(opts), keys_(std::move(keys)), noise_(noise), rng_state_(noise.seed) {
    if (keys_.slots() != opts.slots)
      throw std::invalid_argument("MeteredBackend: key config built for a different slot count");
  }

  std::string_view name() const override { return "metered"; }

  const KeyConfig& keys() const { return keys_; }

  void note_hoisted_baby_steps(std::size_t saved) override {
    if (keys_.mode() != KeyMode::pow2_bsgs) return;  // hoisting needs the BSGS keys
    std::lock_guard lock(mu_);
    cost_.hoisted_decompositions += saved;
  }

 protected:
  void account_rotation(std::size_t amount) override {
    std::size_t hops =
        keys_.available(amount) ? 1 : static_cast<std::size_t>(std::popcount(amount));
    cost_.rotations_total += hops;
    cost_.rotations_decomposed += hops - 1;
    cost_.key_switches += hops;
    bump(phase_).rotations += hops;
    bump(phase_).key_switches += hops;
  }

  void apply_noise(std::vector<double>& slots) override {
    if (noise_.stddev <= 0.0) return;
    for (double& v : slots) v += noise_.stddev * gaussian();
  }

 private:
  // splitmix64 + Box-Muller; deterministic across platforms.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.141592653589793238462643 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double uniform01() {
    std::uint64_t z = (rng_state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }

  KeyConfig keys_;
  NoiseOptions noise_;
  std::uint64_t rng_state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace einslots
