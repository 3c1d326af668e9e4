// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>
#include <thread>

#include "einslots/backend.hpp"
#include "einslots/packing.hpp"

using namespace einslots;

namespace {

std::vector<double> iota(std::size_t n, double start = 0.0) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = start + static_cast<double>(i);
  return v;
}

}  // namespace

TEST_CASE("encode validates length and keeps plaintexts readable") {
  Backend b({8, 3, true});
  SlotVector zeros = b.encode(std::vector<double>(8, 0.0));
  CHECK(zeros.kind() == Kind::plain);
  CHECK(zeros.level() == 3);
  CHECK(b.decrypt(zeros) == std::vector<double>(8, 0.0));

  Tensor t({2, 2}, {1, 2, 3, 4});
  SlotVector packed = b.encode(pack(t, 8));
  CHECK(b.decrypt(packed) == std::vector<double>{1, 2, 3, 4, 0, 0, 0, 0});

  CHECK_THROWS_AS(b.encode(std::vector<double>(7, 0.0)), LengthMismatch);
}

TEST_CASE("encrypt/decrypt round-trips exactly on the reference backend") {
  Backend b({16, 2, true});
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::vector<double> v(16);
  for (double& x : v) x = value(rng);
  SlotVector ct = b.encrypt(b.encode(v));
  CHECK(ct.kind() == Kind::cipher);
  CHECK(b.decrypt(ct) == v);
}

TEST_CASE("rotate follows the slot-0 convention") {
  Backend b({4, 2, true});
  SlotVector x = b.encrypt(b.encode(std::vector<double>{0, 1, 2, 3}));
  CHECK(b.decrypt(b.rotate(x, 1)) == std::vector<double>{1, 2, 3, 0});

  Backend b8({8, 2, true});
  SlotVector y = b8.encrypt(b8.encode(std::vector<double>{1, 2, 3, 4, 0, 0, 0, 0}));
  CHECK(b8.decrypt(b8.rotate(y, -4)) == std::vector<double>{0, 0, 0, 0, 1, 2, 3, 4});

  // zero amount is a no-op and counts as zero rotations
  CHECK(b8.rotate(y, 0).id() == y.id());
  CHECK(b8.rotate(y, 8).id() == y.id());
  CHECK(b8.cost().rotations_total == 1);
}

TEST_CASE("rotations compose additively") {
  Backend b({32, 2, true});
  std::mt19937 rng(17);
  std::vector<double> v(32);
  for (double& x : v) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  SlotVector ct = b.encrypt(b.encode(v));
  std::uniform_int_distribution<std::int64_t> amount(-80, 80);
  for (int iter = 0; iter < 40; ++iter) {
    std::int64_t a = amount(rng), c = amount(rng);
    CHECK(b.decrypt(b.rotate(b.rotate(ct, a), c)) == b.decrypt(b.rotate(ct, a + c)));
  }
}

TEST_CASE("add keeps the level, multiply consumes one") {
  Backend b({4, 1, true});
  SlotVector x = b.encrypt(b.encode(std::vector<double>{1, 2, 3, 4}));
  SlotVector y = b.encrypt(b.encode(std::vector<double>{1, 1, 1, 1}));
  SlotVector s = b.add(x, y);
  CHECK(b.decrypt(s) == std::vector<double>{2, 3, 4, 5});
  CHECK(s.level() == 1);

  SlotVector p = b.mul_ct(x, y);
  CHECK(p.level() == 0);
  CHECK_THROWS_AS(b.mul_ct(p, p), LevelExhausted);
}

TEST_CASE("mul_pt by a binary mask zeroes slots and drops one level") {
  Backend b({8, 2, true});
  std::vector<double> v = iota(8, 1.0);
  std::vector<double> mask{1, 0, 1, 0, 1, 0, 1, 0};
  SlotVector ct = b.encrypt(b.encode(v));
  SlotVector result = b.mul_pt(ct, b.encode(mask));
  std::vector<double> expected(8);
  for (std::size_t i = 0; i < 8; ++i) expected[i] = v[i] * mask[i];
  CHECK(b.decrypt(result) == expected);
  CHECK(result.level() == 1);
}

TEST_CASE("operands at different levels align by dropping to the lower one") {
  Backend b({4, 3, true});
  SlotVector x = b.encrypt(b.encode(std::vector<double>{1, 2, 3, 4}));
  SlotVector ones = b.encrypt(b.encode(std::vector<double>{1, 1, 1, 1}));
  SlotVector low = b.mul_ct(x, ones);  // level 2
  SlotVector mixed = b.add(low, x);
  CHECK(mixed.level() == 2);
  SlotVector prod = b.mul_ct(low, x);
  CHECK(prod.level() == 1);
  CHECK(b.cost().levels_consumed == 2);
}

TEST_CASE("key configs match the expected cardinalities") {
  KeyConfig pow2 = KeyConfig::power_of_two(16384);
  CHECK(pow2.key_count() == 14);
  CHECK(pow2.available(1));
  CHECK(pow2.available(8192));
  CHECK_FALSE(pow2.available(3));
  CHECK_FALSE(pow2.available(16383));

  KeyConfig bsgs = KeyConfig::power_of_two_plus_bsgs(16384);
  CHECK(bsgs.key_count() == 14 + 256);
  CHECK(bsgs.available(3));       // baby step
  CHECK(bsgs.available(127));     // largest baby step
  CHECK(bsgs.available(128));     // giant step
  CHECK(bsgs.available(128 * 127));
  CHECK(bsgs.available(16383));   // negative unit baby step
  CHECK(bsgs.available(16384 - 128));
  CHECK_FALSE(bsgs.available(129));

  CHECK(KeyConfig::power_of_two(1024).key_count() == 10);
}

TEST_CASE("metered rotations decompose into available powers of two") {
  MeteredBackend b({16384, 3, true}, KeyConfig::power_of_two(16384));
  SlotVector ct = b.encrypt(b.encode(std::vector<double>(16384, 1.0)));

  b.rotate(ct, 3);  // 1 then 2
  CostReport cost = b.cost();
  CHECK(cost.rotations_total == 2);
  CHECK(cost.rotations_decomposed == 1);
  CHECK(cost.key_switches == 2);

  b.rotate(ct, 4096);
  cost = b.cost();
  CHECK(cost.rotations_total == 3);
  CHECK(cost.rotations_decomposed == 1);
}

TEST_CASE("decomposition count is the popcount of the normalized amount") {
  MeteredBackend b({256, 2, true}, KeyConfig::power_of_two(256));
  SlotVector ct = b.encrypt(b.encode(std::vector<double>(256, 1.0)));
  std::mt19937 rng(23);
  std::size_t expected = 0;
  for (int iter = 0; iter < 50; ++iter) {
    std::int64_t k = std::uniform_int_distribution<std::int64_t>(-600, 600)(rng);
    std::size_t normalized = static_cast<std::size_t>(((k % 256) + 256) % 256);
    expected += static_cast<std::size_t>(std::popcount(normalized));
    b.rotate(ct, k);
    CHECK(b.cost().rotations_total == expected);
  }
}

TEST_CASE("bsgs keys make baby and giant amounts single-hop") {
  MeteredBackend b({64, 2, true}, KeyConfig::power_of_two_plus_bsgs(64));
  SlotVector ct = b.encrypt(b.encode(std::vector<double>(64, 1.0)));
  b.rotate(ct, 3);   // baby step at n1 = 8
  b.rotate(ct, 56);  // giant step 8*7
  CHECK(b.cost().rotations_total == 2);
  CHECK(b.cost().rotations_decomposed == 0);
}

TEST_CASE("metered and reference backends agree slot for slot") {
  Backend ref({32, 4, true});
  MeteredBackend met({32, 4, true}, KeyConfig::power_of_two(32));
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> value(-1, 1);
  std::vector<double> v(32), w(32);
  for (double& x : v) x = value(rng);
  for (double& x : w) x = value(rng);

  auto run = [&](Backend& b) {
    SlotVector a = b.encrypt(b.encode(v));
    SlotVector c = b.encrypt(b.encode(w));
    SlotVector r = b.add(b.rotate(a, 5), c);
    r = b.mul_ct(r, b.rotate(c, -3));
    r = b.mul_pt(r, b.encode(w));
    return b.decrypt(r);
  };
  CHECK(run(ref) == run(met));
}

TEST_CASE("noise injection stays within the configured envelope") {
  MeteredBackend b({1024, 3, true}, KeyConfig::power_of_two(1024),
                   NoiseOptions{std::pow(2.0, -30.0), 77});
  std::mt19937 rng(13);
  std::vector<double> v(1024);
  for (double& x : v) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  SlotVector ct = b.encrypt(b.encode(v));
  std::vector<double> back = b.decrypt(ct);
  double max_err = 0.0;
  bool any_nonzero = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    max_err = std::max(max_err, std::abs(back[i] - v[i]));
    any_nonzero = any_nonzero || back[i] != v[i];
  }
  CHECK(any_nonzero);
  CHECK(max_err < 1e-4);
}

TEST_CASE("counters stay consistent under concurrent primitive calls") {
  Backend b({16, 4, false});
  SlotVector ct = b.encrypt(b.encode(std::vector<double>(16, 1.0)));
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w)
    workers.emplace_back([&b, ct] {
      for (int i = 0; i < 100; ++i) b.add(b.rotate(ct, 3), ct);
    });
  for (auto& t : workers) t.join();
  CHECK(b.cost().rotations_total == 400);
  CHECK(b.cost().adds == 400);
}

TEST_CASE("phase switching routes counters to the right bucket") {
  Backend b({8, 3, true});
  SlotVector ct = b.encrypt(b.encode(std::vector<double>(8, 1.0)));
  b.begin_phase(Phase::reduce);
  b.add(ct, b.rotate(ct, 2));
  b.begin_phase(Phase::setup);
  CostReport cost = b.cost();
  CHECK(cost.phase(Phase::reduce).rotations == 1);
  CHECK(cost.phase(Phase::reduce).adds == 1);
  CHECK(cost.phase(Phase::permute).rotations == 0);
}
