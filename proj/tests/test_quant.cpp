#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <vector>

#include "pacq/half.hpp"
#include "pacq/pack.hpp"
#include "pacq/quant.hpp"
#include "pacq/rng.hpp"
#include "pacq/weightfile.hpp"

using namespace pacq;
namespace h = pacq::half;

TEST_CASE("rtn: single group hand case") {
  // scale = 0.7/7 = 0.1; 0.35/0.1 = 3.5 rounds to even -> 4.
  WeightMatrix w{{0.7, -0.7, 0.35, 0.0}, 1, 4};
  auto q = rtn_quantize(w, 4, {1, 4});
  REQUIRE(q.scales.size() == 1);
  REQUIRE(h::decode(q.scales[0]) == Catch::Approx(0.1).epsilon(1e-3));
  REQUIRE(q.values == std::vector<int>{7, -7, 4, 0});
}

TEST_CASE("rtn: all-zero group") {
  WeightMatrix w{std::vector<double>(16, 0.0), 4, 4};
  auto q = rtn_quantize(w, 4, {4, 4});
  REQUIRE(q.scales.size() == 1);
  REQUIRE(q.scales[0] == h::join(0, 1, 0));  // smallest positive normal
  for (int v : q.values) REQUIRE(v == 0);
  auto dq = dequantize(q);
  for (auto b : dq) REQUIRE(h::is_zero(b));
}

TEST_CASE("rtn: exact recovery at the fixed point") {
  // w = q*s with s exactly representable and the max element at qmax*s.
  double s = 0.125;
  std::vector<int> qv = {7, -3, 0, 5, -6, 2, 1, -7};
  WeightMatrix w;
  w.k = 2;
  w.n = 4;
  for (int v : qv) w.data.push_back(v * s);
  auto q = rtn_quantize(w, 4, {2, 4});
  REQUIRE(h::decode(q.scales[0]) == Catch::Approx(s));
  for (std::size_t i = 0; i < qv.size(); ++i) REQUIRE(q.values[i] == qv[i]);
  auto dq = dequantize(q);
  for (std::size_t i = 0; i < qv.size(); ++i)
    REQUIRE(h::decode(dq[i]) == Catch::Approx(w.data[i]).margin(1e-4));
}

TEST_CASE("rtn: error bound on random matrices") {
  SplitMix64 rng(4242);
  for (int bits : {4, 2}) {
    WeightMatrix w;
    w.k = 32;
    w.n = 16;
    for (int i = 0; i < w.k * w.n; ++i) w.data.push_back(rng.uniform(-1.5, 1.5));
    auto q = rtn_quantize(w, bits, {8, 4});
    auto dq = dequantize(q);
    for (int ki = 0; ki < w.k; ++ki)
      for (int ni = 0; ni < w.n; ++ni) {
        double s = h::decode(q.scale_at(ki, ni));
        double got = h::decode(dq[static_cast<std::size_t>(ki) * w.n + ni]);
        double orig = w.at(ki, ni);
        // Half a quantization step plus the FP16 representation error of
        // the product q*s (half an ulp of the product magnitude).
        double ulp = std::ldexp(1.0, std::max(-24, std::ilogb(std::abs(got) + 1e-30) - 10));
        REQUIRE(std::abs(got - orig) <= s / 2 + ulp);
      }
  }
}

TEST_CASE("rtn: group accounting") {
  SplitMix64 rng(7);
  WeightMatrix w;
  w.k = 128;
  w.n = 128;
  for (int i = 0; i < 128 * 128; ++i) w.data.push_back(rng.uniform(-1, 1));
  auto qa = rtn_quantize(w, 4, {32, 4});
  REQUIRE(qa.scales.size() == (128 / 32) * (128 / 4));  // 4 x 32 = 128
  auto qb = rtn_quantize(w, 4, {128, 1});  // g128
  REQUIRE(qb.scales.size() == 128);
  REQUIRE(qa.scales != qb.scales);
  // gk = group size with gn = 1 must reproduce the 1-D grouping exactly.
  auto qc = rtn_quantize(w, 4, {128, 1});
  REQUIRE(qb.scales == qc.scales);
  REQUIRE(qb.values == qc.values);
}

TEST_CASE("rtn: rejects bad shapes") {
  WeightMatrix w{std::vector<double>(12, 0.5), 3, 4};
  REQUIRE_THROWS_AS(rtn_quantize(w, 4, {2, 4}), std::invalid_argument);
  REQUIRE_THROWS_AS(rtn_quantize(w, 3, {3, 4}), std::invalid_argument);
}

TEST_CASE("dequantize directed values") {
  QuantizedWeights q;
  q.k = 1;
  q.n = 3;
  q.bits = 4;
  q.group = {1, 3};
  q.values = {7, 0, -8};
  q.scales = {h::encode(0.1)};
  auto dq = dequantize(q);
  REQUIRE(dq[0] == h::mul(h::from_int(7), h::encode(0.1)));
  REQUIRE(std::abs(h::decode(dq[0]) - 0.7) < 1e-3);
  REQUIRE(h::is_zero(dq[1]));
  QuantizedWeights q2 = q;
  q2.scales = {h::encode(1.0)};
  REQUIRE(h::decode(dequantize(q2)[2]) == -8.0);
}

TEST_CASE("pack: directed nibble layout") {
  int vals[] = {-8, 0, 3, 7};
  REQUIRE(pack_values(vals, 4) == 0xFB80);
  int v2[] = {-2, -1, 0, 1, -2, -1, 0, 1};
  std::uint16_t raw = pack_values(v2, 2);
  for (int i = 0; i < 8; ++i) REQUIRE(unpack_biased(raw, 2, i) == static_cast<unsigned>(i % 4));
}

TEST_CASE("pack/unpack round-trip over every raw word") {
  for (int bits : {4, 2}) {
    int count = 16 / bits;
    for (std::uint32_t raw = 0; raw <= 0xFFFF; ++raw) {
      std::vector<int> vals(count);
      for (int i = 0; i < count; ++i)
        vals[i] = unpack_value(static_cast<std::uint16_t>(raw), bits, i);
      REQUIRE(pack_values(vals.data(), bits) == raw);
    }
  }
}

TEST_CASE("pack matrix: both dims, origins, and round-trip") {
  SplitMix64 rng(99);
  std::vector<int> vals(16 * 8);
  for (auto& v : vals) v = rng.uniform_int(-8, 7);
  for (PackDim dim : {PackDim::K, PackDim::N}) {
    auto pm = pack_matrix(vals, 16, 8, pack_spec_for(4, dim));
    REQUIRE(unpack_matrix(pm) == vals);
    auto w = pm.at(1, 1);
    if (dim == PackDim::N) {
      REQUIRE(w.origin_k == 1);
      REQUIRE(w.origin_n == 4);
    } else {
      REQUIRE(w.origin_k == 4);
      REQUIRE(w.origin_n == 1);
    }
  }
  // Non-divisible extents are an error, not padded.
  std::vector<int> bad(10 * 6);
  REQUIRE_THROWS_AS(pack_matrix(bad, 10, 6, pack_spec_for(4, PackDim::K)),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(pack_matrix(bad, 10, 6, pack_spec_for(4, PackDim::N)),
                    std::invalid_argument);
}

TEST_CASE("weight file round-trip") {
  SplitMix64 rng(31337);
  WeightMatrix w;
  w.k = 32;
  w.n = 16;
  for (int i = 0; i < w.k * w.n; ++i) w.data.push_back(rng.uniform(-2, 2));
  for (int bits : {4, 2}) {
    for (PackDim dim : {PackDim::K, PackDim::N}) {
      auto q = rtn_quantize(w, bits, {8, 4});
      std::string path = "wf_test.pqw";
      save_weights(path, q, dim);
      auto f = load_weights(path);
      REQUIRE(f.pack_dim == dim);
      REQUIRE(f.weights.bits == bits);
      REQUIRE(f.weights.k == q.k);
      REQUIRE(f.weights.n == q.n);
      REQUIRE(f.weights.group.gk == q.group.gk);
      REQUIRE(f.weights.group.gn == q.group.gn);
      REQUIRE(f.weights.scales == q.scales);
      REQUIRE(f.weights.values == q.values);
      std::remove(path.c_str());
    }
  }
}
