#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <vector>

#include "pacq/half.hpp"
#include "pacq/pack.hpp"
#include "pacq/pmul.hpp"
#include "pacq/rng.hpp"

using namespace pacq;
namespace h = pacq::half;
namespace pm = pacq::pmul;

namespace {

PackedWord make_word(std::vector<int> vals, PackDim dim = PackDim::N) {
  int bits = 16 / static_cast<int>(vals.size());
  PackedWord w;
  w.raw = pack_values(vals.data(), bits);
  w.spec = PackSpec{static_cast<int>(vals.size()), dim};
  return w;
}

// Independent oracle for the fused correction: the plain dequantized dot
// product sum_k a_k * b_k * scale over exact integers, rounded exactly once.
// No biasing, no side accumulator, no correction step.
h::bits_t oracle_scaled_dot(const std::vector<h::bits_t>& a,
                            const std::vector<int>& b, h::bits_t scale) {
  __int128 acc = 0;  // scale 2^-24
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += pm::fixed24(a[i]) * static_cast<__int128>(b[i]);
  auto ds = h::decompose(scale);
  bool sign = (acc < 0) != (ds.sign != 0);
  unsigned __int128 mag =
      acc < 0 ? static_cast<unsigned __int128>(-acc) : static_cast<unsigned __int128>(acc);
  return h::round_from_wide(sign, mag * ds.sig, ds.exp - 34);
}

}  // namespace

TEST_CASE("biased weight encoding") {
  // INT4: B + 1032 with the fixed exponent field 11001.
  REQUIRE(pm::encode_biased_weight(-8, 4) == h::join(0, 0b11001, 0));
  REQUIRE(h::decode(pm::encode_biased_weight(-8, 4)) == 1024.0);
  REQUIRE(pm::encode_biased_weight(7, 4) == h::join(0, 0b11001, 0b0000001111));
  REQUIRE(h::decode(pm::encode_biased_weight(7, 4)) == 1039.0);
  // INT2: B + 1026.
  REQUIRE(pm::encode_biased_weight(1, 2) == h::join(0, 0b11001, 0b0000000011));
  REQUIRE(h::decode(pm::encode_biased_weight(1, 2)) == 1027.0);
  REQUIRE(h::decode(pm::encode_biased_weight(-2, 2)) == 1024.0);
  for (int b = -8; b <= 7; ++b)
    REQUIRE(h::decode(pm::encode_biased_weight(b, 4)) == 1032.0 + b);
  REQUIRE_THROWS_AS(pm::encode_biased_weight(8, 4), std::domain_error);
  REQUIRE_THROWS_AS(pm::encode_biased_weight(-9, 4), std::domain_error);
  REQUIRE_THROWS_AS(pm::encode_biased_weight(2, 2), std::domain_error);
  REQUIRE_THROWS_AS(pm::encode_biased_weight(0, 3), std::invalid_argument);
}

TEST_CASE("offset constants") {
  REQUIRE(pm::offset_constant(4) == 1032);
  REQUIRE(pm::offset_constant(2) == 1026);
}

TEST_CASE("parallel multiply: unit activation") {
  auto w = make_word({-8, 0, 3, 7});
  REQUIRE(w.raw == 0xFB80);  // nibbles [0, 8, 11, 15], element 0 in low bits
  auto p = pm::parallel_fpint_mul(h::encode(1.0), w);
  REQUIRE(p.lane_count == 4);
  REQUIRE(h::decode(p.lanes[0]) == 1024.0);
  REQUIRE(h::decode(p.lanes[1]) == 1032.0);
  REQUIRE(h::decode(p.lanes[2]) == 1035.0);
  REQUIRE(h::decode(p.lanes[3]) == 1039.0);
}

TEST_CASE("parallel multiply: zero bypass and domain errors") {
  auto w = make_word({1, -2, 5, -7});
  auto p = pm::parallel_fpint_mul(h::kPosZero, w);
  for (int i = 0; i < 4; ++i) REQUIRE(p.lanes[i] == h::kPosZero);
  auto q = pm::parallel_fpint_mul(h::kNegZero, w);
  for (int i = 0; i < 4; ++i) REQUIRE(q.lanes[i] == h::kNegZero);
  REQUIRE_THROWS_AS(pm::parallel_fpint_mul(h::join(0, 0, 17), w),
                    std::domain_error);  // subnormal
  REQUIRE_THROWS_AS(pm::parallel_fpint_mul(h::kPosInf, w), std::domain_error);
  REQUIRE_THROWS_AS(pm::parallel_fpint_mul(h::kQuietNan, w), std::domain_error);
}

TEST_CASE("parallel multiply: carry/normalization stress lane") {
  // Largest mantissa times the largest biased weight crosses 2.0 and must
  // still match the reference multiplier bit for bit.
  h::bits_t a = h::join(0, 15, 0x3FF);  // 1.9990234375
  auto w = make_word({7, 7, 7, 7});
  auto p = pm::parallel_fpint_mul(a, w);
  auto want = h::mul(a, h::encode(1039.0));
  for (int i = 0; i < 4; ++i) REQUIRE(p.lanes[i] == want);
  REQUIRE(p.carry_events == 4);
}

TEST_CASE("parallel multiply: shared sign and bounded exponent drift") {
  SplitMix64 rng(11);
  for (int iter = 0; iter < 20000; ++iter) {
    h::bits_t a = h::join(static_cast<unsigned>(rng.next() & 1),
                          1 + static_cast<unsigned>(rng.next() % 30),
                          static_cast<unsigned>(rng.next() & 0x3FF));
    std::vector<int> vals(4);
    for (auto& v : vals) v = rng.uniform_int(-8, 7);
    auto p = pm::parallel_fpint_mul(a, make_word(vals));
    for (int i = 0; i < p.lane_count; ++i) {
      if (h::is_inf(p.lanes[i])) continue;
      auto f = h::split(p.lanes[i]);
      REQUIRE(f.sign == p.shared_sign);
      unsigned drift = f.exponent - p.shared_exponent;
      REQUIRE(drift <= 1);  // only the carry path may move the exponent
    }
  }
}

TEST_CASE("parallel multiply: sampled equivalence both widths") {
  SplitMix64 rng(23);
  for (int iter = 0; iter < 20000; ++iter) {
    h::bits_t a = h::join(static_cast<unsigned>(rng.next() & 1),
                          1 + static_cast<unsigned>(rng.next() % 30),
                          static_cast<unsigned>(rng.next() & 0x3FF));
    {
      std::vector<int> vals(4);
      for (auto& v : vals) v = rng.uniform_int(-8, 7);
      auto p = pm::parallel_fpint_mul(a, make_word(vals));
      for (int i = 0; i < 4; ++i) {
        CAPTURE(a, vals[i]);
        REQUIRE(p.lanes[i] == h::mul(a, pm::encode_biased_weight(vals[i], 4)));
      }
    }
    {
      std::vector<int> vals(8);
      for (auto& v : vals) v = rng.uniform_int(-2, 1);
      auto p = pm::parallel_fpint_mul(a, make_word(vals));
      for (int i = 0; i < 8; ++i) {
        CAPTURE(a, vals[i]);
        REQUIRE(p.lanes[i] == h::mul(a, pm::encode_biased_weight(vals[i], 2)));
      }
    }
  }
}

TEST_CASE("exhaustive lane equivalence (INT2: all activations x all weights)") {
  auto rep = pm::verify_lane_equivalence(2);
  REQUIRE(rep.cases == 61442LL * 4);
  REQUIRE(rep.mismatches == 0);
  REQUIRE(rep.carry_events > 0);
}

TEST_CASE("throughput ratios") {
  REQUIRE(pm::products_per_cycle(16) == 1);
  REQUIRE(pm::products_per_cycle(4) == 4);
  REQUIRE(pm::products_per_cycle(2) == 8);
}

TEST_CASE("dp_cycles reproduces the published unit timings") {
  pm::DpConfig cfg;  // dp_width 4, dup_factor 2, fill 3
  REQUIRE(pm::dp_cycles({2, 4, 4}, 16, cfg) == 11);
  REQUIRE(pm::dp_cycles({2, 4, 4}, 4, cfg) == 19);
  REQUIRE(pm::dp_cycles({2, 4, 4}, 2, cfg) == 35);
}

TEST_CASE("dp_cycles monotone in dup_factor and saturating at lane count") {
  pm::DpConfig c1{4, 1, 3}, c2{4, 2, 3}, c4{4, 4, 3};
  pm::DpShape s{2, 4, 4};
  long n1 = pm::dp_cycles(s, 4, c1);
  long n2 = pm::dp_cycles(s, 4, c2);
  long n4 = pm::dp_cycles(s, 4, c4);
  REQUIRE(n1 > n2);
  REQUIRE(n2 > n4);
  // dup_factor beyond the lane count cannot help: rate is min(dup, lanes).
  pm::DpConfig c8{4, 8, 3};
  REQUIRE(pm::dp_cycles(s, 4, c8) == n4);
}

TEST_CASE("parallel_dp wide policy: exact biased sums") {
  std::vector<h::bits_t> a(4, h::encode(1.0));
  std::vector<PackedWord> words;
  // Lane 0 sees weights 1,2,3,4 down the k dimension.
  words.push_back(make_word({1, 0, 0, 0}));
  words.push_back(make_word({2, 0, 0, 0}));
  words.push_back(make_word({3, 0, 0, 0}));
  words.push_back(make_word({4, 0, 0, 0}));
  auto r = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::WideExact);
  REQUIRE(r.lane_sums[0].wide == static_cast<__int128>(4138) << 24);
  REQUIRE(r.sum_a.wide == static_cast<__int128>(4) << 24);
  auto out = pm::fused_correct(r.lane_sums[0], r.sum_a, h::encode(1.0), 4,
                               pm::AccumulatorPolicy::WideExact);
  REQUIRE(h::decode(out) == 10.0);
}

TEST_CASE("parallel_dp: all-zero activations") {
  std::vector<h::bits_t> a(4, h::kPosZero);
  std::vector<PackedWord> words(4, make_word({3, -1, 2, 0}));
  auto r = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::WideExact);
  for (auto& l : r.lane_sums) REQUIRE(l.wide == 0);
  REQUIRE(r.sum_a.wide == 0);
  auto out = pm::fused_correct(r.lane_sums[0], r.sum_a, h::encode(0.25), 4,
                               pm::AccumulatorPolicy::WideExact);
  REQUIRE(h::is_zero(out));
}

TEST_CASE("fused correction: all minus-eight weights give zero lanes") {
  // Biased value of -8 is 1024, so sumAB = 1024 * sumA; with sumA = 0 the
  // corrected output must be exactly zero.
  std::vector<h::bits_t> a = {h::encode(1.5), h::encode(-1.5), h::encode(0.75),
                              h::encode(-0.75)};
  std::vector<PackedWord> words(4, make_word({-8, -8, -8, -8}));
  auto r = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::WideExact);
  REQUIRE(r.sum_a.wide == 0);
  REQUIRE(r.lane_sums[0].wide == 0);
  auto out = pm::fused_correct(r.lane_sums[0], r.sum_a, h::encode(1.0), 4,
                               pm::AccumulatorPolicy::WideExact);
  REQUIRE(h::is_zero(out));
}

TEST_CASE("fused correction equals single-rounded exact dot (random)") {
  SplitMix64 rng(0x515CA1E);
  for (int k : {4, 16, 64}) {
    for (int iter = 0; iter < 2000; ++iter) {
      std::vector<h::bits_t> a(k);
      for (auto& x : a) x = rng.activation();
      std::vector<PackedWord> words;
      std::vector<int> lane0;
      for (int i = 0; i < k; ++i) {
        std::vector<int> vals(4);
        for (auto& v : vals) v = rng.uniform_int(-8, 7);
        words.push_back(make_word(vals));
        lane0.push_back(vals[0]);
      }
      h::bits_t scale = h::encode(rng.uniform(0.001, 2.0));
      auto r = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::WideExact);
      auto got = pm::fused_correct(r.lane_sums[0], r.sum_a, scale, 4,
                                   pm::AccumulatorPolicy::WideExact);
      auto want = oracle_scaled_dot(a, lane0, scale);
      CAPTURE(k, iter);
      REQUIRE(got == want);
    }
  }
}

TEST_CASE("fp16-sequential policy: tie cascade on the worked example") {
  // Same operands as the wide-policy case: unit activations, lane weights
  // 1..4 (biased 1033..1036). Sequential FP16 accumulation hits two
  // round-to-even ties (1033+1034 = 2067 -> 2068, 2068+1035 = 3103 -> 3104),
  // so the corrected output lands on 12 instead of the exact 10. The delta
  // is the measured cost of FP16 partial sums on the biased scale.
  std::vector<h::bits_t> a(4, h::encode(1.0));
  std::vector<PackedWord> words;
  for (int wv : {1, 2, 3, 4}) words.push_back(make_word({wv, 0, 0, 0}));
  auto wide = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::WideExact);
  auto seq = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::Fp16Sequential);
  REQUIRE(h::decode(seq.lane_sums[0].f16) == 4140.0);
  REQUIRE(h::decode(seq.sum_a.f16) == 4.0);
  auto out_wide = pm::fused_correct(wide.lane_sums[0], wide.sum_a, h::encode(1.0),
                                    4, pm::AccumulatorPolicy::WideExact);
  auto out_seq = pm::fused_correct(seq.lane_sums[0], seq.sum_a, h::encode(1.0),
                                   4, pm::AccumulatorPolicy::Fp16Sequential);
  REQUIRE(h::decode(out_wide) == 10.0);
  REQUIRE(h::decode(out_seq) == 12.0);
}

TEST_CASE("fp16-sequential policy: measured deviation and flags") {
  SplitMix64 rng(99);
  int k = 16;
  std::vector<h::bits_t> a(k);
  for (auto& x : a) x = rng.activation();
  std::vector<PackedWord> words;
  std::vector<int> lane0;
  for (int i = 0; i < k; ++i) {
    std::vector<int> vals(4);
    for (auto& v : vals) v = rng.uniform_int(-8, 7);
    words.push_back(make_word(vals));
    lane0.push_back(vals[0]);
  }
  auto wide = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::WideExact);
  auto seq = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::Fp16Sequential);
  pm::DpFlags fl;
  auto got_w = pm::fused_correct(wide.lane_sums[0], wide.sum_a, h::encode(0.5), 4,
                                 pm::AccumulatorPolicy::WideExact);
  auto got_s = pm::fused_correct(seq.lane_sums[0], seq.sum_a, h::encode(0.5), 4,
                                 pm::AccumulatorPolicy::Fp16Sequential, &fl);
  // The sequential result may differ; both must at least be finite here and
  // the delta is the measured quantity, not an assertion target.
  REQUIRE(h::is_finite(got_w));
  REQUIRE(h::is_finite(got_s));
}

TEST_CASE("fp16-sequential policy: accumulator overflow is flagged") {
  // 64 activations of 2.0 against weight +7: biased lane terms ~2078 each,
  // the FP16 running sum exceeds 65504 long before the end.
  int k = 64;
  std::vector<h::bits_t> a(k, h::encode(2.0));
  std::vector<PackedWord> words(k, make_word({7, 7, 7, 7}));
  auto seq = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::Fp16Sequential);
  REQUIRE(seq.flags.arith.overflow);
  REQUIRE(h::is_inf(seq.lane_sums[0].f16));
}

TEST_CASE("fp16-sequential policy: cancellation detector") {
  // sumAB ~ 1032 * sumA when the true dot product is tiny next to the bias
  // term; the corrected subtraction then sits many ulps below sumAB.
  std::vector<h::bits_t> a = {h::encode(2.0), h::encode(2.0), h::encode(2.0),
                              h::encode(2.0)};
  std::vector<PackedWord> words(4, make_word({0, 0, 0, 0}));  // weights all 0
  auto seq = pm::parallel_dp(a, words, {}, pm::AccumulatorPolicy::Fp16Sequential);
  pm::DpFlags fl;
  (void)pm::fused_correct(seq.lane_sums[0], seq.sum_a, h::encode(1.0), 4,
                          pm::AccumulatorPolicy::Fp16Sequential, &fl);
  REQUIRE(fl.cancellation);
}
