#pragma once
// Parallel FP-INT multiplier and dot-product units.
//
// An INT4 weight B stored as B+8 makes B+1032 land in [1024, 2048), where
// the FP16 exponent field is constant (11001) and the low mantissa bits are
// exactly B+8. One FP16 activation can therefore be multiplied against all
// weights of a packed container in a single issue: shared sign, shared
// exponent add, one small integer multiply per lane, and a per-lane rounding
// unit. The bias is removed later via
//     sum_k A_k (B_k - off) = sum_k A_k B'_k - off * sum_k A_k,
// with B'_k = B_k + off kept in the container and sum A_k tracked by a small
// side accumulator.
//
// The contract of parallel_fpint_mul is bit-exactness against the reference
// multiplier (half::mul of the biased weight), including the normalization
// carry that fires when mantissa(A) * (1 + y/1024) reaches 2.0; the unit
// counts those carries so the cost of the carry path can be reported.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pacq/half.hpp"
#include "pacq/pack.hpp"

namespace pacq::pmul {

// Bias that maps a signed weight into [1024, 2048): 2^(bits-1) + 1024.
constexpr int offset_constant(int bits) { return (1 << (bits - 1)) + 1024; }
constexpr int lanes_for(int bits) { return bits == 4 ? 4 : 8; }

// Throughput of one multiplier in products per cycle (baseline FP16 = 1).
constexpr int products_per_cycle(int bits) {
  return bits == 16 ? 1 : lanes_for(bits);
}

// FP16 pattern of B + offset: sign 0, exponent 11001, mantissa = B + 2^(b-1)
// zero-extended into the low bits.
inline half::bits_t encode_biased_weight(int b, int bits) {
  if (bits != 4 && bits != 2)
    throw std::invalid_argument("encode_biased_weight: bits must be 4 or 2");
  int lo = -(1 << (bits - 1));
  int hi = (1 << (bits - 1)) - 1;
  if (b < lo || b > hi)
    throw std::domain_error("encode_biased_weight: weight out of signed range");
  unsigned mant = static_cast<unsigned>(b - lo);
  return half::join(0, 0b11001, mant);
}

struct ParallelProduct {
  std::array<half::bits_t, 8> lanes{};
  std::array<bool, 8> lane_carry{};  // normalization/rounding carry fired
  int lane_count = 0;
  unsigned shared_sign = 0;
  unsigned shared_exponent = 0;  // biased field before any per-lane carry
  int carry_events = 0;          // lanes whose exponent moved off the shared value
  bool overflow = false;
};

// One issue of the parallel multiplier: activation a times every weight in
// the container. a must be normalized or zero; the zero detector bypasses
// the datapath (exponent field 0 has no hidden bit to multiply).
inline ParallelProduct parallel_fpint_mul(half::bits_t a, const PackedWord& w) {
  int bits = w.spec.bits();
  int count = w.spec.count;
  ParallelProduct out;
  out.lane_count = count;
  auto f = half::split(a);
  out.shared_sign = f.sign;  // XOR with 0: weights are unsigned after biasing
  if (half::is_zero(a)) {
    for (int i = 0; i < count; ++i)
      out.lanes[i] = f.sign ? half::kNegZero : half::kPosZero;
    return out;
  }
  if (!half::is_normalized(a))
    throw std::domain_error(
        "parallel_fpint_mul: activation must be normalized or zero");

  std::uint32_t a_sig = 1024u | f.mantissa;          // hidden bit restored
  unsigned e_shared = f.exponent + 25 - 15;          // shared exponent add
  out.shared_exponent = e_shared;

  for (int i = 0; i < count; ++i) {
    std::uint32_t y = unpack_biased(w.raw, bits, i);  // B + 2^(bits-1)
    // 11-bit x 4-bit partial product; the container's hidden bit (the
    // implicit 1024 of B') contributes a_sig << 10 and is folded in below.
    std::uint32_t prod = a_sig * y;
    std::uint32_t prod_lo = prod & 0x3FF;
    std::uint32_t prod_hi = prod >> 10;              // up to 5 bits
    // Fold the hidden-bit term: a 6-bit add against the low bits of A's
    // significand, carry propagating into its top 5 bits.
    std::uint32_t sum6 = (a_sig & 0x3F) + prod_hi;
    std::uint32_t top = (a_sig >> 6) + (sum6 >> 6);
    // Concatenation: full 21/22-bit significand product == a_sig * (1024+y).
    std::uint32_t full = (top << 16) | ((sum6 & 0x3F) << 10) | prod_lo;

    unsigned norm = (full >> 21) & 1;  // significand reached 2.0
    unsigned e_lane = e_shared + norm;
    int shift = 10 + static_cast<int>(norm);
    std::uint32_t q = full >> shift;
    std::uint32_t rem = full & ((1u << shift) - 1);
    std::uint32_t half_ulp = 1u << (shift - 1);
    if (rem > half_ulp || (rem == half_ulp && (q & 1))) ++q;
    if (q == 2048) {  // rounding carry into the next binade
      q = 1024;
      ++e_lane;
    }
    if (e_lane != e_shared) {
      out.lane_carry[i] = true;
      ++out.carry_events;
    }
    if (e_lane >= 31) {
      out.overflow = true;
      out.lanes[i] = f.sign ? half::kNegInf : half::kPosInf;
      continue;
    }
    out.lanes[i] = half::join(f.sign, e_lane, q & 0x3FF);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dot-product units.

enum class AccumulatorPolicy {
  WideExact,      // exact wide accumulation, a single final rounding
  Fp16Sequential  // FP16 rounding after every add, left-to-right
};

struct DpConfig {
  int dp_width = 4;      // elements per dot-product unit: 4, 8 or 16
  int dup_factor = 2;    // adder-tree duplication: 1, 2 or 4
  int fill_latency = 3;  // pipeline fill cycles
};

// Accumulated value under either policy. `wide` is an exact fixed-point
// integer in units of 2^-24; `f16` is the FP16 running sum.
struct AccumValue {
  __int128 wide = 0;
  half::bits_t f16 = half::kPosZero;
};

struct DpFlags {
  half::Flags arith;
  bool cancellation = false;  // fused correction lost most significant bits
};

// Exact fixed-point value of h at scale 2^-24: sig * 2^(exp + 14).
// Finite h only; activations here are normalized or zero.
inline __int128 fixed24(half::bits_t h) {
  auto d = half::decompose(h);
  if (d.sig == 0) return 0;
  __int128 v = static_cast<__int128>(d.sig) << (d.exp + 14);
  return d.sign ? -v : v;
}

struct DpResult {
  std::vector<AccumValue> lane_sums;  // one biased sum per container lane
  AccumValue sum_a;                   // side accumulator of the activations
  DpFlags flags;
};

// k-element dot products of one activation vector against the lanes of a
// packed-word vector: lane_sums[j] = sum_k A_k * (B_kj + off). The biased
// weight is an exact small integer, so the wide policy accumulates exact
// products with no rounding anywhere; the FP16 policy rounds every product
// (through the parallel multiplier) and every add, left to right.
inline DpResult parallel_dp(const std::vector<half::bits_t>& a,
                            const std::vector<PackedWord>& words,
                            const DpConfig& cfg, AccumulatorPolicy acc) {
  if (a.size() != words.size())
    throw std::invalid_argument("parallel_dp: operand vectors differ in length");
  if (a.empty() || a.size() % static_cast<std::size_t>(cfg.dp_width) != 0)
    throw std::invalid_argument(
        "parallel_dp: operand length must be a positive multiple of dp_width");
  int count = words[0].spec.count;
  int bits = words[0].spec.bits();
  DpResult r;
  r.lane_sums.assign(count, AccumValue{});
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (words[k].spec.count != count)
      throw std::invalid_argument("parallel_dp: mixed container widths");
    half::bits_t ak = a[k];
    if (acc == AccumulatorPolicy::WideExact) {
      if (!half::is_zero(ak) && !half::is_normalized(ak))
        throw std::domain_error("parallel_dp: activation must be normalized or zero");
      __int128 sa = fixed24(ak);
      r.sum_a.wide += sa;
      for (int j = 0; j < count; ++j) {
        __int128 biased = 1024 + static_cast<int>(unpack_biased(words[k].raw, bits, j));
        r.lane_sums[j].wide += sa * biased;
      }
    } else {
      auto prod = parallel_fpint_mul(ak, words[k]);
      if (prod.overflow) r.flags.arith.overflow = true;
      for (int j = 0; j < count; ++j)
        r.lane_sums[j].f16 =
            half::add(r.lane_sums[j].f16, prod.lanes[j], &r.flags.arith);
      r.sum_a.f16 = half::add(r.sum_a.f16, ak, &r.flags.arith);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Fused bias correction: scale * (sumAB - off * sumA). Under the wide policy
// this equals the exact dequantized dot product rounded exactly once. Under
// the FP16 policy it is three FP16 operations, and the subtraction is where
// catastrophic cancellation can occur (sumAB ~ off * sumA whenever the true
// dot product is small); a detector flags results that lost more than the
// threshold number of bits.
inline half::bits_t fused_correct(const AccumValue& sum_ab, const AccumValue& sum_a,
                                  half::bits_t scale, int bits,
                                  AccumulatorPolicy acc, DpFlags* flags = nullptr,
                                  int cancel_threshold_ulps = 8) {
  int off = offset_constant(bits);
  if (acc == AccumulatorPolicy::WideExact) {
    __int128 d = sum_ab.wide - static_cast<__int128>(off) * sum_a.wide;
    auto ds = half::decompose(scale);
    bool sign = (d < 0) != (ds.sign != 0);
    unsigned __int128 mag = d < 0 ? static_cast<unsigned __int128>(-d)
                                  : static_cast<unsigned __int128>(d);
    // |d| * sig_s at scale 2^(-24 + exp_s - 10).
    half::Flags hf;
    auto out = half::round_from_wide(sign, mag * ds.sig, ds.exp - 10 - 24, &hf);
    if (flags) flags->arith.merge(hf);
    return out;
  }
  half::Flags hf;
  half::bits_t off_h = half::from_int(off);
  half::bits_t t = half::mul(sum_a.f16, off_h, &hf);
  half::bits_t u = half::add(sum_ab.f16, half::negate(t), &hf);
  if (flags && half::is_finite(sum_ab.f16) && !half::is_zero(sum_ab.f16) &&
      half::is_finite(u)) {
    auto dab = half::decompose(sum_ab.f16);
    double ulp_ab = std::ldexp(1.0, dab.exp - 10);
    double mag_u = half::is_zero(u) ? 0.0 : std::abs(half::decode(u));
    if (mag_u < static_cast<double>(cancel_threshold_ulps) * ulp_ab)
      flags->cancellation = true;
  }
  half::bits_t out = half::mul(u, scale, &hf);
  if (flags) flags->arith.merge(hf);
  return out;
}

// ---------------------------------------------------------------------------
// Cycle model.

// Unit-level task shape; for packed modes n counts packed containers, each
// fanning out to `lanes` outputs.
struct DpShape {
  int m = 1;
  int n = 1;
  int k = 1;
};

// fill + ceil(output updates / updates per cycle). One update is one
// dp_width-long accumulation step toward an output; the FP16 baseline
// retires one per cycle, the parallel design retires min(dup_factor, lanes)
// because the duplicated adder trees are the bottleneck, not the multipliers.
inline long dp_cycles(const DpShape& s, int bits, const DpConfig& cfg) {
  if (s.m <= 0 || s.n <= 0 || s.k <= 0)
    throw std::invalid_argument("dp_cycles: shape extents must be positive");
  long k_steps = (s.k + cfg.dp_width - 1) / cfg.dp_width;
  long lanes = bits == 16 ? 1 : lanes_for(bits);
  long outputs = static_cast<long>(s.m) * s.n * lanes * k_steps;
  long rate = bits == 16 ? 1
                         : (cfg.dup_factor < lanes ? cfg.dup_factor : lanes);
  return cfg.fill_latency + (outputs + rate - 1) / rate;
}

// ---------------------------------------------------------------------------
// Exhaustive equivalence check of the parallel unit against the reference
// multiplier: every finite normalized-or-zero activation pattern times every
// representable weight.
struct MulVerifyReport {
  long long cases = 0;
  long long mismatches = 0;
  long long carry_events = 0;
  half::bits_t first_mismatch_a = 0;
  int first_mismatch_b = 0;
};

inline MulVerifyReport verify_lane_equivalence(int bits) {
  int count = 16 / bits;
  int lo = -(1 << (bits - 1));
  int nvalues = 1 << bits;
  PackSpec spec{count, PackDim::N};
  MulVerifyReport rep;
  // Containers whose lanes enumerate every signed weight value at least
  // once (values cycle when a container holds more lanes than there are
  // distinct values, as for INT2). Every lane is checked; distinct
  // (activation, weight) pairs are counted once.
  std::vector<PackedWord> words;
  std::vector<std::vector<int>> vals;
  for (int base = 0; base < nvalues; base += count) {
    std::vector<int> v(count);
    for (int i = 0; i < count; ++i) v[i] = lo + (base + i) % nvalues;
    PackedWord w;
    w.raw = pack_values(v.data(), bits);
    w.spec = spec;
    words.push_back(w);
    vals.push_back(v);
  }
  std::array<half::bits_t, 16> ref{};
  for (std::uint32_t p = 0; p <= 0xFFFF; ++p) {
    auto a = static_cast<half::bits_t>(p);
    if (!half::is_zero(a) && !half::is_normalized(a)) continue;
    for (int v = 0; v < nvalues; ++v)
      ref[v] = half::mul(a, encode_biased_weight(lo + v, bits));
    for (std::size_t wi = 0; wi < words.size(); ++wi) {
      auto prod = parallel_fpint_mul(a, words[wi]);
      for (int i = 0; i < count; ++i) {
        bool distinct = static_cast<std::size_t>(wi) * count + i <
                        static_cast<std::size_t>(nvalues);
        if (distinct) {
          ++rep.cases;
          if (prod.lane_carry[i]) ++rep.carry_events;
        }
        if (prod.lanes[i] != ref[vals[wi][i] - lo]) {
          if (rep.mismatches == 0) {
            rep.first_mismatch_a = a;
            rep.first_mismatch_b = vals[wi][i];
          }
          ++rep.mismatches;
        }
      }
    }
  }
  return rep;
}

}  // namespace pacq::pmul
