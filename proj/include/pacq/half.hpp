#pragma once
// Bit-exact software IEEE 754 binary16 (FP16): encode, decode, multiply, add.
// All arithmetic rounds once, to nearest-even, from an exact wide integer
// intermediate. This module is the reference against which the parallel
// FP-INT units are verified, so it favors obviousness over speed.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pacq::half {

using bits_t = std::uint16_t;

// The only rounding mode supported; recorded in result metadata by the CLI.
enum class RoundingMode { NearestEven };

inline constexpr int kExpBias = 15;
inline constexpr int kMantBits = 10;
inline constexpr bits_t kPosZero = 0x0000;
inline constexpr bits_t kNegZero = 0x8000;
inline constexpr bits_t kPosInf = 0x7C00;
inline constexpr bits_t kNegInf = 0xFC00;
inline constexpr bits_t kQuietNan = 0x7E00;
inline constexpr double kMaxFinite = 65504.0;

struct Fields {
  unsigned sign;      // 1 bit
  unsigned exponent;  // 5-bit biased field
  unsigned mantissa;  // 10-bit fraction field
};

constexpr Fields split(bits_t h) {
  return Fields{static_cast<unsigned>(h >> 15),
                static_cast<unsigned>((h >> 10) & 0x1F),
                static_cast<unsigned>(h & 0x3FF)};
}

constexpr bits_t join(unsigned sign, unsigned exponent, unsigned mantissa) {
  return static_cast<bits_t>(((sign & 1u) << 15) | ((exponent & 0x1Fu) << 10) |
                             (mantissa & 0x3FFu));
}

constexpr bool is_zero(bits_t h) { return (h & 0x7FFF) == 0; }
constexpr bool is_subnormal(bits_t h) {
  return ((h >> 10) & 0x1F) == 0 && (h & 0x3FF) != 0;
}
constexpr bool is_inf(bits_t h) { return (h & 0x7FFF) == 0x7C00; }
constexpr bool is_nan(bits_t h) {
  return ((h >> 10) & 0x1F) == 0x1F && (h & 0x3FF) != 0;
}
constexpr bool is_finite(bits_t h) { return ((h >> 10) & 0x1F) != 0x1F; }
constexpr bool is_normalized(bits_t h) {
  unsigned e = (h >> 10) & 0x1F;
  return e >= 1 && e <= 30;
}

// Sticky status flags for one operation (or an accumulated run of them).
struct Flags {
  bool overflow = false;  // result exceeded the finite range
  bool invalid = false;   // NaN produced from non-NaN inputs (e.g. inf * 0)
  bool special = false;   // a NaN/Inf operand was seen
  void merge(const Flags& o) {
    overflow |= o.overflow;
    invalid |= o.invalid;
    special |= o.special;
  }
};

// 11-bit significand (hidden bit included for normal values) and the
// unbiased power-of-two exponent such that value = sig * 2^(exp - 10).
// Subnormals reuse exponent -14 with sig < 1024.
struct Decomposed {
  unsigned sign;
  std::uint32_t sig;  // < 2048
  int exp;            // unbiased exponent of the leading (hidden) bit
};

constexpr Decomposed decompose(bits_t h) {
  Fields f = split(h);
  if (f.exponent == 0) return {f.sign, f.mantissa, -14};
  return {f.sign, 1024u | f.mantissa, static_cast<int>(f.exponent) - kExpBias};
}

// Exact: every finite FP16 value is representable in a double.
constexpr double decode(bits_t h) {
  Fields f = split(h);
  double s = f.sign ? -1.0 : 1.0;
  if (f.exponent == 0x1F) {
    if (f.mantissa != 0) return __builtin_nan("");
    return s * __builtin_inf();
  }
  Decomposed d = decompose(h);
  // 2^(exp-10) built by ldexp-style scaling; all values exact in double.
  double m = static_cast<double>(d.sig);
  int e = d.exp - kMantBits;
  while (e > 0) { m *= 2.0; --e; }
  while (e < 0) { m *= 0.5; ++e; }
  return s * m;
}

namespace detail {

inline int bit_width_u128(unsigned __int128 v) {
  std::uint64_t hi = static_cast<std::uint64_t>(v >> 64);
  if (hi) return 128 - __builtin_clzll(hi);
  std::uint64_t lo = static_cast<std::uint64_t>(v);
  if (lo) return 64 - __builtin_clzll(lo);
  return 0;
}

}  // namespace detail

// Round-to-nearest-even of the exact value sig * 2^exp2 (sig >= 0) into an
// FP16 pattern with the given sign. This is the single rounding step shared
// by encode, mul and add; overflow produces a signed infinity and sets the
// flag (never a silent wrap).
inline bits_t round_from_wide(bool sign, unsigned __int128 sig, int exp2,
                              Flags* flags = nullptr) {
  if (sig == 0) return sign ? kNegZero : kPosZero;
  int msb = detail::bit_width_u128(sig) - 1;
  int value_exp = msb + exp2;  // value in [2^value_exp, 2^(value_exp+1))
  // Unit in the last place of the rounding target. Normal numbers keep 10
  // fraction bits below the leading bit; subnormals are fixed at 2^-24.
  int ulp_exp = (value_exp >= -14 ? value_exp : -14) - kMantBits;
  int drop = ulp_exp - exp2;  // low bits of sig that fall below one ulp
  unsigned __int128 q;
  if (drop <= 0) {
    q = sig << static_cast<unsigned>(-drop);
  } else if (drop > msb) {
    // Entire significand below half an ulp of the smallest subnormal.
    if (drop > msb + 1) return sign ? kNegZero : kPosZero;
    // drop == msb+1: value < 2^-24 but >= 2^-25; exactly half rounds to even(0)
    unsigned __int128 half = static_cast<unsigned __int128>(1) << (drop - 1);
    bool up = sig > half;  // ties go to even (zero)
    return join(sign, 0, up ? 1 : 0);
  } else {
    unsigned __int128 mask = (static_cast<unsigned __int128>(1) << drop) - 1;
    unsigned __int128 lo = sig & mask;
    unsigned __int128 half = static_cast<unsigned __int128>(1) << (drop - 1);
    q = sig >> drop;
    if (lo > half || (lo == half && (q & 1))) ++q;
  }
  // q is the value in ulps of 2^ulp_exp; a rounding carry lands exactly on
  // 2048 and moves up one binade.
  if (q == 2048) {
    q = 1024;
    ++ulp_exp;
  }
  if (q < 1024) {
    // Subnormal result (ulp was pinned at 2^-24); includes gradual underflow.
    return join(sign, 0, static_cast<unsigned>(q));
  }
  int e = ulp_exp + kMantBits;  // exponent of the (restored) hidden bit
  if (e > 15) {
    if (flags) flags->overflow = true;
    return sign ? kNegInf : kPosInf;
  }
  return join(sign, static_cast<unsigned>(e + kExpBias),
              static_cast<unsigned>(q) & 0x3FF);
}

// Nearest FP16 (ties to even) of a double; exact for integers |v| <= 2048.
inline bits_t encode(double value, Flags* flags = nullptr) {
  std::uint64_t db;
  __builtin_memcpy(&db, &value, sizeof db);
  bool sign = (db >> 63) != 0;
  int de = static_cast<int>((db >> 52) & 0x7FF);
  std::uint64_t dm = db & 0xFFFFFFFFFFFFFULL;
  if (de == 0x7FF) {
    if (flags) flags->special = true;
    if (dm != 0) return kQuietNan;
    if (flags) flags->overflow = true;
    return sign ? kNegInf : kPosInf;
  }
  unsigned __int128 sig;
  int exp2;
  if (de == 0) {
    sig = dm;
    exp2 = -1022 - 52;
  } else {
    sig = dm | (1ULL << 52);
    exp2 = de - 1023 - 52;
  }
  return round_from_wide(sign, sig, exp2, flags);
}

// Exact conversion of a small integer; |v| > 2048 would round, so it throws.
inline bits_t from_int(int v) {
  if (v > 2048 || v < -2048)
    throw std::domain_error("fp16_from_int: |" + std::to_string(v) +
                            "| exceeds the exact-integer range 2048");
  bool sign = v < 0;
  std::uint32_t mag = sign ? static_cast<std::uint32_t>(-static_cast<std::int64_t>(v))
                           : static_cast<std::uint32_t>(v);
  return round_from_wide(sign, mag, 0);
}

// Round-to-nearest-even product. Exact 11x11-bit significand multiply, one
// exponent add, one rounding step.
inline bits_t mul(bits_t a, bits_t b, Flags* flags = nullptr) {
  if (is_nan(a) || is_nan(b)) {
    if (flags) flags->special = true;
    return kQuietNan;
  }
  unsigned sign = (a ^ b) >> 15;
  if (is_inf(a) || is_inf(b)) {
    if (flags) flags->special = true;
    if (is_zero(a) || is_zero(b)) {
      if (flags) flags->invalid = true;
      return kQuietNan;
    }
    return join(sign, 0x1F, 0);
  }
  if (is_zero(a) || is_zero(b)) return sign ? kNegZero : kPosZero;
  Decomposed da = decompose(a);
  Decomposed db = decompose(b);
  unsigned __int128 sig =
      static_cast<unsigned __int128>(da.sig) * static_cast<unsigned __int128>(db.sig);
  int exp2 = (da.exp - kMantBits) + (db.exp - kMantBits);
  return round_from_wide(sign != 0, sig, exp2, flags);
}

// Round-to-nearest-even sum. Operands are aligned exactly (they span at most
// 40 bits), added as integers, rounded once.
inline bits_t add(bits_t a, bits_t b, Flags* flags = nullptr) {
  if (is_nan(a) || is_nan(b)) {
    if (flags) flags->special = true;
    return kQuietNan;
  }
  if (is_inf(a) || is_inf(b)) {
    if (flags) flags->special = true;
    if (is_inf(a) && is_inf(b) && ((a ^ b) & 0x8000)) {
      if (flags) flags->invalid = true;
      return kQuietNan;
    }
    return is_inf(a) ? a : b;
  }
  if (is_zero(a) && is_zero(b)) {
    // +0 unless both are -0 (IEEE round-to-nearest).
    return (a & b & 0x8000) ? kNegZero : kPosZero;
  }
  Decomposed da = decompose(a);
  Decomposed db = decompose(b);
  int ea = da.exp - kMantBits;
  int eb = db.exp - kMantBits;
  int common = ea < eb ? ea : eb;
  __int128 xa = static_cast<__int128>(da.sig) << (ea - common);
  __int128 xb = static_cast<__int128>(db.sig) << (eb - common);
  if (da.sign) xa = -xa;
  if (db.sign) xb = -xb;
  __int128 sum = xa + xb;
  if (sum == 0) return kPosZero;  // exact cancellation gives +0 under RNE
  bool sign = sum < 0;
  unsigned __int128 mag = sign ? static_cast<unsigned __int128>(-sum)
                               : static_cast<unsigned __int128>(sum);
  return round_from_wide(sign, mag, common, flags);
}

inline bits_t negate(bits_t h) { return static_cast<bits_t>(h ^ 0x8000); }

}  // namespace pacq::half
