#pragma once
// Exact-arithmetic GEMM references used to judge the simulated flows.
// These paths share nothing with the biased-multiplier/fused-correction
// machinery: each output is a plain dot product accumulated in exact
// fixed-point integers and rounded to FP16 exactly once.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pacq/half.hpp"
#include "pacq/pmul.hpp"
#include "pacq/quant.hpp"

namespace pacq::oracle {

// C = A x (q .* s) with the weight taken as the exact rational q * s
// (the hyper-asymmetric flows never materialize FP16 weights, so their
// reference keeps the product exact). A is m x k row-major FP16.
inline std::vector<half::bits_t> gemm_exact_dequant(
    const std::vector<half::bits_t>& a, int m, int k, const QuantizedWeights& q) {
  if (q.k != k) throw std::invalid_argument("oracle: operand k mismatch");
  std::vector<half::bits_t> c(static_cast<std::size_t>(m) * q.n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < q.n; ++j) {
      // sum over k of a * qv * s, accumulated at scale 2^-64.
      __int128 acc = 0;
      for (int kk = 0; kk < k; ++kk) {
        __int128 fa = pmul::fixed24(a[static_cast<std::size_t>(i) * k + kk]);
        int qv = q.value_at(kk, j);
        auto ds = half::decompose(q.scale_at(kk, j));
        // a*q at 2^-24 times sig_s * 2^(exp_s - 10): shift to 2^-64.
        int shift = ds.exp - 10 + 40;  // >= 16 for any FP16 scale
        __int128 term = fa * qv * static_cast<__int128>(ds.sig);
        acc += ds.sign ? -(term << shift) : (term << shift);
      }
      bool sign = acc < 0;
      unsigned __int128 mag = sign ? static_cast<unsigned __int128>(-acc)
                                   : static_cast<unsigned __int128>(acc);
      c[static_cast<std::size_t>(i) * q.n + j] = half::round_from_wide(sign, mag, -64);
    }
  }
  return c;
}

// C = A x W for FP16 weights (the dequantization-based flow materializes
// its weights in FP16 first; its reference must use the same values).
inline std::vector<half::bits_t> gemm_exact_fp16(
    const std::vector<half::bits_t>& a, int m, int k,
    const std::vector<half::bits_t>& w, int n) {
  std::vector<half::bits_t> c(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      __int128 acc = 0;  // scale 2^-48
      for (int kk = 0; kk < k; ++kk) {
        __int128 fa = pmul::fixed24(a[static_cast<std::size_t>(i) * k + kk]);
        __int128 fw = pmul::fixed24(w[static_cast<std::size_t>(kk) * n + j]);
        acc += fa * fw;
      }
      bool sign = acc < 0;
      unsigned __int128 mag = sign ? static_cast<unsigned __int128>(-acc)
                                   : static_cast<unsigned __int128>(acc);
      c[static_cast<std::size_t>(i) * n + j] = half::round_from_wide(sign, mag, -48);
    }
  }
  return c;
}

}  // namespace pacq::oracle
