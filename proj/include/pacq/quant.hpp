#pragma once
// Round-to-nearest weight quantization with two-dimensional groups.
// A group of gk x gn elements shares one FP16 scale = max|w| / qmax; values
// are clamped to the symmetric signed range so the biased-multiplier
// operand contract (B + 2^(bits-1) >= 0) always holds.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pacq/half.hpp"
#include "pacq/pack.hpp"

namespace pacq {

struct WeightMatrix {
  std::vector<double> data;  // k*n row-major: input-feature rows
  int k = 0;
  int n = 0;

  double at(int ki, int ni) const { return data[static_cast<std::size_t>(ki) * n + ni]; }
};

struct GroupSpec {
  int gk = 128;  // group extent along k
  int gn = 1;    // group extent along n
};

struct QuantizedWeights {
  std::vector<int> values;           // k*n row-major, signed
  std::vector<half::bits_t> scales;  // (k/gk)*(n/gn) row-major over group blocks
  int k = 0;
  int n = 0;
  int bits = 4;
  GroupSpec group;

  int groups_k() const { return k / group.gk; }
  int groups_n() const { return n / group.gn; }
  half::bits_t scale_at(int ki, int ni) const {
    return scales[static_cast<std::size_t>(ki / group.gk) * groups_n() + ni / group.gn];
  }
  int value_at(int ki, int ni) const {
    return values[static_cast<std::size_t>(ki) * n + ni];
  }
};

inline int qmax_for(int bits) { return (1 << (bits - 1)) - 1; }

// Groups tile the matrix row-major over (k-blocks, n-blocks).
inline QuantizedWeights rtn_quantize(const WeightMatrix& w, int bits,
                                     const GroupSpec& g) {
  if (bits != 4 && bits != 2)
    throw std::invalid_argument("rtn_quantize: bits must be 4 or 2");
  if (w.k <= 0 || w.n <= 0)
    throw std::invalid_argument("rtn_quantize: empty matrix");
  if (g.gk <= 0 || g.gn <= 0 || w.k % g.gk != 0 || w.n % g.gn != 0)
    throw std::invalid_argument("rtn_quantize: group extents must divide the matrix");
  QuantizedWeights q;
  q.k = w.k;
  q.n = w.n;
  q.bits = bits;
  q.group = g;
  q.values.resize(w.data.size());
  q.scales.resize(static_cast<std::size_t>(q.groups_k()) * q.groups_n());
  int lo = -(1 << (bits - 1));
  int hi = qmax_for(bits);
  for (int bk = 0; bk < q.groups_k(); ++bk) {
    for (int bn = 0; bn < q.groups_n(); ++bn) {
      double amax = 0.0;
      for (int i = 0; i < g.gk; ++i)
        for (int j = 0; j < g.gn; ++j) {
          double v = std::abs(w.at(bk * g.gk + i, bn * g.gn + j));
          if (!std::isfinite(v))
            throw std::domain_error("rtn_quantize: non-finite weight");
          if (v > amax) amax = v;
        }
      half::bits_t s;
      if (amax == 0.0) {
        s = half::join(0, 1, 0);  // smallest positive normal
      } else {
        s = half::encode(amax / hi);
        if (half::is_zero(s)) s = half::join(0, 0, 1);  // keep the scale positive
      }
      q.scales[static_cast<std::size_t>(bk) * q.groups_n() + bn] = s;
      // Quantize against the FP16-materialized scale so that quantization
      // and dequantization agree on the same grid.
      double sd = half::decode(s);
      for (int i = 0; i < g.gk; ++i)
        for (int j = 0; j < g.gn; ++j) {
          int ki = bk * g.gk + i, ni = bn * g.gn + j;
          double t = w.at(ki, ni) / sd;
          int v = static_cast<int>(std::nearbyint(t));  // ties to even
          if (v < lo) v = lo;
          if (v > hi) v = hi;
          q.values[static_cast<std::size_t>(ki) * q.n + ni] = v;
        }
    }
  }
  return q;
}

// FP16 materialization of q * s, rounded once per element.
inline std::vector<half::bits_t> dequantize(const QuantizedWeights& q) {
  std::vector<half::bits_t> out(q.values.size());
  for (int ki = 0; ki < q.k; ++ki)
    for (int ni = 0; ni < q.n; ++ni)
      out[static_cast<std::size_t>(ki) * q.n + ni] =
          half::mul(half::from_int(q.value_at(ki, ni)), q.scale_at(ki, ni));
  return out;
}

inline PackedMatrix pack(const QuantizedWeights& q, PackDim dim) {
  return pack_matrix(q.values, q.k, q.n, pack_spec_for(q.bits, dim));
}

}  // namespace pacq
