#pragma once
// Packing of INT4/INT2 weights into 16-bit containers, along either the
// input-feature (k) or output-feature (n) dimension. Containers store
// offset-binary values (B + 2^(bits-1)) so the parallel FP-INT multiplier
// can consume them without a per-cycle add: the stored nibble is exactly
// the low mantissa field of the biased FP16 representation.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pacq {

enum class PackDim { K, N };

struct PackSpec {
  int count;    // weights per 16-bit container: 4 (INT4) or 8 (INT2)
  PackDim dim;  // dimension the packed elements run along

  int bits() const { return 16 / count; }
};

inline PackSpec pack_spec_for(int bits, PackDim dim) {
  if (bits != 4 && bits != 2)
    throw std::invalid_argument("pack: weight bits must be 4 or 2");
  return PackSpec{16 / bits, dim};
}

// One 16-bit container plus enough metadata to locate it in the matrix.
// Element i occupies bits [i*b, (i+1)*b), i increasing along spec.dim.
struct PackedWord {
  std::uint16_t raw = 0;
  int origin_k = 0;  // k index of element 0
  int origin_n = 0;  // n index of element 0
  PackSpec spec{4, PackDim::N};
};

inline std::uint16_t pack_values(const int* vals, int bits) {
  int count = 16 / bits;
  int offset = 1 << (bits - 1);
  int mask = (1 << bits) - 1;
  std::uint16_t raw = 0;
  for (int i = 0; i < count; ++i) {
    int biased = vals[i] + offset;
    if (biased < 0 || biased > mask)
      throw std::domain_error("pack: weight out of signed range for bit width");
    raw |= static_cast<std::uint16_t>(biased) << (i * bits);
  }
  return raw;
}

// Offset-binary field of element i, i.e. B + 2^(bits-1). This is what the
// multiplier wants.
inline unsigned unpack_biased(std::uint16_t raw, int bits, int i) {
  int mask = (1 << bits) - 1;
  return (raw >> (i * bits)) & mask;
}

// Signed value of element i.
inline int unpack_value(std::uint16_t raw, int bits, int i) {
  return static_cast<int>(unpack_biased(raw, bits, i)) - (1 << (bits - 1));
}

inline std::vector<int> unpack(const PackedWord& w) {
  int bits = w.spec.bits();
  std::vector<int> out(w.spec.count);
  for (int i = 0; i < w.spec.count; ++i) out[i] = unpack_value(w.raw, bits, i);
  return out;
}

// A fully packed weight matrix. Words are stored row-major along the
// non-packed dimension:
//   dim == N: word (r, c) covers values[r][c*count .. c*count+count-1]
//   dim == K: word (r, c) covers values[r*count .. r*count+count-1][c]
struct PackedMatrix {
  std::vector<std::uint16_t> words;  // word_rows * word_cols, row-major
  int k = 0;                         // logical matrix extents
  int n = 0;
  int word_rows = 0;
  int word_cols = 0;
  PackSpec spec{4, PackDim::N};

  std::uint16_t word(int r, int c) const { return words[r * word_cols + c]; }

  PackedWord at(int r, int c) const {
    PackedWord w;
    w.raw = word(r, c);
    w.spec = spec;
    if (spec.dim == PackDim::N) {
      w.origin_k = r;
      w.origin_n = c * spec.count;
    } else {
      w.origin_k = r * spec.count;
      w.origin_n = c;
    }
    return w;
  }

  // Signed weight at logical position (ki, ni).
  int value_at(int ki, int ni) const {
    int bits = spec.bits();
    if (spec.dim == PackDim::N)
      return unpack_value(word(ki, ni / spec.count), bits, ni % spec.count);
    return unpack_value(word(ki / spec.count, ni), bits, ki % spec.count);
  }
};

// values is a k*n row-major signed integer matrix.
inline PackedMatrix pack_matrix(const std::vector<int>& values, int k, int n,
                                const PackSpec& spec) {
  int bits = spec.bits();
  PackedMatrix pm;
  pm.k = k;
  pm.n = n;
  pm.spec = spec;
  if (spec.dim == PackDim::N) {
    if (n % spec.count != 0)
      throw std::invalid_argument("pack: n not divisible by container count");
    pm.word_rows = k;
    pm.word_cols = n / spec.count;
  } else {
    if (k % spec.count != 0)
      throw std::invalid_argument("pack: k not divisible by container count");
    pm.word_rows = k / spec.count;
    pm.word_cols = n;
  }
  pm.words.resize(static_cast<std::size_t>(pm.word_rows) * pm.word_cols);
  std::array<int, 8> tmp{};
  for (int r = 0; r < pm.word_rows; ++r) {
    for (int c = 0; c < pm.word_cols; ++c) {
      for (int i = 0; i < spec.count; ++i) {
        int ki = spec.dim == PackDim::N ? r : r * spec.count + i;
        int ni = spec.dim == PackDim::N ? c * spec.count + i : c;
        tmp[i] = values[static_cast<std::size_t>(ki) * n + ni];
      }
      pm.words[static_cast<std::size_t>(r) * pm.word_cols + c] =
          pack_values(tmp.data(), bits);
    }
  }
  return pm;
}

inline std::vector<int> unpack_matrix(const PackedMatrix& pm) {
  std::vector<int> out(static_cast<std::size_t>(pm.k) * pm.n);
  for (int ki = 0; ki < pm.k; ++ki)
    for (int ni = 0; ni < pm.n; ++ni)
      out[static_cast<std::size_t>(ki) * pm.n + ni] = pm.value_at(ki, ni);
  return out;
}

}  // namespace pacq
