#pragma once
// Binary weight-file format (little-endian):
//   bytes 0..3   magic "PQW1"
//   7 x u32      bits, k, n, gk, gn, pack_dim (0 = k, 1 = n), pack_count
//   scales       (k/gk)*(n/gn) x u16, row-major over group blocks
//   words        word_rows*word_cols x u16, row-major along the non-packed dim

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacq/pack.hpp"
#include "pacq/quant.hpp"

namespace pacq {

struct WeightFile {
  QuantizedWeights weights;  // values reconstructed from the packed words
  PackedMatrix packed;
  PackDim pack_dim = PackDim::N;
};

namespace wfdetail {

inline void put_u16(std::ostream& os, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  os.write(b, 2);
}
inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>(v >> 24)};
  os.write(b, 4);
}
inline std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0] | (b[1] << 8) | (b[2] << 16) |
                                    (static_cast<std::uint32_t>(b[3]) << 24));
}

}  // namespace wfdetail

inline void save_weights(const std::string& path, const QuantizedWeights& q,
                         PackDim dim) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  PackedMatrix pm = pack(q, dim);
  os.write("PQW1", 4);
  wfdetail::put_u32(os, static_cast<std::uint32_t>(q.bits));
  wfdetail::put_u32(os, static_cast<std::uint32_t>(q.k));
  wfdetail::put_u32(os, static_cast<std::uint32_t>(q.n));
  wfdetail::put_u32(os, static_cast<std::uint32_t>(q.group.gk));
  wfdetail::put_u32(os, static_cast<std::uint32_t>(q.group.gn));
  wfdetail::put_u32(os, dim == PackDim::K ? 0u : 1u);
  wfdetail::put_u32(os, static_cast<std::uint32_t>(pm.spec.count));
  for (auto s : q.scales) wfdetail::put_u16(os, s);
  for (auto w : pm.words) wfdetail::put_u16(os, w);
  if (!os) throw std::runtime_error("short write: " + path);
}

inline WeightFile load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "PQW1")
    throw std::runtime_error("not a weight file: " + path);
  WeightFile f;
  QuantizedWeights& q = f.weights;
  q.bits = static_cast<int>(wfdetail::get_u32(is));
  q.k = static_cast<int>(wfdetail::get_u32(is));
  q.n = static_cast<int>(wfdetail::get_u32(is));
  q.group.gk = static_cast<int>(wfdetail::get_u32(is));
  q.group.gn = static_cast<int>(wfdetail::get_u32(is));
  std::uint32_t dim = wfdetail::get_u32(is);
  std::uint32_t count = wfdetail::get_u32(is);
  if ((q.bits != 4 && q.bits != 2) || count != 16u / q.bits || dim > 1)
    throw std::runtime_error("corrupt weight header: " + path);
  f.pack_dim = dim == 0 ? PackDim::K : PackDim::N;
  q.scales.resize(static_cast<std::size_t>(q.k / q.group.gk) * (q.n / q.group.gn));
  for (auto& s : q.scales) s = wfdetail::get_u16(is);
  PackSpec spec = pack_spec_for(q.bits, f.pack_dim);
  PackedMatrix& pm = f.packed;
  pm.k = q.k;
  pm.n = q.n;
  pm.spec = spec;
  pm.word_rows = f.pack_dim == PackDim::N ? q.k : q.k / spec.count;
  pm.word_cols = f.pack_dim == PackDim::N ? q.n / spec.count : q.n;
  pm.words.resize(static_cast<std::size_t>(pm.word_rows) * pm.word_cols);
  for (auto& w : pm.words) w = wfdetail::get_u16(is);
  if (!is) throw std::runtime_error("truncated weight file: " + path);
  q.values = unpack_matrix(pm);
  return f;
}

}  // namespace pacq
