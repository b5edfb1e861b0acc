#pragma once
// Warp/octet tile-level simulator of three GEMM flows over the m16n16k16
// warp instruction:
//
//   DequantStandard  weights unpacked+dequantized by the general core, then
//                    a plain W16A16 flow: weight-stationary tile movement,
//                    partial sums spilled to the register file per k-step.
//   KPacked          hyper-asymmetric flow, weights packed along k. Weight-
//                    stationary movement like the standard flow; every
//                    packed container spans the k dimension, so activations
//                    are gathered in k-slices (one fetch instruction per
//                    slice) and streamed through the DP operand latches.
//                    The stream is drained per output column, so the slices
//                    are gone before the remaining columns of the staged
//                    B-tile have consumed them: each re-stage from the
//                    operand buffer is an A-buffer eviction.
//   NPackedPacq      weights packed along n, output-stationary movement.
//                    One activation fetch feeds all lanes of a container in
//                    a single parallel-multiplier issue, so nothing is ever
//                    evicted early, and partial sums live in the DP
//                    accumulators until the k loop completes.
//
// Counter rules (normative for this model):
//   - one RF access per 32-bit register moved;
//   - one fetch instruction per tile load (KPacked pays one per k-slice);
//   - evictions are staging replacements that precede lane consumption;
//     re-stages are served by the tensor-core operand buffer, not the RF;
//   - cycles = fill + output-updates per DP + eviction stalls, plus the
//     serialized general-core unpack/dequant cost for the standard flow.

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacq/half.hpp"
#include "pacq/pack.hpp"
#include "pacq/pmul.hpp"
#include "pacq/quant.hpp"

namespace pacq::dataflow {

struct GemmShape {
  int m = 16;
  int n = 16;
  int k = 16;
};

inline void validate_shape(const GemmShape& s) {
  if (s.m <= 0 || s.n <= 0 || s.k <= 0 || s.m % 16 || s.n % 16 || s.k % 16)
    throw std::invalid_argument(
        "shape extents must be positive multiples of 16 (warp instruction "
        "granularity)");
}

enum class FlowKind { DequantStandard, KPacked, NPackedPacq };

inline const char* flow_name(FlowKind f) {
  switch (f) {
    case FlowKind::DequantStandard: return "dequant";
    case FlowKind::KPacked: return "kpack";
    case FlowKind::NPackedPacq: return "npack";
  }
  return "?";
}

struct HwConfig {
  int buffer_bits = 2 * 3072;  // two operand buffers per tensor core
  int register_bits = 32;      // RF accounting granularity
  int dp_per_core = 4;         // DP units per tensor core (two octets)
  pmul::DpConfig dp{};         // dp_width / dup_factor / fill_latency
  int dequant_cost = 1;        // general-core cycles per unpacked element
};

struct FlowCounters {
  long long rf_reads_a = 0;
  long long rf_reads_b = 0;
  long long rf_reads_c = 0;
  long long rf_writes_c = 0;
  long long fetch_a = 0;
  long long fetch_b = 0;
  long long buffer_evictions = 0;
  long long buffer_reads = 0;
  long long buffer_writes = 0;
  long long general_ops = 0;  // unpack/dequant or bias-correction instructions
  long long l1_accesses = 0;
  long long mul_issues_baseline = 0;  // FP16 multiplier issues
  long long mul_issues_parallel = 0;  // parallel FP-INT multiplier issues
  long long fp16_adds = 0;
  long long cycles = 0;
  long long stall_cycles = 0;

  long long fetch_instructions() const { return fetch_a + fetch_b; }
  long long rf_total() const {
    return rf_reads_a + rf_reads_b + rf_reads_c + rf_writes_c;
  }
  long long rf_total_without_c() const { return rf_reads_a + rf_reads_b; }
};

// Inputs for functional evaluation. Counters never depend on operand data,
// so simulate() also runs without operands attached.
struct Operands {
  std::vector<half::bits_t> a;             // m x k row-major
  const QuantizedWeights* qw = nullptr;    // packed flows + dequant of 4/2-bit
  PackDim pack_dim = PackDim::N;           // how qw is containerized
  const std::vector<half::bits_t>* w16 = nullptr;  // dequant flow at bits=16
};

struct SimConfig {
  GemmShape shape;
  FlowKind flow = FlowKind::NPackedPacq;
  int bits = 4;  // weight bits: 4/2 (16 allowed for DequantStandard only)
  GroupSpec group{32, 4};
  HwConfig hw{};
  pmul::AccumulatorPolicy policy = pmul::AccumulatorPolicy::WideExact;
  std::ostream* trace = nullptr;
};

struct SimResult {
  FlowCounters counters;
  std::vector<half::bits_t> c;  // m x n, empty for counters-only runs
  long long overflow_events = 0;
  long long cancellation_events = 0;
};

// ---------------------------------------------------------------------------
// Warp mapping: the m16n16k16 instruction splits over four octets in a 2x2
// (m, n) grid; each octet owns an 8x8 C block over the full k=16 and drives
// two DP units (rows 0-1 and 2-3 of each 4-row tile).

struct OctetTile {
  int octet = 0;
  int m0 = 0;  // row base within the warp tile
  int n0 = 0;  // column base
};

struct WarpSchedule {
  int grid_m = 1, grid_n = 1, grid_k = 1;
  std::vector<OctetTile> octets;  // the four per-instruction tiles
  long long length() const {
    return static_cast<long long>(grid_m) * grid_n * grid_k;
  }
};

inline WarpSchedule map_warp(const GemmShape& s) {
  validate_shape(s);
  WarpSchedule ws;
  ws.grid_m = s.m / 16;
  ws.grid_n = s.n / 16;
  ws.grid_k = s.k / 16;
  for (int o = 0; o < 4; ++o)
    ws.octets.push_back(OctetTile{o, 8 * (o / 2), 8 * (o % 2)});
  return ws;
}

// ---------------------------------------------------------------------------
namespace detail {

// Functional accumulation state. Wide policy: exact fixed-point partial
// sums, one rounding at the very end. FP16 policy: every product and every
// add rounds; segment flushes run the fused correction in FP16.
class Accum {
 public:
  Accum(int m, int n, int bits, int gk, pmul::AccumulatorPolicy policy,
        bool dequant_flow)
      : m_(m), n_(n), bits_(bits), gk_(gk), policy_(policy), dq_(dequant_flow) {
    std::size_t mn = static_cast<std::size_t>(m) * n;
    if (policy_ == pmul::AccumulatorPolicy::WideExact) {
      c_wide_.assign(mn, 0);
      seg_ab_.assign(mn, 0);
      seg_a_.assign(mn, 0);
    } else {
      c_f16_.assign(mn, half::kPosZero);
      seg_ab_f16_.assign(mn, half::kPosZero);
      seg_a_f16_.assign(mn, half::kPosZero);
    }
    seg_idx_.assign(mn, -1);
    scale_of_.assign(mn, half::kPosZero);
  }

  // Packed-flow term: a * (q + off) folded into the current k-segment.
  void add_packed_term(int i, int j, half::bits_t a, int qv, half::bits_t scale,
                       int k_global) {
    std::size_t at = idx(i, j);
    int seg = k_global / gk_;
    if (seg_idx_[at] != seg) {
      flush(i, j);
      seg_idx_[at] = seg;
    }
    scale_of_[at] = scale;
    int off = pmul::offset_constant(bits_);
    if (policy_ == pmul::AccumulatorPolicy::WideExact) {
      __int128 fa = pmul::fixed24(a);
      seg_ab_[at] += fa * (qv + off);
      seg_a_[at] += fa;
    } else {
      half::bits_t prod =
          half::mul(a, pmul::encode_biased_weight(qv, bits_), &flags_);
      seg_ab_f16_[at] = half::add(seg_ab_f16_[at], prod, &flags_);
      seg_a_f16_[at] = half::add(seg_a_f16_[at], a, &flags_);
      if (flags_.overflow) {
        ++overflow_events;
        flags_.overflow = false;
      }
    }
  }

  // Dequantized-flow term: a * w with w already in FP16.
  void add_dequant_term(int i, int j, half::bits_t a, half::bits_t w) {
    std::size_t at = idx(i, j);
    if (policy_ == pmul::AccumulatorPolicy::WideExact) {
      c_wide_[at] += pmul::fixed24(a) * pmul::fixed24(w);
    } else {
      half::bits_t prod = half::mul(a, w, &flags_);
      c_f16_[at] = half::add(c_f16_[at], prod, &flags_);
      if (flags_.overflow) {
        ++overflow_events;
        flags_.overflow = false;
      }
    }
  }

  // Correct and fold the open segment of output (i, j), e.g. at a partial-
  // sum writeback or a quantization-group boundary. Uses the scale recorded
  // for the open segment (group boundaries always flush first, so a segment
  // never straddles two scales).
  void flush(int i, int j) {
    std::size_t at = idx(i, j);
    if (seg_idx_[at] < 0) return;
    half::bits_t scale = scale_of_[at];
    if (policy_ == pmul::AccumulatorPolicy::WideExact) {
      if (seg_ab_[at] != 0 || seg_a_[at] != 0) {
        __int128 d =
            seg_ab_[at] - static_cast<__int128>(pmul::offset_constant(bits_)) *
                              seg_a_[at];
        auto ds = half::decompose(scale);
        // d is at 2^-24; fold d * sig_s * 2^(exp_s-10) into the 2^-64 grid.
        int shift = ds.exp - 10 + 40;
        __int128 term = d * static_cast<__int128>(ds.sig);
        c_wide_[at] += ds.sign ? -(term << shift) : (term << shift);
      }
      seg_ab_[at] = 0;
      seg_a_[at] = 0;
    } else {
      pmul::AccumValue ab{0, seg_ab_f16_[at]};
      pmul::AccumValue sa{0, seg_a_f16_[at]};
      pmul::DpFlags df;
      half::bits_t corr = pmul::fused_correct(
          ab, sa, scale, bits_, pmul::AccumulatorPolicy::Fp16Sequential, &df);
      if (df.cancellation) ++cancellation_events;
      if (df.arith.overflow) ++overflow_events;
      c_f16_[at] = half::add(c_f16_[at], corr, &flags_);
      seg_ab_f16_[at] = half::kPosZero;
      seg_a_f16_[at] = half::kPosZero;
    }
    seg_idx_[at] = -1;
  }

  std::vector<half::bits_t> finalize() {
    std::vector<half::bits_t> out(static_cast<std::size_t>(m_) * n_);
    for (std::size_t at = 0; at < out.size(); ++at) {
      if (policy_ == pmul::AccumulatorPolicy::WideExact) {
        __int128 v = c_wide_[at];
        bool sign = v < 0;
        unsigned __int128 mag = sign ? static_cast<unsigned __int128>(-v)
                                     : static_cast<unsigned __int128>(v);
        out[at] = half::round_from_wide(sign, mag, dq_ ? -48 : -64);
      } else {
        out[at] = c_f16_[at];
      }
    }
    return out;
  }

  long long overflow_events = 0;
  long long cancellation_events = 0;

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * n_ + j;
  }

  int m_, n_, bits_, gk_;
  pmul::AccumulatorPolicy policy_;
  bool dq_;
  half::Flags flags_;
  std::vector<__int128> c_wide_, seg_ab_, seg_a_;
  std::vector<half::bits_t> c_f16_, seg_ab_f16_, seg_a_f16_;
  std::vector<int> seg_idx_;
  std::vector<half::bits_t> scale_of_;  // scale of the open segment
};

}  // namespace detail

// ---------------------------------------------------------------------------
// The simulator.

class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg) : cfg_(cfg) {
    validate();
  }

  SimResult run(const Operands* data = nullptr) {
    SimResult res;
    std::optional<detail::Accum> acc;
    const std::vector<half::bits_t>* w16 = nullptr;
    std::vector<half::bits_t> dq_materialized;
    if (data) {
      check_operands(*data);
      acc.emplace(cfg_.shape.m, cfg_.shape.n, cfg_.bits, cfg_.group.gk,
                  cfg_.policy, cfg_.flow == FlowKind::DequantStandard);
      if (cfg_.flow == FlowKind::DequantStandard) {
        if (cfg_.bits == 16) {
          w16 = data->w16;
        } else {
          dq_materialized = dequantize(*data->qw);
          w16 = &dq_materialized;
        }
      }
    }
    const WarpSchedule ws = map_warp(cfg_.shape);
    // Outer grid: k, then m, with n innermost (documented iteration order).
    for (int ko = 0; ko < ws.grid_k; ++ko)
      for (int mo = 0; mo < ws.grid_m; ++mo)
        for (int no = 0; no < ws.grid_n; ++no)
          run_warp_instr(ko, mo, no, ws, data, acc ? &*acc : nullptr, w16, res);
    if (acc) {
      // Close any segments still open (k loop complete for every output).
      if (cfg_.flow != FlowKind::DequantStandard)
        for (int i = 0; i < cfg_.shape.m; ++i)
          for (int j = 0; j < cfg_.shape.n; ++j) acc->flush(i, j);
      res.c = acc->finalize();
      res.overflow_events = acc->overflow_events;
      res.cancellation_events = acc->cancellation_events;
    }
    return res;
  }

 private:
  void validate() const {
    validate_shape(cfg_.shape);
    if (cfg_.flow == FlowKind::DequantStandard) {
      if (cfg_.bits != 16 && cfg_.bits != 4 && cfg_.bits != 2)
        throw std::invalid_argument("dequant flow: bits must be 16, 4 or 2");
    } else if (cfg_.bits != 4 && cfg_.bits != 2) {
      throw std::invalid_argument("packed flows: bits must be 4 or 2");
    }
    int w = cfg_.hw.dp.dp_width;
    if (w != 4 && w != 8 && w != 16)
      throw std::invalid_argument("dp_width must be 4, 8 or 16");
    int d = cfg_.hw.dp.dup_factor;
    if (d != 1 && d != 2 && d != 4)
      throw std::invalid_argument("dup_factor must be 1, 2 or 4");
    if (cfg_.group.gk < 16 && 16 % cfg_.group.gk != 0)
      throw std::invalid_argument("gk must divide 16 or be a multiple of it");
    // Staged operand footprint (double-buffered A panel plus a B tile) must
    // fit an octet's share of the tensor-core operand buffers; otherwise the
    // configuration could not run eviction-free even for NPackedPacq.
    long long a_bits = 2LL * 4 * w * 16;  // two m4 x k_w FP16 panels
    long long b_bits = 2LL * 16 * 16;     // up to 16 staged containers
    if (a_bits + b_bits > cfg_.hw.buffer_bits / 2)
      throw std::invalid_argument("operand staging exceeds buffer capacity");
  }

  void check_operands(const Operands& d) const {
    std::size_t want_a =
        static_cast<std::size_t>(cfg_.shape.m) * cfg_.shape.k;
    if (d.a.size() != want_a)
      throw std::invalid_argument("operands: A extent mismatch");
    if (cfg_.flow == FlowKind::DequantStandard && cfg_.bits == 16) {
      if (!d.w16 || d.w16->size() != static_cast<std::size_t>(cfg_.shape.k) *
                                         cfg_.shape.n)
        throw std::invalid_argument("operands: FP16 weights missing");
      return;
    }
    if (!d.qw) throw std::invalid_argument("operands: quantized weights missing");
    if (d.qw->k != cfg_.shape.k || d.qw->n != cfg_.shape.n)
      throw std::invalid_argument("operands: weight extent mismatch");
    if (d.qw->bits != cfg_.bits)
      throw std::invalid_argument("operands: weight bit width mismatch");
    if (cfg_.flow == FlowKind::KPacked && d.pack_dim != PackDim::K)
      throw std::invalid_argument("kpack flow requires weights packed along k");
    if (cfg_.flow == FlowKind::NPackedPacq && d.pack_dim != PackDim::N)
      throw std::invalid_argument("npack flow requires weights packed along n");
  }

  bool tracing() const { return cfg_.trace != nullptr; }

  void trace(const char* ev, int octet, const std::string& rest) {
    (*cfg_.trace) << ev << " octet=" << octet << ' ' << rest << '\n';
  }

  // One m16n16k16 warp instruction at grid position (ko, mo, no).
  void run_warp_instr(int ko, int mo, int no, const WarpSchedule& ws,
                      const Operands* data, detail::Accum* acc,
                      const std::vector<half::bits_t>* w16, SimResult& res) {
    FlowCounters& ct = res.counters;
    const int lanes = cfg_.bits == 16 ? 1 : pmul::lanes_for(cfg_.bits);
    long long updates_per_dp = 0;
    long long stalls = 0;
    const bool carry_in = ko > 0;  // C partials already live in the RF

    for (const OctetTile& oc : ws.octets) {
      const int gm = mo * 16 + oc.m0;  // global row base of the octet tile
      const int gn = no * 16 + oc.n0;
      const int gk = ko * 16;
      switch (cfg_.flow) {
        case FlowKind::DequantStandard:
          walk_dequant(oc, gm, gn, gk, carry_in, data, acc, w16, ct,
                       oc.octet == 0 ? &updates_per_dp : nullptr);
          break;
        case FlowKind::KPacked:
          walk_kpacked(oc, gm, gn, gk, carry_in, data, acc, ct,
                       oc.octet == 0 ? &updates_per_dp : nullptr,
                       oc.octet == 0 ? &stalls : nullptr);
          break;
        case FlowKind::NPackedPacq:
          walk_npacked(oc, gm, gn, gk, carry_in, data, acc, ct,
                       oc.octet == 0 ? &updates_per_dp : nullptr);
          break;
      }
    }
    // NPackedPacq retires min(dup_factor, lanes) lane updates per cycle
    // (duplicated adder trees); the serial flows retire one per cycle.
    long long rate = 1;
    if (cfg_.flow == FlowKind::NPackedPacq) {
      rate = cfg_.hw.dp.dup_factor < lanes ? cfg_.hw.dp.dup_factor : lanes;
      if (rate < 1) rate = 1;
    }
    long long compute = (updates_per_dp + rate - 1) / rate;
    long long instr_cycles = cfg_.hw.dp.fill_latency + compute + stalls;
    if (cfg_.flow == FlowKind::DequantStandard && cfg_.bits != 16) {
      // General core unpacks+dequantizes the warp's B footprint serially.
      long long elems = 16LL * 16;
      ct.general_ops += elems;
      instr_cycles += elems * cfg_.hw.dequant_cost;
    }
    ct.cycles += instr_cycles;
    ct.stall_cycles += stalls;
  }

  // --- DequantStandard: weight-stationary movement, C spilled per k-step.
  void walk_dequant(const OctetTile& oc, int gm, int gn, int gk, bool carry_in,
                    const Operands* data, detail::Accum* acc,
                    const std::vector<half::bits_t>* w16, FlowCounters& ct,
                    long long* updates) {
    const int w = cfg_.hw.dp.dp_width;
    const int kt_steps = 16 / w;
    const long long tile_regs = 2LL * w;  // m4 x k_w or k_w x n4 in FP16
    for (int nt = 0; nt < 2; ++nt) {
      for (int kt = 0; kt < kt_steps; ++kt) {
        ct.fetch_b += 1;
        ct.rf_reads_b += tile_regs;
        ct.l1_accesses += tile_regs;
        ct.buffer_writes += tile_regs;
        if (tracing())
        trace("FETCH_B", oc.octet, "nt=" + std::to_string(nt) +
                                       " kt=" + std::to_string(kt) +
                                       " regs=" + std::to_string(tile_regs));
        for (int mt = 0; mt < 2; ++mt) {
          ct.fetch_a += 1;
          ct.rf_reads_a += tile_regs;
          ct.l1_accesses += tile_regs;
          ct.buffer_writes += tile_regs;
          ct.buffer_reads += 2 * tile_regs;  // stage A tile + re-read B tile
          ct.mul_issues_baseline += 16LL * w;
          ct.fp16_adds += 16LL * w;
          if (updates) *updates += 8;  // 2 rows x 4 cols per DP
          if (tracing())
            trace("DP_ISSUE", oc.octet,
                  "nt=" + std::to_string(nt) + " kt=" + std::to_string(kt) +
                      " mt=" + std::to_string(mt) + " updates=16");
          bool revisit = carry_in || kt > 0;
          if (revisit) ct.rf_reads_c += 8;
          ct.rf_writes_c += 8;
          if (acc) {
            for (int r = 0; r < 4; ++r)
              for (int c = 0; c < 4; ++c)
                for (int kk = 0; kk < w; ++kk) {
                  int i = gm + mt * 4 + r;
                  int j = gn + nt * 4 + c;
                  int kg = gk + kt * w + kk;
                  acc->add_dequant_term(
                      i, j, data->a[static_cast<std::size_t>(i) * cfg_.shape.k + kg],
                      (*w16)[static_cast<std::size_t>(kg) * cfg_.shape.n + j]);
                }
          }
        }
      }
    }
  }

  // --- KPacked: weight-stationary movement; k-slice gather; streamed A
  // staging drained per output column, re-staged for the remaining columns.
  void walk_kpacked(const OctetTile& oc, int gm, int gn, int gk, bool carry_in,
                    const Operands* data, detail::Accum* acc, FlowCounters& ct,
                    long long* updates, long long* stalls) {
    const int w = cfg_.hw.dp.dp_width;
    const int cnt = 16 / cfg_.bits;
    const int tile_k = cnt > w ? cnt : w;  // B-tile k extent (whole words)
    const int kw_steps = 16 / tile_k;
    const long long bt_words = 4LL * tile_k / cnt;  // 4 columns
    const long long bt_regs = (bt_words + 1) / 2;
    for (int nt = 0; nt < 2; ++nt) {
      for (int kws = 0; kws < kw_steps; ++kws) {
        ct.fetch_b += 1;
        ct.rf_reads_b += bt_regs;
        ct.l1_accesses += bt_regs;
        ct.buffer_writes += bt_regs;
        if (tracing())
        trace("FETCH_B", oc.octet, "nt=" + std::to_string(nt) +
                                       " kws=" + std::to_string(kws) +
                                       " words=" + std::to_string(bt_words));
        for (int mt = 0; mt < 2; ++mt) {
          // k-aligned slice gather: one fetch instruction per m4 x k1 slice.
          ct.fetch_a += tile_k;
          ct.rf_reads_a += 2LL * tile_k;
          ct.l1_accesses += 2LL * tile_k;
          ct.buffer_writes += 2LL * tile_k;
          ct.buffer_reads += bt_regs;  // B tile staged for this m-block
          if (tracing())
          trace("FETCH_A", oc.octet,
                "nt=" + std::to_string(nt) + " kws=" + std::to_string(kws) +
                    " mt=" + std::to_string(mt) +
                    " slices=" + std::to_string(tile_k));
          // Column-serial consumption of the staged B tile.
          for (int col = 0; col < 4; ++col) {
            ct.buffer_reads += 2LL * tile_k;  // (re-)stage the slice stream
            if (col > 0) {
              ct.buffer_evictions += tile_k;
              if (tracing())
              trace("EVICT_A", oc.octet,
                    "col=" + std::to_string(col) +
                        " slices=" + std::to_string(tile_k));
              if (stalls && tile_k > 2 * w) *stalls += 1;
            }
            ct.mul_issues_parallel += 4LL * tile_k;  // one lane per issue
            ct.fp16_adds += 4LL * tile_k;
            if (tracing())
              trace("DP_ISSUE", oc.octet,
                    "nt=" + std::to_string(nt) + " kws=" + std::to_string(kws) +
                        " mt=" + std::to_string(mt) +
                        " col=" + std::to_string(col) +
                        " issues=" + std::to_string(4 * tile_k));
            if (acc) {
              for (int r = 0; r < 4; ++r)
                for (int kk = 0; kk < tile_k; ++kk) {
                  int i = gm + mt * 4 + r;
                  int j = gn + nt * 4 + col;
                  int kg = gk + kws * tile_k + kk;
                  acc->add_packed_term(
                      i, j,
                      data->a[static_cast<std::size_t>(i) * cfg_.shape.k + kg],
                      data->qw->value_at(kg, j), data->qw->scale_at(kg, j), kg);
                }
            }
          }
          if (updates) *updates += 2LL * 4 * (tile_k / w);
          bool revisit = carry_in || kws > 0;
          if (revisit) ct.rf_reads_c += 8;
          ct.rf_writes_c += 8;
          ct.general_ops += 3LL * 16;  // bias correction at every writeback
          if (acc) {
            for (int r = 0; r < 4; ++r)
              for (int col = 0; col < 4; ++col)
                acc->flush(gm + mt * 4 + r, gn + nt * 4 + col);
          }
          if (tracing())
          trace("C_WRITE", oc.octet, "nt=" + std::to_string(nt) +
                                         " kws=" + std::to_string(kws) +
                                         " mt=" + std::to_string(mt));
        }
      }
    }
  }

  // --- NPackedPacq: output-stationary movement; parallel lane consumption.
  void walk_npacked(const OctetTile& oc, int gm, int gn, int gk, bool carry_in,
                    const Operands* data, detail::Accum* acc, FlowCounters& ct,
                    long long* updates) {
    const int w = cfg_.hw.dp.dp_width;
    const int lanes = pmul::lanes_for(cfg_.bits);
    const int kt_steps = 16 / w;
    const int n_groups = 8 / lanes > 0 ? 8 / lanes : 1;
    const long long a_regs = 2LL * w;
    const long long b_regs = (static_cast<long long>(w) * lanes * cfg_.bits + 31) / 32;
    const long long c_regs = 2LL * lanes;  // m4 x lanes FP16 outputs
    for (int ng = 0; ng < n_groups; ++ng) {
      for (int mt = 0; mt < 2; ++mt) {
        if (carry_in) ct.rf_reads_c += c_regs;
        for (int kt = 0; kt < kt_steps; ++kt) {
          ct.fetch_a += 1;
          ct.rf_reads_a += a_regs;
          ct.l1_accesses += a_regs;
          ct.buffer_writes += a_regs;
          ct.buffer_reads += a_regs;
          if (tracing())
          trace("FETCH_A", oc.octet, "ng=" + std::to_string(ng) +
                                         " mt=" + std::to_string(mt) +
                                         " kt=" + std::to_string(kt));
          if (mt == 0) {
            ct.fetch_b += 1;
            ct.rf_reads_b += b_regs;
            ct.l1_accesses += b_regs;
            ct.buffer_writes += b_regs;
            if (tracing())
            trace("FETCH_B", oc.octet, "ng=" + std::to_string(ng) +
                                           " kt=" + std::to_string(kt) +
                                           " regs=" + std::to_string(b_regs));
          }
          ct.buffer_reads += b_regs;  // words staged for this m-block
          ct.mul_issues_parallel += 4LL * w;         // one issue per (row, k)
          ct.fp16_adds += 4LL * w * lanes;           // adder trees
          if (updates) *updates += 2LL * lanes;      // per DP: 2 rows x lanes
          if (tracing())
            trace("DP_ISSUE", oc.octet,
                  "ng=" + std::to_string(ng) + " mt=" + std::to_string(mt) +
                      " kt=" + std::to_string(kt) +
                      " issues=" + std::to_string(4 * w) +
                      " lanes=" + std::to_string(lanes));
          if (acc) {
            for (int r = 0; r < 4; ++r)
              for (int lane = 0; lane < lanes; ++lane)
                for (int kk = 0; kk < w; ++kk) {
                  int i = gm + mt * 4 + r;
                  int j = gn + ng * lanes + lane;
                  int kg = gk + kt * w + kk;
                  acc->add_packed_term(
                      i, j,
                      data->a[static_cast<std::size_t>(i) * cfg_.shape.k + kg],
                      data->qw->value_at(kg, j), data->qw->scale_at(kg, j), kg);
                }
          }
        }
        // Output-stationary: one writeback after the whole k loop.
        ct.rf_writes_c += c_regs;
        ct.general_ops += 3LL * 4 * lanes;
        if (acc) {
          for (int r = 0; r < 4; ++r)
            for (int lane = 0; lane < lanes; ++lane)
              acc->flush(gm + mt * 4 + r, gn + ng * lanes + lane);
        }
        if (tracing())
        trace("C_WRITE", oc.octet,
              "ng=" + std::to_string(ng) + " mt=" + std::to_string(mt));
      }
    }
  }

  SimConfig cfg_;
};

inline SimResult simulate(const SimConfig& cfg, const Operands* data = nullptr) {
  Simulator sim(cfg);
  return sim.run(data);
}

// ---------------------------------------------------------------------------
// Flow comparison: counters for the three flows at equal shape/bits, with
// ratios normalized to the dequantization baseline.

struct FlowComparison {
  FlowCounters dequant, kpacked, npacked;
  double rf_ratio_kpacked = 0;  // vs dequant = 1.0
  double rf_ratio_npacked = 0;
  double cycle_ratio_kpacked = 0;
  double cycle_ratio_npacked = 0;
  // Reduction of NPackedPacq vs KPacked, both C-inclusive and C-exclusive.
  double np_vs_kp_rf_reduction_with_c = 0;
  double np_vs_kp_rf_reduction_without_c = 0;
  double speedup_kp_over_np = 0;  // cycles(KPacked) / cycles(NPackedPacq)
};

inline FlowComparison compare_flows(const GemmShape& shape, const HwConfig& hw,
                                    int bits) {
  SimConfig c;
  c.shape = shape;
  c.bits = bits;
  c.hw = hw;
  c.flow = FlowKind::DequantStandard;
  FlowComparison out;
  out.dequant = simulate(c).counters;
  c.flow = FlowKind::KPacked;
  out.kpacked = simulate(c).counters;
  c.flow = FlowKind::NPackedPacq;
  out.npacked = simulate(c).counters;
  auto ratio = [](long long a, long long b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  out.rf_ratio_kpacked = ratio(out.kpacked.rf_total(), out.dequant.rf_total());
  out.rf_ratio_npacked = ratio(out.npacked.rf_total(), out.dequant.rf_total());
  out.cycle_ratio_kpacked = ratio(out.kpacked.cycles, out.dequant.cycles);
  out.cycle_ratio_npacked = ratio(out.npacked.cycles, out.dequant.cycles);
  out.np_vs_kp_rf_reduction_with_c =
      1.0 - ratio(out.npacked.rf_total(), out.kpacked.rf_total());
  out.np_vs_kp_rf_reduction_without_c =
      1.0 - ratio(out.npacked.rf_total_without_c(),
                  out.kpacked.rf_total_without_c());
  out.speedup_kp_over_np = ratio(out.kpacked.cycles, out.npacked.cycles);
  return out;
}

}  // namespace pacq::dataflow
