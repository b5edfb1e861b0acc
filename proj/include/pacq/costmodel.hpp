#pragma once
// Linear event-cost energy model over FlowCounters, and energy-delay
// product (EDP) reports. The shipped default parameters are ILLUSTRATIVE
// relative magnitudes (a parallel multiplier issue costs a bit more than a
// baseline FP16 multiply, register-file and L1 accesses dominate datapath
// ops); absolute joules are intentionally not claimed, and every result
// derived from them should be read as a ratio between flows.

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pacq/dataflow.hpp"

namespace pacq::costmodel {

struct CostParams {
  double rf_access = 1.0;           // pJ per 32-bit register-file access
  double buffer_access = 0.3;       // pJ per operand-buffer register access
  double fp16_mul = 1.0;            // pJ per baseline FP16 multiply
  double parallel_mul_issue = 1.3;  // pJ per parallel FP-INT multiplier issue
  double fp16_add = 0.3;            // pJ per FP16 adder-tree operation
  double general_op = 1.0;          // pJ per general-core instruction
  double l1_access = 2.0;           // pJ per 32-bit L1 access
  double static_per_cycle = 0.0;    // pJ leakage per cycle (optional)

  void check() const {
    for (double v : {rf_access, buffer_access, fp16_mul, parallel_mul_issue,
                     fp16_add, general_op, l1_access, static_per_cycle})
      if (v < 0 || !std::isfinite(v))
        throw std::invalid_argument("cost parameters must be nonnegative");
  }
};

struct EnergyBreakdown {
  double rf = 0, buffer = 0, mul = 0, add = 0, general = 0, l1 = 0, leak = 0;
  double total() const { return rf + buffer + mul + add + general + l1 + leak; }
};

inline EnergyBreakdown energy(const dataflow::FlowCounters& c,
                              const CostParams& p) {
  p.check();
  EnergyBreakdown e;
  e.rf = static_cast<double>(c.rf_total()) * p.rf_access;
  e.buffer = static_cast<double>(c.buffer_reads + c.buffer_writes) * p.buffer_access;
  e.mul = static_cast<double>(c.mul_issues_baseline) * p.fp16_mul +
          static_cast<double>(c.mul_issues_parallel) * p.parallel_mul_issue;
  e.add = static_cast<double>(c.fp16_adds) * p.fp16_add;
  e.general = static_cast<double>(c.general_ops) * p.general_op;
  e.l1 = static_cast<double>(c.l1_accesses) * p.l1_access;
  e.leak = static_cast<double>(c.cycles) * p.static_per_cycle;
  return e;
}

struct EdpReport {
  EnergyBreakdown breakdown;
  double energy_total = 0;
  long long cycles = 0;
  double edp = 0;
  // Ratios against named baseline flows; 0 when no baseline was supplied.
  double edp_vs_dequant = 0;
  double edp_vs_kpacked = 0;
};

inline EdpReport edp(const EnergyBreakdown& e, long long cycles) {
  EdpReport r;
  r.breakdown = e;
  r.energy_total = e.total();
  r.cycles = cycles;
  r.edp = r.energy_total * static_cast<double>(cycles);
  return r;
}

// Energy/EDP for all three flows at one workload, with PacQ's ratios filled.
struct FlowEdp {
  EdpReport dequant, kpacked, npacked;
};

inline FlowEdp compare_edp(const dataflow::GemmShape& shape,
                           const dataflow::HwConfig& hw, int bits,
                           const CostParams& p) {
  auto cmp = dataflow::compare_flows(shape, hw, bits);
  FlowEdp out;
  out.dequant = edp(energy(cmp.dequant, p), cmp.dequant.cycles);
  out.kpacked = edp(energy(cmp.kpacked, p), cmp.kpacked.cycles);
  out.npacked = edp(energy(cmp.npacked, p), cmp.npacked.cycles);
  out.npacked.edp_vs_dequant = out.dequant.edp > 0 ? out.npacked.edp / out.dequant.edp : 0;
  out.npacked.edp_vs_kpacked = out.kpacked.edp > 0 ? out.npacked.edp / out.kpacked.edp : 0;
  out.kpacked.edp_vs_dequant = out.dequant.edp > 0 ? out.kpacked.edp / out.dequant.edp : 0;
  return out;
}

// Throughput-per-Watt under two normalizations (the figure-of-merit can be
// normalized by per-operation energy or by average unit power; both are
// reported since published comparisons rarely say which one they use).
struct ThroughputPerWatt {
  double per_op_energy = 0;    // useful MACs / pJ
  double per_unit_power = 0;   // (MACs/cycle) / (pJ/cycle)
};

inline ThroughputPerWatt throughput_per_watt(const dataflow::GemmShape& s,
                                             const EdpReport& r) {
  ThroughputPerWatt t;
  double macs = static_cast<double>(s.m) * s.n * s.k;
  if (r.energy_total > 0) {
    t.per_op_energy = macs / r.energy_total;
    double avg_power = r.energy_total / static_cast<double>(r.cycles);
    t.per_unit_power = (macs / static_cast<double>(r.cycles)) / avg_power;
  }
  return t;
}

// --- key = value parameter files -------------------------------------------

inline const std::map<std::string, double CostParams::*>& param_keys() {
  static const std::map<std::string, double CostParams::*> keys = {
      {"rf_access_pj", &CostParams::rf_access},
      {"buffer_access_pj", &CostParams::buffer_access},
      {"fp16_mul_pj", &CostParams::fp16_mul},
      {"parallel_mul_issue_pj", &CostParams::parallel_mul_issue},
      {"fp16_add_pj", &CostParams::fp16_add},
      {"general_op_pj", &CostParams::general_op},
      {"l1_access_pj", &CostParams::l1_access},
      {"static_pj_per_cycle", &CostParams::static_per_cycle},
  };
  return keys;
}

inline CostParams load_cost_params(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open cost file: " + path);
  CostParams p;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, eq;
    double value;
    if (!(ls >> key)) continue;  // blank
    if (!(ls >> eq >> value) || eq != "=")
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    auto it = param_keys().find(key);
    if (it == param_keys().end())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown cost key '" + key + "'");
    p.*(it->second) = value;
  }
  p.check();
  return p;
}

inline void save_cost_params(const std::string& path, const CostParams& p) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open cost file for write: " + path);
  os << "# energy model parameters (illustrative picojoules per event)\n";
  for (const auto& [key, member] : param_keys())
    os << key << " = " << p.*member << "\n";
}

}  // namespace pacq::costmodel
