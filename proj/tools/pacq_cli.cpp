// pacq: experiment driver for the hyper-asymmetric GEMM simulator.
//
// Subcommands:
//   verify-mul   exhaustive parallel-multiplier equivalence check
//   quantize     RTN-quantize a raw float32 matrix into a packed weight file
//   gemm         run one functional GEMM and compare against the exact oracle
//   simulate     counters + energy/EDP for the three flows at one workload
//   sweep        one-axis ablation producing a plot-ready CSV
//
// Outputs are deterministic for a fixed seed; every report records the
// rounding mode (nearest-even) and a schema version.

#include <algorithm>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pacq/costmodel.hpp"
#include "pacq/dataflow.hpp"
#include "pacq/half.hpp"
#include "pacq/oracle.hpp"
#include "pacq/pmul.hpp"
#include "pacq/quant.hpp"
#include "pacq/rng.hpp"
#include "pacq/weightfile.hpp"

using json = nlohmann::json;
using namespace pacq;
namespace df = pacq::dataflow;
namespace cm = pacq::costmodel;
namespace h = pacq::half;

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kRounding = "nearest-even";

struct Options {
  std::string shape = "16x16x16";
  std::string flow = "npack";
  int bits = 4;
  std::string group = "32x4";
  int dup = 2;
  int dp = 4;
  std::string acc = "wide";
  std::string cost_file;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string format = "csv";  // csv | json | both
  std::string trace_file;
};

df::GemmShape parse_shape(const std::string& s) {
  df::GemmShape g;
  char x1, x2;
  std::istringstream is(s);
  if (!(is >> g.m >> x1 >> g.n >> x2 >> g.k) || x1 != 'x' || x2 != 'x')
    throw CLI::ValidationError("--shape", "expected MxNxK, e.g. 16x4096x4096");
  return g;
}

GroupSpec parse_group(const std::string& s) {
  GroupSpec g;
  char x;
  std::istringstream is(s);
  if (!(is >> g.gk >> x >> g.gn) || x != 'x')
    throw CLI::ValidationError("--group", "expected GKxGN, e.g. 32x4");
  return g;
}

df::FlowKind parse_flow(const std::string& s) {
  if (s == "dequant") return df::FlowKind::DequantStandard;
  if (s == "kpack") return df::FlowKind::KPacked;
  if (s == "npack") return df::FlowKind::NPackedPacq;
  throw CLI::ValidationError("--flow", "must be dequant, kpack or npack");
}

df::SimConfig make_sim_config(const Options& o) {
  df::SimConfig c;
  c.shape = parse_shape(o.shape);
  c.flow = parse_flow(o.flow);
  c.bits = o.bits;
  c.group = parse_group(o.group);
  c.hw.dp.dup_factor = o.dup;
  c.hw.dp.dp_width = o.dp;
  c.policy = o.acc == "wide" ? pmul::AccumulatorPolicy::WideExact
                             : pmul::AccumulatorPolicy::Fp16Sequential;
  return c;
}

cm::CostParams cost_params_for(const Options& o) {
  if (o.cost_file.empty()) return {};
  return cm::load_cost_params(o.cost_file);
}

// Deterministic operands: activations uniform in [-2, 2] (FP16, subnormals
// flushed), weights uniform in [-1, 1] quantized by the RTN quantizer.
struct GemmInputs {
  std::vector<h::bits_t> a;
  QuantizedWeights qw;
};

GemmInputs make_inputs(const df::GemmShape& s, int bits, const GroupSpec& g,
                       std::uint64_t seed) {
  SplitMix64 rng(seed);
  GemmInputs in;
  in.a.resize(static_cast<std::size_t>(s.m) * s.k);
  for (auto& x : in.a) x = rng.activation();
  WeightMatrix w;
  w.k = s.k;
  w.n = s.n;
  w.data.resize(static_cast<std::size_t>(s.k) * s.n);
  for (auto& x : w.data) x = rng.uniform(-1.0, 1.0);
  GroupSpec eff = g;
  if (s.k % eff.gk != 0) eff.gk = s.k;  // clamp toy groups to the matrix
  if (s.n % eff.gn != 0) eff.gn = 1;
  in.qw = rtn_quantize(w, bits == 16 ? 4 : bits, eff);
  return in;
}

int ulp_distance(h::bits_t a, h::bits_t b) {
  auto key = [](h::bits_t v) {
    int mag = v & 0x7FFF;
    return (v & 0x8000) ? 0x8000 - mag : 0x8000 + mag;
  };
  return std::abs(key(a) - key(b));
}

json counters_json(const df::FlowCounters& c) {
  return json{{"rf_reads_a", c.rf_reads_a},
              {"rf_reads_b", c.rf_reads_b},
              {"rf_reads_c", c.rf_reads_c},
              {"rf_writes_c", c.rf_writes_c},
              {"rf_total", c.rf_total()},
              {"rf_total_without_c", c.rf_total_without_c()},
              {"fetch_instructions", c.fetch_instructions()},
              {"fetch_a", c.fetch_a},
              {"fetch_b", c.fetch_b},
              {"buffer_evictions", c.buffer_evictions},
              {"buffer_reads", c.buffer_reads},
              {"buffer_writes", c.buffer_writes},
              {"general_ops", c.general_ops},
              {"l1_accesses", c.l1_accesses},
              {"mul_issues_baseline", c.mul_issues_baseline},
              {"mul_issues_parallel", c.mul_issues_parallel},
              {"fp16_adds", c.fp16_adds},
              {"stall_cycles", c.stall_cycles},
              {"cycles", c.cycles}};
}

json edp_json(const cm::EdpReport& r) {
  return json{{"energy_total", r.energy_total},
              {"energy_rf", r.breakdown.rf},
              {"energy_buffer", r.breakdown.buffer},
              {"energy_mul", r.breakdown.mul},
              {"energy_add", r.breakdown.add},
              {"energy_general", r.breakdown.general},
              {"energy_l1", r.breakdown.l1},
              {"energy_static", r.breakdown.leak},
              {"cycles", r.cycles},
              {"edp", r.edp}};
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << body;
}

std::string out_path(const Options& o, const std::string& name) {
  std::filesystem::create_directories(o.out_dir);
  return (std::filesystem::path(o.out_dir) / name).string();
}

// --------------------------------------------------------------------------
int cmd_verify_mul(int bits) {
  long long total_mismatch = 0;
  for (int b : bits == 0 ? std::vector<int>{4, 2} : std::vector<int>{bits}) {
    auto rep = pmul::verify_lane_equivalence(b);
    std::printf(
        "verify-mul INT%d: %lld cases, %lld mismatches, %lld carry events "
        "(throughput x%d per multiplier)\n",
        b, rep.cases, rep.mismatches, rep.carry_events,
        pmul::products_per_cycle(b));
    if (rep.mismatches)
      std::printf("  first mismatch: a=0x%04X b=%d\n", rep.first_mismatch_a,
                  rep.first_mismatch_b);
    total_mismatch += rep.mismatches;
  }
  return total_mismatch == 0 ? 0 : 1;
}

int cmd_quantize(const std::string& input, const std::string& dims_str,
                 const Options& o) {
  char x;
  int k = 0, n = 0;
  std::istringstream is(dims_str);
  if (!(is >> k >> x >> n) || x != 'x')
    throw CLI::ValidationError("--dims", "expected KxN, e.g. 128x128");
  std::ifstream f(input, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + input);
  WeightMatrix w;
  w.k = k;
  w.n = n;
  w.data.resize(static_cast<std::size_t>(k) * n);
  std::vector<float> raw(w.data.size());
  f.read(reinterpret_cast<char*>(raw.data()),
         static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!f) throw std::runtime_error("short read (want k*n float32): " + input);
  std::copy(raw.begin(), raw.end(), w.data.begin());

  GroupSpec g = parse_group(o.group);
  auto q = rtn_quantize(w, o.bits, g);
  PackDim dim = o.flow == "kpack" ? PackDim::K : PackDim::N;
  std::string out = out_path(o, "weights.pqw");
  save_weights(out, q, dim);

  // Per-group round-trip error statistics.
  auto dq = dequantize(q);
  std::vector<double> group_max(q.scales.size(), 0.0);
  double max_err = 0, sum_err = 0;
  for (int ki = 0; ki < k; ++ki)
    for (int ni = 0; ni < n; ++ni) {
      double e = std::abs(h::decode(dq[static_cast<std::size_t>(ki) * n + ni]) -
                          w.at(ki, ni));
      std::size_t gi = static_cast<std::size_t>(ki / g.gk) * q.groups_n() +
                       static_cast<std::size_t>(ni / g.gn);
      group_max[gi] = std::max(group_max[gi], e);
      max_err = std::max(max_err, e);
      sum_err += e;
    }
  std::sort(group_max.begin(), group_max.end());
  std::printf("quantize: %dx%d -> %s (bits=%d, groups %dx%d = %zu scales, "
              "pack dim %s)\n",
              k, n, out.c_str(), o.bits, g.gk, g.gn, q.scales.size(),
              dim == PackDim::K ? "k" : "n");
  std::printf("round-trip error: mean %.6g, max %.6g\n",
              sum_err / static_cast<double>(w.data.size()), max_err);
  std::printf("per-group max error: min %.6g, median %.6g, max %.6g\n",
              group_max.front(), group_max[group_max.size() / 2],
              group_max.back());
  return 0;
}

int cmd_gemm(const Options& o) {
  df::SimConfig cfg = make_sim_config(o);
  auto in = make_inputs(cfg.shape, cfg.bits, cfg.group, o.seed);
  cfg.group = in.qw.group;
  std::ofstream trace;
  if (!o.trace_file.empty()) {
    trace.open(o.trace_file);
    cfg.trace = &trace;
  }
  df::Operands ops;
  ops.a = in.a;
  std::vector<h::bits_t> w16;
  if (cfg.flow == df::FlowKind::DequantStandard && cfg.bits == 16) {
    w16 = dequantize(in.qw);
    ops.w16 = &w16;
  } else {
    ops.qw = &in.qw;
    ops.pack_dim = cfg.flow == df::FlowKind::KPacked ? PackDim::K : PackDim::N;
  }
  auto res = df::simulate(cfg, &ops);

  std::vector<h::bits_t> want;
  if (cfg.flow == df::FlowKind::DequantStandard) {
    auto wf = cfg.bits == 16 ? w16 : dequantize(in.qw);
    want = oracle::gemm_exact_fp16(in.a, cfg.shape.m, cfg.shape.k, wf, cfg.shape.n);
  } else {
    want = oracle::gemm_exact_dequant(in.a, cfg.shape.m, cfg.shape.k, in.qw);
  }

  std::string cpath = out_path(o, "c.bin");
  std::string body(res.c.size() * 2, '\0');
  for (std::size_t i = 0; i < res.c.size(); ++i) {
    body[2 * i] = static_cast<char>(res.c[i] & 0xFF);
    body[2 * i + 1] = static_cast<char>(res.c[i] >> 8);
  }
  write_file(cpath, body);

  if (cfg.policy == pmul::AccumulatorPolicy::WideExact) {
    long long mismatches = 0;
    for (std::size_t i = 0; i < want.size(); ++i)
      if (res.c[i] != want[i]) ++mismatches;
    std::printf("gemm %s %s bits=%d seed=%" PRIu64
                ": %s (%lld/%zu mismatches) -> %s [rounding %s]\n",
                o.shape.c_str(), o.flow.c_str(), o.bits, o.seed,
                mismatches == 0 ? "PASS" : "FAIL", mismatches, want.size(),
                cpath.c_str(), kRounding);
    return mismatches == 0 ? 0 : 1;
  }
  int max_ulp = 0;
  for (std::size_t i = 0; i < want.size(); ++i)
    max_ulp = std::max(max_ulp, ulp_distance(res.c[i], want[i]));
  std::printf("gemm %s %s bits=%d seed=%" PRIu64
              ": fp16-sequential max deviation %d ulp "
              "(%lld overflow, %lld cancellation events) -> %s\n",
              o.shape.c_str(), o.flow.c_str(), o.bits, o.seed, max_ulp,
              res.overflow_events, res.cancellation_events, cpath.c_str());
  return 0;
}

std::string simulate_csv(const df::GemmShape& s, int bits,
                         const df::FlowComparison& cmp, const cm::FlowEdp& e) {
  std::ostringstream os;
  os << "# rounding=" << kRounding << " schema=" << kSchemaVersion << "\n";
  os << "flow,bits,m,n,k,rf_reads_a,rf_reads_b,rf_reads_c,rf_writes_c,"
        "rf_total,rf_total_without_c,fetch_a,fetch_b,buffer_evictions,"
        "buffer_reads,buffer_writes,general_ops,l1_accesses,"
        "mul_issues_baseline,mul_issues_parallel,fp16_adds,stall_cycles,"
        "cycles,energy_rf,energy_buffer,energy_mul,energy_add,"
        "energy_general,energy_l1,energy_static,energy_total,edp,"
        "rf_ratio_vs_dequant,edp_ratio_vs_dequant,edp_ratio_vs_kpack\n";
  auto row = [&](const char* name, const df::FlowCounters& c,
                 const cm::EdpReport& r) {
    double rf_ratio = cmp.dequant.rf_total()
                          ? static_cast<double>(c.rf_total()) /
                                static_cast<double>(cmp.dequant.rf_total())
                          : 0.0;
    double edp_ratio = e.dequant.edp > 0 ? r.edp / e.dequant.edp : 0.0;
    double edp_ratio_kp = e.kpacked.edp > 0 ? r.edp / e.kpacked.edp : 0.0;
    os << name << ',' << bits << ',' << s.m << ',' << s.n << ',' << s.k << ','
       << c.rf_reads_a << ',' << c.rf_reads_b << ',' << c.rf_reads_c << ','
       << c.rf_writes_c << ',' << c.rf_total() << ','
       << c.rf_total_without_c() << ',' << c.fetch_a << ',' << c.fetch_b << ','
       << c.buffer_evictions << ',' << c.buffer_reads << ','
       << c.buffer_writes << ',' << c.general_ops << ',' << c.l1_accesses
       << ',' << c.mul_issues_baseline << ',' << c.mul_issues_parallel << ','
       << c.fp16_adds << ',' << c.stall_cycles << ',' << c.cycles << ','
       << r.breakdown.rf << ',' << r.breakdown.buffer << ',' << r.breakdown.mul
       << ',' << r.breakdown.add << ',' << r.breakdown.general << ','
       << r.breakdown.l1 << ',' << r.breakdown.leak << ',' << r.energy_total
       << ',' << r.edp << ',' << rf_ratio << ',' << edp_ratio << ','
       << edp_ratio_kp << '\n';
  };
  row("dequant", cmp.dequant, e.dequant);
  row("kpack", cmp.kpacked, e.kpacked);
  row("npack", cmp.npacked, e.npacked);
  return os.str();
}

int cmd_simulate(const Options& o) {
  df::SimConfig cfg = make_sim_config(o);
  auto params = cost_params_for(o);
  if (!o.trace_file.empty()) {
    std::ofstream trace(o.trace_file);
    df::SimConfig tc = cfg;
    tc.bits = cfg.bits == 16 ? 4 : cfg.bits;
    tc.trace = &trace;
    df::simulate(tc);
  }
  auto cmp = df::compare_flows(cfg.shape, cfg.hw, cfg.bits == 16 ? 4 : cfg.bits);
  auto e = cm::compare_edp(cfg.shape, cfg.hw, cfg.bits == 16 ? 4 : cfg.bits,
                           params);
  if (o.format == "csv" || o.format == "both")
    write_file(out_path(o, "simulate.csv"),
               simulate_csv(cfg.shape, cfg.bits, cmp, e));
  if (o.format == "json" || o.format == "both") {
    json j{{"schema_version", kSchemaVersion},
           {"rounding", kRounding},
           {"shape", {{"m", cfg.shape.m}, {"n", cfg.shape.n}, {"k", cfg.shape.k}}},
           {"bits", cfg.bits},
           {"flows",
            {{"dequant",
              {{"counters", counters_json(cmp.dequant)},
               {"energy", edp_json(e.dequant)}}},
             {"kpack",
              {{"counters", counters_json(cmp.kpacked)},
               {"energy", edp_json(e.kpacked)}}},
             {"npack",
              {{"counters", counters_json(cmp.npacked)},
               {"energy", edp_json(e.npacked)}}}}},
           {"np_vs_kp_rf_reduction_with_c", cmp.np_vs_kp_rf_reduction_with_c},
           {"np_vs_kp_rf_reduction_without_c",
            cmp.np_vs_kp_rf_reduction_without_c},
           {"speedup_kp_over_np", cmp.speedup_kp_over_np},
           {"edp_np_vs_dequant", e.npacked.edp_vs_dequant},
           {"edp_np_vs_kpack", e.npacked.edp_vs_kpacked}};
    write_file(out_path(o, "simulate.json"), j.dump(2) + "\n");
  }
  std::printf("simulate %s bits=%d:\n", o.shape.c_str(), o.bits);
  std::printf("  rf reduction npack vs kpack: %.2f%% with C, %.2f%% without C\n",
              100.0 * cmp.np_vs_kp_rf_reduction_with_c,
              100.0 * cmp.np_vs_kp_rf_reduction_without_c);
  std::printf("  speedup kpack/npack: %.3fx\n", cmp.speedup_kp_over_np);
  std::printf("  EDP npack/dequant: %.4f, npack/kpack: %.4f\n",
              e.npacked.edp_vs_dequant, e.npacked.edp_vs_kpacked);
  return 0;
}

int cmd_sweep(const Options& o, const std::string& axis,
              const std::string& values_csv) {
  auto params = cost_params_for(o);
  std::vector<std::string> values;
  std::stringstream vs(values_csv);
  std::string item;
  while (std::getline(vs, item, ','))
    if (!item.empty()) values.push_back(item);
  if (values.empty())
    throw CLI::ValidationError("--values", "axis value list is empty");

  std::ostringstream os;
  os << "# rounding=" << kRounding << " schema=" << kSchemaVersion
     << " axis=" << axis << "\n";
  os << "axis,value,bits,m,n,k,dp_width,dup_factor,"
        "cycles_dequant,cycles_kpack,cycles_npack,"
        "energy_dequant,energy_kpack,energy_npack,"
        "edp_dequant,edp_kpack,edp_npack,"
        "speedup_kp_over_np,tputw_np_per_op,tputw_np_per_unit\n";
  for (const auto& v : values) {
    Options pt = o;
    df::GemmShape shape = parse_shape(pt.shape);
    int bits = pt.bits;
    df::HwConfig hw;
    hw.dp.dup_factor = pt.dup;
    hw.dp.dp_width = pt.dp;
    if (axis == "dup_factor") hw.dp.dup_factor = std::stoi(v);
    else if (axis == "dp_width") hw.dp.dp_width = std::stoi(v);
    else if (axis == "bits") bits = std::stoi(v);
    else if (axis == "shape") shape = parse_shape(v);
    else throw CLI::ValidationError("--axis", "unknown axis " + axis);

    auto cmp = df::compare_flows(shape, hw, bits);
    cm::FlowEdp e;
    e.dequant = cm::edp(cm::energy(cmp.dequant, params), cmp.dequant.cycles);
    e.kpacked = cm::edp(cm::energy(cmp.kpacked, params), cmp.kpacked.cycles);
    e.npacked = cm::edp(cm::energy(cmp.npacked, params), cmp.npacked.cycles);
    auto tw = cm::throughput_per_watt(shape, e.npacked);
    os << axis << ',' << v << ',' << bits << ',' << shape.m << ',' << shape.n
       << ',' << shape.k << ',' << hw.dp.dp_width << ',' << hw.dp.dup_factor
       << ',' << cmp.dequant.cycles << ',' << cmp.kpacked.cycles << ','
       << cmp.npacked.cycles << ',' << e.dequant.energy_total << ','
       << e.kpacked.energy_total << ',' << e.npacked.energy_total << ','
       << e.dequant.edp << ',' << e.kpacked.edp << ',' << e.npacked.edp << ','
       << cmp.speedup_kp_over_np << ',' << tw.per_op_energy << ','
       << tw.per_unit_power << '\n';
  }
  std::string path = out_path(o, "sweep.csv");
  write_file(path, os.str());
  std::printf("sweep %s over {%s} -> %s\n", axis.c_str(), values_csv.c_str(),
              path.c_str());
  return 0;
}

void add_common(CLI::App* sub, Options& o) {
  sub->configurable();
  sub->add_option("--shape", o.shape, "workload MxNxK (multiples of 16)");
  sub->add_option("--flow", o.flow, "dequant | kpack | npack")
      ->check(CLI::IsMember({"dequant", "kpack", "npack"}));
  sub->add_option("--bits", o.bits, "weight bits: 16, 4 or 2")
      ->check(CLI::IsMember({16, 4, 2}));
  sub->add_option("--group", o.group, "quantization group GKxGN");
  sub->add_option("--dup", o.dup, "adder-tree duplication factor")
      ->check(CLI::IsMember({1, 2, 4}));
  sub->add_option("--dp", o.dp, "dot-product unit width")
      ->check(CLI::IsMember({4, 8, 16}));
  sub->add_option("--acc", o.acc, "accumulator policy: wide | fp16")
      ->check(CLI::IsMember({"wide", "fp16"}));
  sub->add_option("--cost", o.cost_file, "cost parameter file (key = value)");
  sub->add_option("--seed", o.seed, "operand seed (fully determines inputs)");
  sub->add_option("--out", o.out_dir, "output directory");
  sub->add_option("--format", o.format, "csv | json | both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  sub->add_option("--trace", o.trace_file, "write a tile-event trace log");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pacq: bit-exact functional and access/cycle-level simulator for "
      "hyper-asymmetric GEMM (packed INT4/INT2 weights x FP16 activations)"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key=value file mirroring the flags, one [subcommand] "
                 "section per command (can also select the subcommand)");
  Options o;

  auto* verify = app.add_subcommand(
      "verify-mul",
      "exhaustively compare the parallel FP-INT multiplier against the "
      "reference FP16 multiplier (exit 1 on any mismatch)");
  int verify_bits = 0;
  verify->add_option("--bits", verify_bits, "4 or 2 (default: both)")
      ->check(CLI::IsMember({0, 4, 2}));

  auto* quant = app.add_subcommand(
      "quantize",
      "RTN-quantize a raw float32 K*N matrix (row-major) into a packed "
      "weight file; prints per-group round-trip error stats");
  std::string q_input, q_dims;
  quant->add_option("input", q_input, "raw float32 weight file")->required();
  quant->add_option("--dims", q_dims, "matrix extents KxN")->required();
  add_common(quant, o);

  auto* gemm = app.add_subcommand(
      "gemm",
      "run one seeded functional GEMM through the chosen flow; under the "
      "wide policy the result must match the exact oracle bit for bit "
      "(exit 1 otherwise); under fp16 the max ulp deviation is reported. "
      "Writes c.bin (FP16 little-endian)");
  add_common(gemm, o);

  auto* sim = app.add_subcommand(
      "simulate",
      "counters, energy breakdown and EDP for all three flows at one "
      "workload; writes simulate.csv / simulate.json. CSV columns: flow, "
      "bits, m, n, k, rf_reads_a, rf_reads_b, rf_reads_c, rf_writes_c, "
      "rf_total, rf_total_without_c, fetch_a, fetch_b, buffer_evictions, "
      "buffer_reads, buffer_writes, general_ops, l1_accesses, "
      "mul_issues_baseline, mul_issues_parallel, fp16_adds, stall_cycles, "
      "cycles, energy_rf, energy_buffer, energy_mul, energy_add, "
      "energy_general, energy_l1, energy_static, energy_total, edp, "
      "rf_ratio_vs_dequant, edp_ratio_vs_dequant, edp_ratio_vs_kpack. "
      "Register-file counts are 32-bit register accesses");
  add_common(sim, o);

  auto* sweep = app.add_subcommand(
      "sweep",
      "sweep one axis (dup_factor | dp_width | bits | shape) and write "
      "sweep.csv with one row per point in the given order. CSV columns: "
      "axis, value, bits, m, n, k, dp_width, dup_factor, cycles_dequant, "
      "cycles_kpack, cycles_npack, energy_dequant, energy_kpack, "
      "energy_npack, edp_dequant, edp_kpack, edp_npack, speedup_kp_over_np, "
      "tputw_np_per_op, tputw_np_per_unit (throughput/Watt under "
      "per-operation-energy and per-unit-power normalizations)");
  std::string axis, values;
  sweep->add_option("--axis", axis, "dup_factor | dp_width | bits | shape")
      ->required()
      ->check(CLI::IsMember({"dup_factor", "dp_width", "bits", "shape"}));
  sweep->add_option("--values", values, "comma-separated axis values")
      ->required();
  add_common(sweep, o);

  CLI11_PARSE(app, argc, argv);
  try {
    if (verify->parsed()) return cmd_verify_mul(verify_bits);
    if (quant->parsed()) return cmd_quantize(q_input, q_dims, o);
    if (gemm->parsed()) return cmd_gemm(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (sweep->parsed()) return cmd_sweep(o, axis, values);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
