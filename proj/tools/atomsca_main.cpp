// atomsca - P-256 scalar multiplication with MNAMNAA atomic patterns,
// leakage-trace simulation and simple-SCA distinguishability analysis.
//
// Subcommands:
//   kp             compute kP and verify it against the textbook route
//   trace          run kP with event capture and write a simulated trace
//   analyze        segment/synchronize a trace and run both separation tests
//   estimate-time  execution-time bounds for a given scalar bit length
//
// Exit codes: 0 success, 1 verification/analysis failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "atomsca/experiment.hpp"
#include "atomsca/trace_file.hpp"
#include "atomsca/version.hpp"

using namespace atomsca;

namespace {

// 64-bit FNV-1a over the trace payload; printed for reproducibility checks.
uint64_t trace_digest(const Trace& trace) {
  uint64_t h = 0xcbf29ce484222325ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(trace.samples.data());
  for (std::size_t i = 0; i < trace.samples.size() * sizeof(float); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

void add_model_options(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--samples-per-cycle", cfg.trace.samples_per_cycle);
  cmd->add_option("--op-base", cfg.trace.op_base);
  cmd->add_option("--texture-depth", cfg.trace.texture_depth);
  cmd->add_option("--value-weight", cfg.trace.value_weight);
  cmd->add_option("--address-weight", cfg.trace.address_weight);
  cmd->add_option("--addressing-fraction", cfg.trace.addressing_fraction);
  cmd->add_option("--noise-sigma", cfg.trace.noise_sigma);
  cmd->add_option("--snr-target", cfg.snr_target,
                  "calibrate the noise level to this SNR (overrides --noise-sigma)");
  cmd->add_option("--seed", cfg.trace.seed);
  cmd->add_option("--mont-cycles", cfg.trace.durations.mont_cycles);
  cmd->add_option("--neg-cycles", cfg.trace.durations.neg_cycles);
  cmd->add_option("--add-cycles", cfg.trace.durations.add_cycles);
  cmd->add_option("--nop-short", cfg.trace.nop_short_cycles);
  cmd->add_option("--nop-long", cfg.trace.nop_long_cycles);
  cmd->add_option("--idle-prefix", cfg.idle_prefix_cycles);
  cmd->add_option("--anchor-offset", cfg.sync.anchor_offset);
  cmd->add_option("--anchor-len", cfg.sync.anchor_len);
  cmd->add_option("--max-shift", cfg.sync.max_shift);
  cmd->add_option("--corr-floor", cfg.sync.corr_floor);
}

void apply_jitter_flag(ExperimentConfig& cfg, const std::string& jitter) {
  if (jitter == "empirical") cfg.trace.durations.jitter = JitterModel::kEmpirical;
  else if (jitter == "none") cfg.trace.durations.jitter = JitterModel::kNone;
  else throw CLI::ValidationError("--jitter must be 'none' or 'empirical'");
}

int cmd_kp(const std::string& bits, const std::string& px, const std::string& py) {
  const CurveContext& ctx = p256();
  const Scalar k = Scalar::from_bit_string(bits);
  AffinePoint p = ctx.g;
  if (!px.empty()) p = AffinePoint{from_hex(px), from_hex(py)};

  RecordingSink sink;
  const JacobianPoint result = scalar_mul(k, p, ctx, sink);
  const AffinePoint affine = to_affine(result, ctx);

  std::size_t pd = 0, pa = 0;
  for (const FieldOpEvent& ev : sink.events()) {
    if (ev.kind == EventKind::kPatternStart) (ev.pattern == PatternKind::kPD ? pd : pa)++;
  }

  const AffinePoint check = to_affine(oracle_scalar_mul(k, p, ctx), ctx);
  const bool ok = affine == check;

  std::cout << "kP.x = " << to_hex(affine.x) << "\n";
  std::cout << "kP.y = " << to_hex(affine.y) << "\n";
  std::cout << "point_doublings = " << pd << "\n";
  std::cout << "point_additions = " << pa << "\n";
  std::cout << "oracle_check = " << (ok ? "ok" : "MISMATCH") << "\n";
  return ok ? 0 : 1;
}

int cmd_trace(ExperimentConfig cfg, const std::string& out_prefix, bool no_annotations) {
  KpRun run = run_kp(cfg);
  const Trace trace = build_trace(run, cfg);

  const std::string trace_path = out_prefix + ".atrc";
  write_trace(trace, trace_path);
  if (!no_annotations) write_annotations(trace, out_prefix + ".ann.txt");
  {
    std::ofstream os(out_prefix + ".config.json");
    os << to_json(cfg).dump(2) << "\n";
  }

  std::cout << "kP.x = " << to_hex(run.affine.x) << "\n";
  std::cout << "point_doublings = " << run.pd_count << "\n";
  std::cout << "point_additions = " << run.pa_count << "\n";
  std::cout << "samples = " << trace.samples.size() << "\n";
  std::cout << "noise_sigma = " << cfg.trace.noise_sigma << "\n";
  if (cfg.trace.noise_sigma > 0) std::cout << "snr = " << snr(trace, cfg.trace) << "\n";
  char digest[32];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(trace_digest(trace)));
  std::cout << "digest = " << digest << "\n";
  std::cout << "trace_file = " << trace_path << "\n";
  return 0;
}

int cmd_analyze(const ExperimentConfig& cfg, const std::string& trace_path,
                const std::string& out_prefix) {
  Trace trace = read_trace(trace_path);

  AnalysisOutput out;
  try {
    out = analyze_trace(trace, cfg);
  } catch (const AnalysisError& err) {
    std::cerr << "analysis failed: " << err.what() << "\n";
    return 1;
  }

  const std::string config_json = to_json(cfg).dump();
  {
    std::ofstream os(out_prefix + ".report.csv");
    write_report_csv(out.minmax, out.mean_ci, os, config_json);
  }
  std::ofstream summary(out_prefix + ".summary.txt");
  auto emit = [&](const std::string& line) {
    std::cout << line << "\n";
    summary << line << "\n";
  };
  emit("tool_version = " + std::string(kVersion));
  emit("config = " + config_json);
  std::size_t pd_all = 0, pa_all = 0, partial = 0;
  for (const SubTrace& s : out.all_subs) {
    partial += s.partial;
    if (!s.partial && s.label == SubLabel::kPD) ++pd_all;
    if (!s.partial && s.label == SubLabel::kPA) ++pa_all;
  }
  emit("sub_traces: doublings = " + std::to_string(pd_all) +
       ", additions = " + std::to_string(pa_all) + ", partial = " + std::to_string(partial));
  emit("working_set: doublings = " + std::to_string(out.pd.size()) +
       ", additions = " + std::to_string(out.pa.size()) + " (Doubling 1 excluded)");
  emit("analyzed_range = [" + std::to_string(out.range.begin) + ", " +
       std::to_string(out.range.end) + ") within the first atomic block");
  emit("complete_separation: " + out.verdict);
  if (!out.minmax.separated.empty()) {
    std::string indices = "separated_indices =";
    const std::size_t show = std::min<std::size_t>(out.minmax.separated.size(), 16);
    for (std::size_t i = 0; i < show; ++i) {
      indices += " " + std::to_string(out.minmax.separated[i]);
    }
    if (show < out.minmax.separated.size()) indices += " ...";
    emit(indices);
  }
  for (std::size_t level = 0; level < out.mean_ci.c_levels.size(); ++level) {
    emit("mean_ci c=" + std::to_string(static_cast<int>(out.mean_ci.c_levels[level])) +
         ": separated_samples = " + std::to_string(out.mean_ci.separated[level].size()));
  }
  emit("report_csv = " + out_prefix + ".report.csv");
  return 0;
}

int cmd_estimate(unsigned bits, double clock_mhz, uint64_t block_cycles) {
  const TimeEstimate est = estimate_time(bits, clock_mhz, block_cycles);
  std::cout << "bit_length = " << bits << "\n";
  std::cout << "block_cycles = " << block_cycles << "\n";
  std::cout << "min_cycles = " << est.min_cycles << "\n";
  std::cout << "max_cycles = " << est.max_cycles << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", est.min_ms);
  std::cout << "min_ms = " << buf << " @ " << clock_mhz << " MHz\n";
  std::snprintf(buf, sizeof buf, "%.4f", est.max_ms);
  std::cout << "max_ms = " << buf << " @ " << clock_mhz << " MHz\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"P-256 atomic-pattern kP with leakage simulation and simple-SCA analysis"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string jitter;
  std::string point_x, point_y;
  std::string config_json_path;

  auto* kp = app.add_subcommand("kp", "compute kP and verify against the textbook route");
  kp->add_option("-k,--scalar", cfg.scalar_bits, "scalar as a binary string, msb first");
  kp->add_option("--point-x", point_x, "base point x (hex); default is G");
  kp->add_option("--point-y", point_y);

  auto* trace = app.add_subcommand("trace", "simulate a leakage trace of one kP run");
  trace->add_option("-k,--scalar", cfg.scalar_bits);
  std::string out_prefix = "kp_trace";
  bool no_annotations = false;
  bool truncate = false;
  bool preset_paper = false;
  bool preset_positive = false;
  trace->add_option("-o,--out", out_prefix, "output prefix for .atrc/.ann.txt/.config.json");
  trace->add_option("--config-json", config_json_path,
                    "load a full experiment config (written by a previous trace run)");
  trace->add_flag("--no-annotations", no_annotations, "skip the ground-truth sidecar");
  trace->add_flag("--truncate-final", truncate, "cut the capture inside the final pattern");
  trace->add_flag("--paper-scenario", preset_paper,
                  "empirical jitter, SNR target 1.36, no address leakage");
  trace->add_flag("--positive-control", preset_positive,
                  "noise-free address-leakage scenario, deterministic timing");
  trace->add_option("--jitter", jitter, "none|empirical");
  add_model_options(trace, cfg);

  auto* analyze = app.add_subcommand("analyze", "run the separation tests on a trace file");
  std::string trace_path;
  std::string report_prefix = "kp_analysis";
  analyze->add_option("trace", trace_path, "trace file (.atrc)")->required();
  analyze->add_option("-o,--out", report_prefix, "output prefix for .report.csv/.summary.txt");
  analyze->add_option("--config-json", config_json_path,
                      "experiment config of the trace (.config.json)");
  add_model_options(analyze, cfg);

  auto* estimate = app.add_subcommand("estimate-time", "execution-time bounds for a scalar length");
  unsigned bits = 256;
  double clock_mhz = 100.0;
  uint64_t block_cycles = 72736;
  estimate->add_option("-b,--bits", bits, "scalar bit length");
  estimate->add_option("--clock-mhz", clock_mhz);
  estimate->add_option("--block-cycles", block_cycles,
                       "cycles per atomic block (72736 consistent, 72780 as measured)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  try {
    if (!config_json_path.empty()) {
      std::ifstream is(config_json_path);
      if (!is) throw std::runtime_error("cannot open config file: " + config_json_path);
      nlohmann::json j;
      is >> j;
      const ExperimentConfig cli_cfg = cfg;
      cfg = config_from_json(j);
      // explicit flags win over the loaded file
      CLI::App* sub = trace->parsed() ? static_cast<CLI::App*>(trace)
                                      : static_cast<CLI::App*>(analyze);
      auto given = [&](const char* name) {
        const CLI::Option* opt = sub->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
      };
      if (given("--scalar")) cfg.scalar_bits = cli_cfg.scalar_bits;
      if (given("--seed")) cfg.trace.seed = cli_cfg.trace.seed;
      if (given("--anchor-offset")) cfg.sync.anchor_offset = cli_cfg.sync.anchor_offset;
      if (given("--anchor-len")) cfg.sync.anchor_len = cli_cfg.sync.anchor_len;
      if (given("--max-shift")) cfg.sync.max_shift = cli_cfg.sync.max_shift;
      if (given("--corr-floor")) cfg.sync.corr_floor = cli_cfg.sync.corr_floor;
    } else if (preset_paper || preset_positive) {
      const std::string cli_scalar = cfg.scalar_bits;
      const uint64_t cli_seed = cfg.trace.seed;
      cfg = preset_paper ? paper_scenario() : positive_control_scenario();
      cfg.scalar_bits = cli_scalar;
      cfg.trace.seed = cli_seed;
    }
    if (!jitter.empty()) apply_jitter_flag(cfg, jitter);

    if (kp->parsed()) return cmd_kp(cfg.scalar_bits, point_x, point_y);
    if (trace->parsed()) {
      if (truncate) cfg.truncate_final_pattern = true;
      return cmd_trace(cfg, out_prefix, no_annotations);
    }
    if (analyze->parsed()) return cmd_analyze(cfg, trace_path, report_prefix);
    if (estimate->parsed()) return cmd_estimate(bits, clock_mhz, block_cycles);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
