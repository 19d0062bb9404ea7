#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "atomsca/curve.hpp"
#include "atomsca/leakage_sim.hpp"
#include "atomsca/trace_analysis.hpp"
#include "atomsca/version.hpp"

// End-to-end experiment wiring shared by the CLI and the test suites:
// scalar multiplication with event capture, trace synthesis, and the full
// analysis pipeline (segment, exclude Doubling 1, synchronize, run both
// distinguishability tests).

namespace atomsca {

struct ExperimentConfig {
  std::string scalar_bits = kDefaultScalar;
  std::string point_x;  // empty = base point G
  std::string point_y;
  TraceConfig trace;
  double snr_target = 0.0;  // > 0: calibrate noise_sigma to this SNR
  uint32_t idle_prefix_cycles = 40000;
  bool truncate_final_pattern = false;
  double truncate_keep_fraction = 0.55;  // kept part of the final pattern
  SyncParams sync;
  std::vector<double> c_levels = {1.0, 2.0, 3.0};

  // 22-bit scalar whose 21 processed bits contain 15 ones: 21 point
  // doublings and 15 point additions.
  static constexpr const char* kDefaultScalar = "1110011011010111111011";

  AffinePoint point(const CurveContext& ctx) const {
    if (point_x.empty()) return ctx.g;
    return AffinePoint{from_hex(point_x), from_hex(point_y)};
  }
};

// Scenario mirroring the reference measurement: empirical block jitter,
// noise calibrated to SNR 1.36, no address leakage.
inline ExperimentConfig paper_scenario() {
  ExperimentConfig cfg;
  cfg.trace.durations.jitter = JitterModel::kEmpirical;
  cfg.trace.value_weight = 0.25;
  cfg.trace.address_weight = 0.0;
  cfg.snr_target = 1.36;
  return cfg;
}

// Address-leakage positive control: noise-free, value term off, register
// addressing dominant, deterministic timing.
inline ExperimentConfig positive_control_scenario() {
  ExperimentConfig cfg;
  cfg.trace.durations.jitter = JitterModel::kNone;
  cfg.trace.value_weight = 0.0;
  cfg.trace.address_weight = 1.0;
  cfg.trace.noise_sigma = 0.0;
  cfg.snr_target = 0.0;
  return cfg;
}

// --- JSON (de)serialization; embedded into every report ---

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["scalar_bits"] = cfg.scalar_bits;
  j["point_x"] = cfg.point_x;
  j["point_y"] = cfg.point_y;
  j["samples_per_cycle"] = cfg.trace.samples_per_cycle;
  j["op_base"] = cfg.trace.op_base;
  j["texture_depth"] = cfg.trace.texture_depth;
  j["value_weight"] = cfg.trace.value_weight;
  j["address_weight"] = cfg.trace.address_weight;
  j["addressing_fraction"] = cfg.trace.addressing_fraction;
  j["noise_sigma"] = cfg.trace.noise_sigma;
  j["snr_target"] = cfg.snr_target;
  j["seed"] = cfg.trace.seed;
  j["mont_cycles"] = cfg.trace.durations.mont_cycles;
  j["neg_cycles"] = cfg.trace.durations.neg_cycles;
  j["add_cycles"] = cfg.trace.durations.add_cycles;
  j["jitter"] = cfg.trace.durations.jitter == JitterModel::kEmpirical ? "empirical" : "none";
  j["nop_short_cycles"] = cfg.trace.nop_short_cycles;
  j["nop_long_cycles"] = cfg.trace.nop_long_cycles;
  j["idle_prefix_cycles"] = cfg.idle_prefix_cycles;
  j["truncate_final_pattern"] = cfg.truncate_final_pattern;
  j["truncate_keep_fraction"] = cfg.truncate_keep_fraction;
  j["anchor_offset"] = cfg.sync.anchor_offset;
  j["anchor_len"] = cfg.sync.anchor_len;
  j["max_shift"] = cfg.sync.max_shift;
  j["corr_floor"] = cfg.sync.corr_floor;
  j["c_levels"] = cfg.c_levels;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.scalar_bits = j.value("scalar_bits", cfg.scalar_bits);
  cfg.point_x = j.value("point_x", cfg.point_x);
  cfg.point_y = j.value("point_y", cfg.point_y);
  cfg.trace.samples_per_cycle = j.value("samples_per_cycle", cfg.trace.samples_per_cycle);
  cfg.trace.op_base = j.value("op_base", cfg.trace.op_base);
  cfg.trace.texture_depth = j.value("texture_depth", cfg.trace.texture_depth);
  cfg.trace.value_weight = j.value("value_weight", cfg.trace.value_weight);
  cfg.trace.address_weight = j.value("address_weight", cfg.trace.address_weight);
  cfg.trace.addressing_fraction = j.value("addressing_fraction", cfg.trace.addressing_fraction);
  cfg.trace.noise_sigma = j.value("noise_sigma", cfg.trace.noise_sigma);
  cfg.snr_target = j.value("snr_target", cfg.snr_target);
  cfg.trace.seed = j.value("seed", cfg.trace.seed);
  cfg.trace.durations.mont_cycles = j.value("mont_cycles", cfg.trace.durations.mont_cycles);
  cfg.trace.durations.neg_cycles = j.value("neg_cycles", cfg.trace.durations.neg_cycles);
  cfg.trace.durations.add_cycles = j.value("add_cycles", cfg.trace.durations.add_cycles);
  cfg.trace.durations.jitter = j.value("jitter", std::string("none")) == "empirical"
                                   ? JitterModel::kEmpirical
                                   : JitterModel::kNone;
  cfg.trace.nop_short_cycles = j.value("nop_short_cycles", cfg.trace.nop_short_cycles);
  cfg.trace.nop_long_cycles = j.value("nop_long_cycles", cfg.trace.nop_long_cycles);
  cfg.idle_prefix_cycles = j.value("idle_prefix_cycles", cfg.idle_prefix_cycles);
  cfg.truncate_final_pattern = j.value("truncate_final_pattern", cfg.truncate_final_pattern);
  cfg.truncate_keep_fraction = j.value("truncate_keep_fraction", cfg.truncate_keep_fraction);
  cfg.sync.anchor_offset = j.value("anchor_offset", cfg.sync.anchor_offset);
  cfg.sync.anchor_len = j.value("anchor_len", cfg.sync.anchor_len);
  cfg.sync.max_shift = j.value("max_shift", cfg.sync.max_shift);
  cfg.sync.corr_floor = j.value("corr_floor", cfg.sync.corr_floor);
  if (j.contains("c_levels")) cfg.c_levels = j["c_levels"].get<std::vector<double>>();
  return cfg;
}

// --- pipeline stages ---

struct KpRun {
  JacobianPoint result;
  AffinePoint affine;
  std::vector<FieldOpEvent> events;  // idle prefix + kP stream, durations set
  std::size_t pd_count = 0;
  std::size_t pa_count = 0;
};

// Runs kP with event capture and duration assignment. The event stream is
// prefixed with an idle gap so the analysis can estimate its noise baseline.
inline KpRun run_kp(const ExperimentConfig& cfg) {
  const CurveContext& ctx = p256();
  const Scalar k = Scalar::from_bit_string(cfg.scalar_bits);
  const AffinePoint p = cfg.point(ctx);

  RecordingSink sink;
  KpRun run;
  run.result = scalar_mul(k, p, ctx, sink);
  run.affine = to_affine(run.result, ctx);
  run.pd_count = k.length() - 1;
  run.pa_count = k.processed_ones();

  run.events.reserve(sink.events().size() + 1);
  FieldOpEvent idle;
  idle.kind = EventKind::kNopLong;
  idle.cycles = cfg.idle_prefix_cycles;
  run.events.push_back(idle);
  for (const FieldOpEvent& ev : sink.events()) run.events.push_back(ev);

  assign_durations(run.events, cfg.trace);
  run.events.front().cycles = cfg.idle_prefix_cycles;
  return run;
}

// Synthesizes the trace, calibrating the noise level first when an SNR
// target is set. Optionally truncates the capture inside the final pattern.
inline Trace build_trace(const KpRun& run, ExperimentConfig& cfg) {
  if (cfg.snr_target > 0) {
    cfg.trace.noise_sigma = calibrate_noise_sigma(run.events, cfg.trace, cfg.snr_target);
  }
  Trace trace = simulate_trace(run.events, cfg.trace);
  if (cfg.truncate_final_pattern) {
    std::size_t pattern_start = 0, pattern_len = 0;
    for (const AnnotatedEvent& ann : trace.annotations) {
      if (ann.event.kind == EventKind::kPatternStart) pattern_start = ann.start_sample;
      if (ann.event.kind == EventKind::kPatternEnd) {
        pattern_len = ann.start_sample - pattern_start;
      }
    }
    if (pattern_len != 0) {
      const std::size_t cut =
          pattern_start + static_cast<std::size_t>(cfg.truncate_keep_fraction *
                                                   static_cast<double>(pattern_len));
      trace.samples.resize(cut);
      while (!trace.annotations.empty() && trace.annotations.back().start_sample >= cut) {
        trace.annotations.pop_back();
      }
    }
  }
  return trace;
}

inline SegmentationParams segmentation_params(const ExperimentConfig& cfg) {
  SegmentationParams p;
  p.samples_per_cycle = cfg.trace.samples_per_cycle;
  p.nop_short_cycles = cfg.trace.nop_short_cycles;
  p.nop_long_cycles = cfg.trace.nop_long_cycles;
  p.baseline_prefix_samples = static_cast<std::size_t>(cfg.idle_prefix_cycles) *
                              cfg.trace.samples_per_cycle * 9 / 10;
  p.expected_block_cycles = cfg.trace.durations.block_base_cycles();
  return p;
}

struct AnalysisOutput {
  std::vector<SubTrace> all_subs;      // as segmented
  std::vector<SubTrace> working_set;   // complete, Doubling 1 excluded, synced
  std::vector<SubTrace> pd, pa;
  SampleRange range;                   // first atomic block, common coverage
  SeparationReport minmax;
  MeanCiReport mean_ci;
  std::string verdict;
};

// Full analysis pass over a trace. Throws AnalysisError on segmentation or
// synchronization failure.
inline AnalysisOutput analyze_trace(const Trace& trace, const ExperimentConfig& cfg) {
  AnalysisOutput out;
  out.all_subs = segment(trace, segmentation_params(cfg));

  std::vector<SubTrace> complete;
  for (const SubTrace& s : out.all_subs) {
    if (!s.partial && s.label != SubLabel::kUnknown) complete.push_back(s);
  }
  out.working_set = exclude_special(complete);
  synchronize(trace, out.working_set, cfg.sync);

  for (const SubTrace& s : out.working_set) {
    if (s.unsynchronized) continue;
    (s.label == SubLabel::kPD ? out.pd : out.pa).push_back(s);
  }
  if (out.pd.size() < 2 || out.pa.size() < 2) {
    throw AnalysisError("not enough synchronized sub-traces per label");
  }

  std::vector<SubTrace> used = out.pd;
  used.insert(used.end(), out.pa.begin(), out.pa.end());
  out.range = delta1_common_range(used);
  out.minmax = complete_separation(trace, out.pd, out.pa, out.range);
  out.mean_ci = mean_ci_separation(trace, out.pd, out.pa, out.range, cfg.c_levels);

  if (out.minmax.separated.empty()) {
    out.verdict = "no complete separation found";
  } else {
    out.verdict = "complete separation at " + std::to_string(out.minmax.separated.size()) +
                  " sample indices";
  }
  return out;
}

// --- execution-time estimate ---

struct TimeEstimate {
  uint64_t min_cycles = 0;
  uint64_t max_cycles = 0;
  double min_ms = 0;
  double max_ms = 0;
};

// A doubling costs 4 blocks, a doubling plus addition 10; every one of the
// l-1 processed bits runs at least the doubling.
inline TimeEstimate estimate_time(unsigned bit_length, double clock_mhz,
                                  uint64_t block_cycles = 72736) {
  if (bit_length < 1) throw std::invalid_argument("bit length must be >= 1");
  TimeEstimate est;
  const uint64_t iterations = bit_length - 1;
  est.min_cycles = iterations * 4 * block_cycles;
  est.max_cycles = iterations * 10 * block_cycles;
  est.min_ms = static_cast<double>(est.min_cycles) / (clock_mhz * 1e3);
  est.max_ms = static_cast<double>(est.max_cycles) / (clock_mhz * 1e3);
  return est;
}

}  // namespace atomsca
