#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "atomsca/event.hpp"
#include "atomsca/rng.hpp"

// Deterministic leakage-trace synthesis from an annotated event stream.
//
// Every field operation contributes a rectangular envelope of
// cycles * samples_per_cycle samples built from four terms:
//   * a base activity level with a fixed per-kind microstructure texture
//     (the value-independent instruction waveform; this is what sub-trace
//     synchronization locks onto),
//   * a value term: Hamming weight of the operand/result word currently
//     being processed, swept across the operation,
//   * an address term: Hamming weight of the register indices the operation
//     touches, present only in the leading addressing-phase samples,
//   * white Gaussian noise.
// NOP gaps emit the zero baseline plus noise; markers emit nothing.

namespace atomsca {

enum class JitterModel : uint8_t {
  kNone,       // deterministic base durations
  kEmpirical,  // per-block spread of the reference 100 MHz 32-bit target
};

struct DurationConfig {
  uint32_t mont_cycles = 16560;  // each of X and X'
  uint32_t neg_cycles = 1298;
  uint32_t add_cycles = 1300;
  JitterModel jitter = JitterModel::kNone;

  // One MNAMNAA block is X X' N A X X' N A A.
  uint32_t block_base_cycles() const {
    return 4 * mont_cycles + 2 * neg_cycles + 3 * add_cycles;
  }
};

struct TraceConfig {
  uint32_t samples_per_cycle = 10;
  double op_base = 1.0;
  double texture_depth = 0.6;
  double value_weight = 0.25;
  double address_weight = 0.0;
  double addressing_fraction = 0.05;
  double noise_sigma = 0.0;
  uint64_t seed = 1;
  DurationConfig durations;
  uint32_t nop_short_cycles = 8000;
  uint32_t nop_long_cycles = 40000;
};

namespace timing {

struct WeightedCycles {
  uint32_t extra;
  uint32_t count;
};

// Observed block-duration spread above the 72,736-cycle base and the first
// Montgomery multiplication's spread, per pattern kind (counts out of 21
// doublings / 14 additions).
inline constexpr WeightedCycles kPdBlockExtra[] = {{32, 3}, {37, 2}, {42, 6},
                                                   {47, 7}, {52, 1}, {57, 2}};
inline constexpr WeightedCycles kPaBlockExtra[] = {{36, 6}, {41, 6}, {46, 2}};
inline constexpr WeightedCycles kPdFirstMontExtra[] = {{5, 13}, {10, 8}};
inline constexpr WeightedCycles kPaFirstMontExtra[] = {{5, 13}, {10, 1}};

template <std::size_t N>
inline uint32_t draw(const WeightedCycles (&table)[N], Xoshiro256& rng) {
  uint64_t total = 0;
  for (const auto& e : table) total += e.count;
  return table[rng.pick_weighted(table, total)].extra;
}

}  // namespace timing

// Assigns a duration to each event of one pattern block at a time. With the
// empirical jitter model, a block draws its total and its first-X offset
// from the observed tables; the unobserved remainder lands on the trailing
// addition so that block totals match the measured spread exactly.
class DurationSampler {
 public:
  explicit DurationSampler(const TraceConfig& cfg)
      : cfg_(cfg), rng_(splitmix64(cfg.seed ^ 0x6475726174696f6eull)) {}

  uint32_t next(const FieldOpEvent& ev) {
    switch (ev.kind) {
      case EventKind::kNopShort: return cfg_.nop_short_cycles;
      case EventKind::kNopLong: return cfg_.nop_long_cycles;
      case EventKind::kPatternStart:
      case EventKind::kPatternEnd: return 0;
      default: break;
    }
    const DurationConfig& d = cfg_.durations;
    if (d.jitter == JitterModel::kNone || ev.pattern == PatternKind::kNone) {
      return base_cycles(ev.kind, d);
    }
    if (ev.pattern != block_pattern_ || ev.ordinal != block_ordinal_ || ev.block != block_index_) {
      start_block(ev);
    }
    ++event_in_block_;
    if (event_in_block_ == 1) return d.mont_cycles + first_extra_;
    if (event_in_block_ == 9) return d.add_cycles + (block_extra_ - first_extra_);
    return base_cycles(ev.kind, d);
  }

  static uint32_t base_cycles(EventKind kind, const DurationConfig& d) {
    switch (kind) {
      case EventKind::kMontMul:
      case EventKind::kMontMulR2: return d.mont_cycles;
      case EventKind::kNeg: return d.neg_cycles;
      case EventKind::kAdd: return d.add_cycles;
      default: return 0;
    }
  }

 private:
  void start_block(const FieldOpEvent& ev) {
    block_pattern_ = ev.pattern;
    block_ordinal_ = ev.ordinal;
    block_index_ = ev.block;
    event_in_block_ = 0;
    if (ev.pattern == PatternKind::kPD) {
      block_extra_ = timing::draw(timing::kPdBlockExtra, rng_);
      first_extra_ = timing::draw(timing::kPdFirstMontExtra, rng_);
    } else {
      block_extra_ = timing::draw(timing::kPaBlockExtra, rng_);
      first_extra_ = timing::draw(timing::kPaFirstMontExtra, rng_);
    }
  }

  TraceConfig cfg_;
  Xoshiro256 rng_;
  PatternKind block_pattern_ = PatternKind::kNone;
  uint32_t block_ordinal_ = 0;
  uint8_t block_index_ = 0;
  int event_in_block_ = 0;
  uint32_t block_extra_ = 0;
  uint32_t first_extra_ = 0;
};

inline void assign_durations(std::vector<FieldOpEvent>& events, const TraceConfig& cfg) {
  DurationSampler sampler(cfg);
  for (FieldOpEvent& ev : events) ev.cycles = sampler.next(ev);
}

struct AnnotatedEvent {
  FieldOpEvent event;
  std::size_t start_sample = 0;

  std::size_t sample_count(uint32_t samples_per_cycle) const {
    return static_cast<std::size_t>(event.cycles) * samples_per_cycle;
  }
};

struct Trace {
  std::vector<float> samples;
  uint32_t samples_per_cycle = 10;
  std::vector<AnnotatedEvent> annotations;  // ground truth; optional on export
};

namespace detail {

inline constexpr uint64_t kNoiseStream = 0x6e6f697365ull;

inline uint64_t texture_group(EventKind kind) {
  switch (kind) {
    case EventKind::kMontMul:
    case EventKind::kMontMulR2: return 1;  // same routine runs for X and X'
    case EventKind::kNeg: return 2;
    default: return 3;
  }
}

// Deterministic per-sample microstructure in [-0.5, 0.5], identical for
// every execution of the same primitive kind at the same phase.
inline double texture(uint64_t group, std::size_t phase) {
  const uint64_t h = splitmix64(group * 0x5851f42d4c957f2dull + phase);
  return static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5;
}

inline int address_hw(const FieldOpEvent& ev) {
  int hw = 0;
  if (ev.dst >= 0) hw += std::popcount(static_cast<unsigned>(ev.dst));
  if (ev.src1 >= 0) hw += std::popcount(static_cast<unsigned>(ev.src1));
  if (ev.src2 >= 0) hw += std::popcount(static_cast<unsigned>(ev.src2));
  return hw;
}

// Noise-free waveform of a single event.
inline void synth_event(const FieldOpEvent& ev, const TraceConfig& cfg, std::span<float> out) {
  if (out.empty()) return;
  if (!is_field_op(ev.kind)) {
    std::fill(out.begin(), out.end(), 0.0f);
    return;
  }
  const std::size_t n = out.size();
  const std::size_t addr_end =
      std::min(n, static_cast<std::size_t>(std::ceil(cfg.addressing_fraction * static_cast<double>(n))));
  const double addr_term = cfg.address_weight * address_hw(ev);
  const uint64_t group = texture_group(ev.kind);
  const std::size_t words = ev.word_count == 0 ? 1 : ev.word_count;

  std::size_t pos = 0;
  for (std::size_t w = 0; w < words; ++w) {
    const std::size_t seg_end = n * (w + 1) / words;
    const double hw_frac =
        ev.word_count == 0 ? 0.0 : static_cast<double>(std::popcount(ev.words[w])) / 64.0;
    const double value_term = cfg.value_weight * hw_frac;
    for (; pos < seg_end; ++pos) {
      double v = cfg.op_base * (1.0 + cfg.texture_depth * texture(group, pos)) + value_term;
      if (pos < addr_end) v += addr_term;
      out[pos] = static_cast<float>(v);
    }
  }
}

}  // namespace detail

// Renders the event stream into a sampled trace. Durations must already be
// assigned (assign_durations); noise is drawn from a per-event substream so
// the result depends only on (events, cfg.seed).
inline Trace simulate_trace(const std::vector<FieldOpEvent>& events, const TraceConfig& cfg) {
  if (cfg.samples_per_cycle < 1) throw std::invalid_argument("samples_per_cycle must be >= 1");
  if (cfg.noise_sigma < 0) throw std::invalid_argument("noise_sigma must be >= 0");

  std::size_t total = 0;
  for (const FieldOpEvent& ev : events) {
    if (is_field_op(ev.kind) && ev.cycles == 0) {
      throw std::invalid_argument("event durations must be assigned before simulation");
    }
    total += static_cast<std::size_t>(ev.cycles) * cfg.samples_per_cycle;
  }

  Trace trace;
  trace.samples_per_cycle = cfg.samples_per_cycle;
  trace.samples.resize(total);
  trace.annotations.reserve(events.size());

  const uint64_t noise_root = splitmix64(cfg.seed ^ detail::kNoiseStream);
  std::size_t offset = 0;
  std::size_t index = 0;
  for (const FieldOpEvent& ev : events) {
    const std::size_t n = static_cast<std::size_t>(ev.cycles) * cfg.samples_per_cycle;
    trace.annotations.push_back(AnnotatedEvent{ev, offset});
    if (n != 0) {
      std::span<float> span(trace.samples.data() + offset, n);
      detail::synth_event(ev, cfg, span);
      if (cfg.noise_sigma > 0) {
        GaussianSampler noise(splitmix64(noise_root + index));
        for (float& s : span) s += static_cast<float>(cfg.noise_sigma * noise.next());
      }
    }
    offset += n;
    ++index;
  }
  return trace;
}

// Variance of the noise-free reconstruction over the variance of the
// residual. Returns +infinity when the residual variance is zero.
inline double snr(const Trace& trace, const TraceConfig& cfg) {
  if (trace.annotations.empty()) throw std::invalid_argument("snr requires trace annotations");
  double sig_sum = 0, sig_sq = 0, noise_sum = 0, noise_sq = 0;
  std::size_t n = 0;
  std::vector<float> buf;
  for (const AnnotatedEvent& ann : trace.annotations) {
    const std::size_t len = ann.sample_count(trace.samples_per_cycle);
    if (len == 0) continue;
    const std::size_t avail =
        ann.start_sample >= trace.samples.size()
            ? 0
            : std::min(len, trace.samples.size() - ann.start_sample);
    if (avail == 0) continue;
    buf.resize(len);
    detail::synth_event(ann.event, cfg, buf);
    for (std::size_t i = 0; i < avail; ++i) {
      const double s = buf[i];
      const double r = trace.samples[ann.start_sample + i] - s;
      sig_sum += s;
      sig_sq += s * s;
      noise_sum += r;
      noise_sq += r * r;
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("snr: annotations cover no samples");
  const double nd = static_cast<double>(n);
  const double sig_var = sig_sq / nd - (sig_sum / nd) * (sig_sum / nd);
  const double noise_var = noise_sq / nd - (noise_sum / nd) * (noise_sum / nd);
  if (noise_var <= 0) return std::numeric_limits<double>::infinity();
  return sig_var / noise_var;
}

// Noise level that yields the requested SNR for this event stream.
inline double calibrate_noise_sigma(const std::vector<FieldOpEvent>& events, TraceConfig cfg,
                                    double target_snr) {
  if (target_snr <= 0) throw std::invalid_argument("target SNR must be positive");
  cfg.noise_sigma = 0;
  const Trace clean = simulate_trace(events, cfg);
  double sum = 0, sq = 0;
  for (float s : clean.samples) {
    sum += s;
    sq += static_cast<double>(s) * s;
  }
  const double nd = static_cast<double>(clean.samples.size());
  const double var = sq / nd - (sum / nd) * (sum / nd);
  return std::sqrt(var / target_snr);
}

}  // namespace atomsca
