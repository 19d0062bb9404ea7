#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomsca/leakage_sim.hpp"

// Automated simple-SCA pipeline over a sampled trace:
//   segment      split the trace at NOP gaps into labeled PD/PA sub-traces
//                (short gaps delimit atomic blocks, long gaps delimit point
//                operations; 4 blocks = doubling, 6 = addition)
//   exclude      drop Doubling 1, whose first multiplication runs on the
//                special operand Z = 1
//   synchronize  integer-shift alignment by normalized cross-correlation
//                over an anchor window inside the first X operation
//   tests        complete min/max separation and the mean +/- c*sigma
//                difference-of-means test, evaluated per sample index

namespace atomsca {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SubLabel : uint8_t { kPD, kPA, kUnknown };

struct SubTrace {
  SubLabel label = SubLabel::kUnknown;
  uint32_t ordinal = 0;  // 1-based per label, numbered from trace start
  bool partial = false;
  std::size_t start = 0;   // absolute sample index of the first block
  std::size_t length = 0;  // samples up to the end of the last block
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // relative [begin,end)
  int sync_offset = 0;
  double sync_corr = 1.0;
  bool unsynchronized = false;
};

struct SegmentationParams {
  std::size_t baseline_prefix_samples = 0;
  uint32_t samples_per_cycle = 10;
  uint32_t nop_short_cycles = 8000;
  uint32_t nop_long_cycles = 40000;
  uint32_t expected_block_cycles = 72736;  // 0 disables the consistency check
};

namespace detail {

struct Run {
  std::size_t begin;
  std::size_t end;
  bool below;
};

}  // namespace detail

// Splits a trace into PD/PA sub-traces. The gap threshold is baseline mean
// plus three baseline deviations of the smoothed envelope, estimated on the
// pre-kP noise prefix; a gap must stay below it for at least half the short
// NOP duration. Brief above-threshold excursions inside a gap (noise tails)
// are closed before the run-length rule is applied.
inline std::vector<SubTrace> segment(const Trace& trace, const SegmentationParams& params) {
  const std::size_t n = trace.samples.size();
  const std::size_t short_gap = static_cast<std::size_t>(params.nop_short_cycles) *
                                params.samples_per_cycle;
  const std::size_t long_gap = static_cast<std::size_t>(params.nop_long_cycles) *
                               params.samples_per_cycle;
  const std::size_t min_gap_run = short_gap / 2;
  if (min_gap_run == 0) throw AnalysisError("segmentation needs a nonzero NOP gap length");

  std::size_t window = std::max<std::size_t>(short_gap / 10, 11);
  window |= 1;  // odd, centered
  const std::size_t half = window / 2;
  if (n < 4 * window) throw AnalysisError("trace too short to segment");

  // Baseline statistics of the smoothed envelope over the noise prefix.
  if (params.baseline_prefix_samples < 2 * window) {
    throw AnalysisError("baseline prefix too short for gap threshold");
  }
  const std::size_t prefix_centers_end = std::min(params.baseline_prefix_samples, n) - half;
  double bsum = 0, bsq = 0;
  std::size_t bcount = 0;
  {
    double s = 0;
    for (std::size_t i = 0; i < window; ++i) s += trace.samples[i];
    for (std::size_t c = half; c < prefix_centers_end; ++c) {
      const double env = s / static_cast<double>(window);
      bsum += env;
      bsq += env * env;
      ++bcount;
      if (c + 1 + half < n) {
        // difference in double: float subtraction here drifts over long traces
        s += static_cast<double>(trace.samples[c + 1 + half]) -
             static_cast<double>(trace.samples[c - half]);
      }
    }
  }
  const double bmean = bsum / static_cast<double>(bcount);
  const double bvar = std::max(0.0, bsq / static_cast<double>(bcount) - bmean * bmean);
  const double threshold = bmean + 3.0 * std::sqrt(bvar) + 1e-12;

  // Below/above runs of the smoothed envelope (centers [half, n-half)).
  std::vector<detail::Run> runs;
  {
    double s = 0;
    for (std::size_t i = 0; i < window; ++i) s += trace.samples[i];
    bool below = (s / static_cast<double>(window)) < threshold;
    std::size_t run_start = half;
    for (std::size_t c = half + 1; c + half < n; ++c) {
      s += static_cast<double>(trace.samples[c + half]) -
           static_cast<double>(trace.samples[c - half - 1]);
      const bool b = (s / static_cast<double>(window)) < threshold;
      if (b != below) {
        runs.push_back({run_start, c, below});
        run_start = c;
        below = b;
      }
    }
    runs.push_back({run_start, n - half, below});
  }

  // Close short above-threshold excursions that sit between below runs.
  const std::size_t hole_tolerance = min_gap_run / 4;
  std::vector<detail::Run> merged;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    detail::Run r = runs[i];
    if (!r.below && r.end - r.begin <= hole_tolerance && i > 0 && i + 1 < runs.size() &&
        runs[i - 1].below && runs[i + 1].below) {
      r.below = true;
    }
    if (!merged.empty() && merged.back().below == r.below) merged.back().end = r.end;
    else merged.push_back(r);
  }

  // Gaps and the active (block) regions between them.
  struct Region {
    std::size_t begin, end;
    bool gap;
    bool long_gap;
  };
  const std::size_t long_gap_min = (short_gap + long_gap) / 2;
  std::vector<Region> regions;
  for (const detail::Run& r : merged) {
    const std::size_t len = r.end - r.begin;
    if (r.below && len >= min_gap_run) {
      regions.push_back({r.begin, r.end, true, len >= long_gap_min});
    } else if (!regions.empty() && !regions.back().gap) {
      regions.back().end = r.end;
    } else {
      regions.push_back({r.begin, r.end, false, false});
    }
  }

  std::size_t gap_count = 0;
  for (const Region& r : regions) gap_count += r.gap;
  if (gap_count == 0) throw AnalysisError("no NOP gaps found in trace");

  // Assemble patterns: blocks accumulate until a long gap (or trace end).
  std::vector<SubTrace> subs;
  SubTrace current;
  bool open = false;
  uint32_t pd_ordinal = 0, pa_ordinal = 0;
  auto finalize = [&](bool complete) {
    if (!open) return;
    const std::size_t blocks = current.blocks.size();
    if (complete && blocks != 4 && blocks != 6) {
      throw AnalysisError("inconsistent block count between long gaps: " +
                          std::to_string(blocks));
    }
    if (params.expected_block_cycles != 0) {
      // the trailing block of a truncated pattern is exempt
      const std::size_t checked = complete ? blocks : (blocks > 0 ? blocks - 1 : 0);
      const double expect = static_cast<double>(params.expected_block_cycles) *
                            params.samples_per_cycle;
      for (std::size_t b = 0; b < checked; ++b) {
        const double got =
            static_cast<double>(current.blocks[b].second - current.blocks[b].first);
        if (std::abs(got - expect) > 0.05 * expect) {
          throw AnalysisError("block duration inconsistent with the expected value: got " +
                              std::to_string(current.blocks[b].second - current.blocks[b].first) +
                              " samples");
        }
      }
    }
    current.partial = !complete;
    if (blocks == 4 && complete) current.label = SubLabel::kPD;
    else if (blocks == 6 && complete) current.label = SubLabel::kPA;
    else if (blocks > 4) current.label = SubLabel::kPA;
    else current.label = SubLabel::kUnknown;
    if (current.label == SubLabel::kPD) current.ordinal = ++pd_ordinal;
    if (current.label == SubLabel::kPA) current.ordinal = ++pa_ordinal;
    subs.push_back(current);
    open = false;
  };
  for (const Region& r : regions) {
    if (r.gap) {
      if (r.long_gap) finalize(true);
      continue;
    }
    if (!open) {
      current = SubTrace{};
      current.start = r.begin;
      open = true;
    }
    current.blocks.emplace_back(r.begin - current.start, r.end - current.start);
    current.length = r.end - current.start;
  }
  finalize(false);  // trailing pattern without a closing long gap is partial
  if (subs.empty()) throw AnalysisError("no point-operation sub-traces found");
  return subs;
}

// Drops Doubling 1 (first multiplication runs on Z = 1).
inline std::vector<SubTrace> exclude_special(const std::vector<SubTrace>& subs) {
  std::vector<SubTrace> out;
  out.reserve(subs.size());
  for (const SubTrace& s : subs) {
    if (s.label == SubLabel::kPD && s.ordinal == 1) continue;
    out.push_back(s);
  }
  return out;
}

struct SyncParams {
  std::size_t anchor_offset = 40000;  // window start, sub-trace local
  std::size_t anchor_len = 4000;
  int max_shift = 1000;
  double corr_floor = 0.05;
  int reference = -1;  // index into subs; -1 = first PD in the set
};

// Aligns each sub-trace to the reference by the integer shift maximizing
// normalized cross-correlation over the anchor window. Sub-traces whose best
// correlation stays under the floor are flagged and excluded from tests.
inline void synchronize(const Trace& trace, std::vector<SubTrace>& subs,
                        const SyncParams& params) {
  if (subs.empty()) throw AnalysisError("nothing to synchronize");
  std::size_t ref_index = subs.size();
  if (params.reference >= 0) {
    ref_index = static_cast<std::size_t>(params.reference);
  } else {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i].label == SubLabel::kPD) {
        ref_index = i;
        break;
      }
    }
  }
  if (ref_index >= subs.size()) throw AnalysisError("no reference sub-trace available");

  const std::size_t a = params.anchor_offset;
  const std::size_t len = params.anchor_len;
  const SubTrace& ref = subs[ref_index];
  if (a + len > ref.length) throw AnalysisError("anchor window exceeds the reference sub-trace");

  const float* samples = trace.samples.data();
  std::vector<double> refwin(len);
  double rsum = 0, rsq = 0;
  for (std::size_t i = 0; i < len; ++i) {
    refwin[i] = samples[ref.start + a + i];
    rsum += refwin[i];
    rsq += refwin[i] * refwin[i];
  }
  const double rmean = rsum / static_cast<double>(len);
  const double rstd = std::sqrt(std::max(0.0, rsq / static_cast<double>(len) - rmean * rmean));
  if (rstd == 0) throw AnalysisError("reference anchor window is constant");

  for (SubTrace& sub : subs) {
    if (&sub == &subs[ref_index]) {
      sub.sync_offset = 0;
      sub.sync_corr = 1.0;
      sub.unsynchronized = false;
      continue;
    }
    double best_corr = -2.0;
    int best_shift = 0;
    for (int shift = -params.max_shift; shift <= params.max_shift; ++shift) {
      const long long begin = static_cast<long long>(sub.start) +
                              static_cast<long long>(a) + shift;
      if (begin < 0) continue;
      const std::size_t b = static_cast<std::size_t>(begin);
      if (b + len > sub.start + sub.length || b + len > trace.samples.size()) continue;
      double ssum = 0, ssq = 0, dot = 0;
      for (std::size_t i = 0; i < len; ++i) {
        const double v = samples[b + i];
        ssum += v;
        ssq += v * v;
        dot += v * refwin[i];
      }
      const double smean = ssum / static_cast<double>(len);
      const double sstd =
          std::sqrt(std::max(0.0, ssq / static_cast<double>(len) - smean * smean));
      if (sstd == 0) continue;
      const double corr =
          (dot / static_cast<double>(len) - rmean * smean) / (rstd * sstd);
      if (corr > best_corr || (corr == best_corr && std::abs(shift) < std::abs(best_shift))) {
        best_corr = corr;
        best_shift = shift;
      }
    }
    sub.sync_offset = best_shift;
    sub.sync_corr = best_corr;
    sub.unsynchronized = best_corr < params.corr_floor;
  }
}

struct SampleRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // reference-local, exclusive
  std::size_t size() const { return end - begin; }
};

// Aligned sample of a sub-trace at reference-local index j.
inline float aligned_sample(const Trace& trace, const SubTrace& sub, std::size_t j) {
  return trace.samples[static_cast<std::size_t>(
      static_cast<long long>(sub.start) + sub.sync_offset + static_cast<long long>(j))];
}

// Largest prefix range covered by the first block of every sub-trace.
inline SampleRange delta1_common_range(const std::vector<SubTrace>& subs) {
  std::size_t end = std::numeric_limits<std::size_t>::max();
  for (const SubTrace& s : subs) {
    if (s.blocks.empty()) throw AnalysisError("sub-trace has no blocks");
    const long long e = static_cast<long long>(s.blocks[0].second) - s.sync_offset;
    if (e <= 0) throw AnalysisError("sync offset exceeds the first block");
    end = std::min(end, static_cast<std::size_t>(e));
  }
  return SampleRange{0, end};
}

struct SeparationReport {
  SampleRange range;
  // Per index: 0 = none, 1 = pd_below (max PD < min PA), 2 = pa_below.
  std::vector<uint8_t> flags;
  std::vector<float> pd_min, pd_max, pa_min, pa_max;
  std::vector<std::size_t> separated;  // reference-local indices

  std::size_t separated_count() const { return separated.size(); }
};

namespace detail {

inline void accumulate_minmax(const Trace& trace, const std::vector<SubTrace>& subs,
                              const SampleRange& range, std::vector<float>& mn,
                              std::vector<float>& mx) {
  const std::size_t len = range.size();
  mn.assign(len, std::numeric_limits<float>::infinity());
  mx.assign(len, -std::numeric_limits<float>::infinity());
  for (const SubTrace& sub : subs) {
    const float* base = trace.samples.data() + static_cast<std::size_t>(
        static_cast<long long>(sub.start) + sub.sync_offset + static_cast<long long>(range.begin));
    for (std::size_t j = 0; j < len; ++j) {
      const float v = base[j];
      mn[j] = std::min(mn[j], v);
      mx[j] = std::max(mx[j], v);
    }
  }
}

inline void check_sets(const std::vector<SubTrace>& pd, const std::vector<SubTrace>& pa,
                       std::size_t min_each) {
  if (pd.size() < min_each || pa.size() < min_each) {
    throw AnalysisError("test needs at least " + std::to_string(min_each) +
                        " sub-traces per label set");
  }
}

}  // namespace detail

// Complete separation: at index i the amplitudes of one label set lie
// strictly below every amplitude of the other.
inline SeparationReport complete_separation(const Trace& trace, const std::vector<SubTrace>& pd,
                                            const std::vector<SubTrace>& pa,
                                            const SampleRange& range) {
  detail::check_sets(pd, pa, 1);
  SeparationReport rep;
  rep.range = range;
  detail::accumulate_minmax(trace, pd, range, rep.pd_min, rep.pd_max);
  detail::accumulate_minmax(trace, pa, range, rep.pa_min, rep.pa_max);
  const std::size_t len = range.size();
  rep.flags.assign(len, 0);
  for (std::size_t j = 0; j < len; ++j) {
    if (rep.pd_max[j] < rep.pa_min[j]) rep.flags[j] = 1;
    else if (rep.pa_max[j] < rep.pd_min[j]) rep.flags[j] = 2;
    if (rep.flags[j]) rep.separated.push_back(range.begin + j);
  }
  return rep;
}

struct MeanCiReport {
  SampleRange range;
  std::vector<double> pd_mean, pd_sigma, pa_mean, pa_sigma;
  std::vector<double> c_levels;
  // flags[level][index], 1 = the two c-sigma intervals are disjoint there.
  std::vector<std::vector<uint8_t>> flags;
  std::vector<std::vector<std::size_t>> separated;

  std::size_t separated_count(std::size_t level) const { return separated[level].size(); }
};

// Difference-of-means test: index i separates at level c when the intervals
// mean +/- c*sigma of the two label sets are disjoint. Sigma is the unbiased
// per-index sample standard deviation.
inline MeanCiReport mean_ci_separation(const Trace& trace, const std::vector<SubTrace>& pd,
                                       const std::vector<SubTrace>& pa, const SampleRange& range,
                                       std::vector<double> c_levels = {1.0, 2.0, 3.0}) {
  detail::check_sets(pd, pa, 2);
  const std::size_t len = range.size();
  MeanCiReport rep;
  rep.range = range;
  rep.c_levels = std::move(c_levels);

  auto stats = [&](const std::vector<SubTrace>& subs, std::vector<double>& mean,
                   std::vector<double>& sigma) {
    std::vector<double> sum(len, 0.0), sq(len, 0.0);
    for (const SubTrace& sub : subs) {
      const float* base = trace.samples.data() + static_cast<std::size_t>(
          static_cast<long long>(sub.start) + sub.sync_offset +
          static_cast<long long>(range.begin));
      for (std::size_t j = 0; j < len; ++j) {
        const double v = base[j];
        sum[j] += v;
        sq[j] += v * v;
      }
    }
    const double n = static_cast<double>(subs.size());
    mean.resize(len);
    sigma.resize(len);
    for (std::size_t j = 0; j < len; ++j) {
      mean[j] = sum[j] / n;
      const double var = std::max(0.0, (sq[j] - sum[j] * sum[j] / n) / (n - 1.0));
      sigma[j] = std::sqrt(var);
    }
  };
  stats(pd, rep.pd_mean, rep.pd_sigma);
  stats(pa, rep.pa_mean, rep.pa_sigma);

  rep.flags.resize(rep.c_levels.size());
  rep.separated.resize(rep.c_levels.size());
  for (std::size_t level = 0; level < rep.c_levels.size(); ++level) {
    const double c = rep.c_levels[level];
    rep.flags[level].assign(len, 0);
    for (std::size_t j = 0; j < len; ++j) {
      const bool disjoint =
          rep.pd_mean[j] + c * rep.pd_sigma[j] < rep.pa_mean[j] - c * rep.pa_sigma[j] ||
          rep.pa_mean[j] + c * rep.pa_sigma[j] < rep.pd_mean[j] - c * rep.pd_sigma[j];
      if (disjoint) {
        rep.flags[level][j] = 1;
        rep.separated[level].push_back(range.begin + j);
      }
    }
  }
  return rep;
}

// Combined per-index CSV of both tests, Fig-5-band style.
inline void write_report_csv(const SeparationReport& minmax, const MeanCiReport& ci,
                             std::ostream& os, const std::string& config_json = "") {
  if (minmax.range.begin != ci.range.begin || minmax.range.end != ci.range.end) {
    throw AnalysisError("reports cover different ranges");
  }
  if (!config_json.empty()) os << "# config=" << config_json << "\n";
  os << "index,pd_max,pd_min,pa_max,pa_min,pd_mean,pd_sigma,pa_mean,pa_sigma,"
        "separated_minmax,separated_c1,separated_c2,separated_c3\n";
  const char* names[3] = {"none", "pd_below", "pa_below"};
  char buf[256];
  for (std::size_t j = 0; j < minmax.range.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s,%d,%d,%d\n",
                  minmax.range.begin + j, static_cast<double>(minmax.pd_max[j]),
                  static_cast<double>(minmax.pd_min[j]), static_cast<double>(minmax.pa_max[j]),
                  static_cast<double>(minmax.pa_min[j]), ci.pd_mean[j], ci.pd_sigma[j],
                  ci.pa_mean[j], ci.pa_sigma[j], names[minmax.flags[j]],
                  ci.flags.size() > 0 ? ci.flags[0][j] : 0, ci.flags.size() > 1 ? ci.flags[1][j] : 0,
                  ci.flags.size() > 2 ? ci.flags[2][j] : 0);
    os << buf;
  }
}

}  // namespace atomsca
