#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "atomsca/experiment.hpp"
#include "atomsca/trace_file.hpp"

using namespace atomsca;

namespace {

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

Trace small_trace() {
  ExperimentConfig cfg;
  cfg.scalar_bits = "101";
  cfg.trace.durations.mont_cycles = 50;
  cfg.trace.durations.neg_cycles = 10;
  cfg.trace.durations.add_cycles = 10;
  cfg.trace.nop_short_cycles = 30;
  cfg.trace.nop_long_cycles = 100;
  cfg.idle_prefix_cycles = 100;
  cfg.trace.noise_sigma = 0.2;
  KpRun run = run_kp(cfg);
  return simulate_trace(run.events, cfg.trace);
}

}  // namespace

TEST(TraceFile, BinaryRoundTrip) {
  const Trace trace = small_trace();
  const auto path = temp_path("atomsca_roundtrip.atrc");
  write_trace(trace, path.string());
  const Trace back = read_trace(path.string());
  EXPECT_EQ(back.samples_per_cycle, trace.samples_per_cycle);
  ASSERT_EQ(back.samples.size(), trace.samples.size());
  EXPECT_EQ(std::memcmp(back.samples.data(), trace.samples.data(),
                        trace.samples.size() * sizeof(float)),
            0);
  std::filesystem::remove(path);
}

TEST(TraceFile, RejectsForeignFiles) {
  const auto path = temp_path("atomsca_bogus.atrc");
  {
    std::ofstream os(path);
    os << "definitely not a trace";
  }
  EXPECT_THROW(read_trace(path.string()), std::runtime_error);
  std::filesystem::remove(path);
  EXPECT_THROW(read_trace((temp_path("atomsca_missing.atrc")).string()), std::runtime_error);
}

TEST(Annotations, SidecarRoundTrip) {
  const Trace trace = small_trace();
  std::stringstream ss;
  write_annotations(trace, ss);
  const auto back = read_annotations(ss);
  ASSERT_EQ(back.size(), trace.annotations.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = back[i];
    const auto& b = trace.annotations[i];
    EXPECT_EQ(a.start_sample, b.start_sample);
    EXPECT_EQ(a.event.kind, b.event.kind);
    EXPECT_EQ(a.event.cycles, b.event.cycles);
    EXPECT_EQ(a.event.pattern, b.event.pattern);
    EXPECT_EQ(a.event.ordinal, b.event.ordinal);
    EXPECT_EQ(a.event.block, b.event.block);
    EXPECT_EQ(a.event.slot, b.event.slot);
    EXPECT_EQ(a.event.dst, b.event.dst);
    EXPECT_EQ(a.event.src1, b.event.src1);
    EXPECT_EQ(a.event.src2, b.event.src2);
    EXPECT_EQ(a.event.dummy, b.event.dummy);
    EXPECT_EQ(a.event.word_count, b.event.word_count);
    for (int w = 0; w < a.event.word_count; ++w) EXPECT_EQ(a.event.words[w], b.event.words[w]);
  }
}

TEST(Annotations, SnrWorksOnReloadedTrace) {
  ExperimentConfig cfg;
  cfg.scalar_bits = "101";
  cfg.trace.durations.mont_cycles = 50;
  cfg.trace.durations.neg_cycles = 10;
  cfg.trace.durations.add_cycles = 10;
  cfg.trace.nop_short_cycles = 30;
  cfg.trace.nop_long_cycles = 100;
  cfg.idle_prefix_cycles = 100;
  cfg.trace.noise_sigma = 0.5;
  KpRun run = run_kp(cfg);
  const Trace trace = simulate_trace(run.events, cfg.trace);

  const auto tpath = temp_path("atomsca_snr.atrc");
  const auto apath = temp_path("atomsca_snr.ann.txt");
  write_trace(trace, tpath.string());
  write_annotations(trace, apath.string());

  Trace reloaded = read_trace(tpath.string());
  reloaded.annotations = read_annotations(apath.string());
  EXPECT_NEAR(snr(reloaded, cfg.trace), snr(trace, cfg.trace), 1e-9);

  std::filesystem::remove(tpath);
  std::filesystem::remove(apath);
}

TEST(SamplesCsv, HeaderAndRowFormat) {
  Trace trace;
  trace.samples = {1.0f, -0.5f, 0.25f};
  std::stringstream ss;
  write_samples_csv(trace, ss);
  EXPECT_EQ(ss.str(), "index,amplitude\n0,1\n1,-0.5\n2,0.25\n");
}
