#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "atomsca/leakage_sim.hpp"

// Trace container format:
//   header  { magic "ATRC", u32 version, u32 samples_per_cycle, u64 count }
//   payload raw little-endian float32 samples
// Ground-truth annotations travel in a separate text sidecar keyed by sample
// offset, one event per line.

namespace atomsca {

static_assert(std::endian::native == std::endian::little,
              "trace container assumes a little-endian host");

inline constexpr char kTraceMagic[4] = {'A', 'T', 'R', 'C'};
inline constexpr uint32_t kTraceVersion = 1;

inline void write_trace(const Trace& trace, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open trace file for writing: " + path);
  os.write(kTraceMagic, 4);
  const uint32_t version = kTraceVersion;
  const uint32_t spc = trace.samples_per_cycle;
  const uint64_t count = trace.samples.size();
  os.write(reinterpret_cast<const char*>(&version), sizeof version);
  os.write(reinterpret_cast<const char*>(&spc), sizeof spc);
  os.write(reinterpret_cast<const char*>(&count), sizeof count);
  os.write(reinterpret_cast<const char*>(trace.samples.data()),
           static_cast<std::streamsize>(count * sizeof(float)));
  if (!os) throw std::runtime_error("short write on trace file: " + path);
}

inline Trace read_trace(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open trace file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kTraceMagic, 4) != 0) {
    throw std::runtime_error("not a trace file (bad magic): " + path);
  }
  uint32_t version = 0, spc = 0;
  uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof version);
  is.read(reinterpret_cast<char*>(&spc), sizeof spc);
  is.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!is || version != kTraceVersion) throw std::runtime_error("unsupported trace version");
  Trace trace;
  trace.samples_per_cycle = spc;
  trace.samples.resize(count);
  is.read(reinterpret_cast<char*>(trace.samples.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!is) throw std::runtime_error("truncated trace payload: " + path);
  return trace;
}

namespace detail {

inline const char* event_kind_token(EventKind k) {
  switch (k) {
    case EventKind::kMontMul: return "X";
    case EventKind::kMontMulR2: return "X'";
    case EventKind::kNeg: return "N";
    case EventKind::kAdd: return "A";
    case EventKind::kNopShort: return "NOP_S";
    case EventKind::kNopLong: return "NOP_L";
    case EventKind::kPatternStart: return "START";
    default: return "END";
  }
}

inline EventKind parse_event_kind(const std::string& tok) {
  if (tok == "X") return EventKind::kMontMul;
  if (tok == "X'") return EventKind::kMontMulR2;
  if (tok == "N") return EventKind::kNeg;
  if (tok == "A") return EventKind::kAdd;
  if (tok == "NOP_S") return EventKind::kNopShort;
  if (tok == "NOP_L") return EventKind::kNopLong;
  if (tok == "START") return EventKind::kPatternStart;
  if (tok == "END") return EventKind::kPatternEnd;
  throw std::runtime_error("unknown event kind token: " + tok);
}

}  // namespace detail

inline void write_annotations(const Trace& trace, std::ostream& os) {
  os << "# start cycles kind pattern ordinal block slot dst src1 src2 dummy words\n";
  for (const AnnotatedEvent& ann : trace.annotations) {
    const FieldOpEvent& e = ann.event;
    os << ann.start_sample << ' ' << e.cycles << ' ' << detail::event_kind_token(e.kind) << ' '
       << (e.pattern == PatternKind::kPD ? "PD" : e.pattern == PatternKind::kPA ? "PA" : "-")
       << ' ' << e.ordinal << ' ' << int(e.block) << ' ' << int(e.slot) << ' ' << int(e.dst)
       << ' ' << int(e.src1) << ' ' << int(e.src2) << ' ' << (e.dummy ? 1 : 0);
    os << ' ';
    if (e.word_count == 0) {
      os << '-';
    } else {
      char buf[17];
      for (int w = 0; w < e.word_count; ++w) {
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(e.words[w]));
        if (w) os << ',';
        os << buf;
      }
    }
    os << '\n';
  }
}

inline void write_annotations(const Trace& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open annotation file for writing: " + path);
  write_annotations(trace, os);
}

inline std::vector<AnnotatedEvent> read_annotations(std::istream& is) {
  std::vector<AnnotatedEvent> anns;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    AnnotatedEvent ann;
    FieldOpEvent& e = ann.event;
    std::string kind, pattern, words;
    uint64_t start = 0;
    int block = 0, slot = 0, dst = 0, src1 = 0, src2 = 0, dummy = 0;
    ls >> start >> e.cycles >> kind >> pattern >> e.ordinal >> block >> slot >> dst >> src1 >>
        src2 >> dummy >> words;
    if (ls.fail()) throw std::runtime_error("malformed annotation line: " + line);
    ann.start_sample = start;
    e.kind = detail::parse_event_kind(kind);
    e.pattern = pattern == "PD"   ? PatternKind::kPD
                : pattern == "PA" ? PatternKind::kPA
                                  : PatternKind::kNone;
    e.block = static_cast<uint8_t>(block);
    e.slot = static_cast<uint8_t>(slot);
    e.dst = static_cast<int8_t>(dst);
    e.src1 = static_cast<int8_t>(src1);
    e.src2 = static_cast<int8_t>(src2);
    e.dummy = dummy != 0;
    if (words != "-") {
      std::size_t pos = 0;
      int n = 0;
      while (pos < words.size() && n < 12) {
        e.words[n++] = std::stoull(words.substr(pos, 16), nullptr, 16);
        pos += 17;  // 16 hex digits + comma
      }
      e.word_count = static_cast<uint8_t>(n);
    }
    anns.push_back(ann);
  }
  return anns;
}

inline std::vector<AnnotatedEvent> read_annotations(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open annotation file: " + path);
  return read_annotations(is);
}

// (index, amplitude) CSV for external plotting.
inline void write_samples_csv(const Trace& trace, std::ostream& os, std::size_t begin = 0,
                              std::size_t end = SIZE_MAX) {
  os << "index,amplitude\n";
  end = std::min(end, trace.samples.size());
  char buf[64];
  for (std::size_t i = begin; i < end; ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, static_cast<double>(trace.samples[i]));
    os << buf;
  }
}

}  // namespace atomsca
