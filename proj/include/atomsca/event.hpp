#pragma once

#include <array>
#include <cstdint>
#include <vector>

// Ground-truth event stream emitted while field operations execute. The
// executor annotates each primitive with its position in the pattern
// (block/slot), the registers it touches and the words it processes; the
// leakage simulator later turns this stream into a sampled trace.

namespace atomsca {

enum class EventKind : uint8_t {
  kMontMul,    // X  : first Montgomery multiplication of a field product
  kMontMulR2,  // X' : second Montgomery multiplication (by R^2)
  kNeg,        // N
  kAdd,        // A
  kNopShort,   // gap after an atomic block
  kNopLong,    // gap after a point operation (and idle prefix)
  kPatternStart,
  kPatternEnd,
};

enum class PatternKind : uint8_t { kNone, kPD, kPA };

inline bool is_field_op(EventKind k) {
  return k == EventKind::kMontMul || k == EventKind::kMontMulR2 ||
         k == EventKind::kNeg || k == EventKind::kAdd;
}

inline bool is_nop(EventKind k) {
  return k == EventKind::kNopShort || k == EventKind::kNopLong;
}

inline bool is_marker(EventKind k) {
  return k == EventKind::kPatternStart || k == EventKind::kPatternEnd;
}

struct FieldOpEvent {
  EventKind kind = EventKind::kNopShort;
  PatternKind pattern = PatternKind::kNone;
  uint32_t ordinal = 0;  // 1-based per pattern kind, counted from trace start
  uint8_t block = 0;     // 1-based atomic block index within the pattern
  uint8_t slot = 0;      // 1..7 within the block
  int8_t dst = -1;       // register indices; -1 = none
  int8_t src1 = -1;
  int8_t src2 = -1;
  bool dummy = false;
  uint8_t word_count = 0;            // operand+result limbs, in processing order
  std::array<uint64_t, 12> words{};  // up to 3 x 4 limbs
  uint32_t cycles = 0;               // duration; 0 = not yet assigned
};

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void push(const FieldOpEvent& ev) = 0;
};

class NullSink final : public EventSink {
 public:
  void push(const FieldOpEvent&) override {}
};

inline NullSink& null_sink() {
  static NullSink sink;
  return sink;
}

class RecordingSink final : public EventSink {
 public:
  void push(const FieldOpEvent& ev) override { events_.push_back(ev); }
  const std::vector<FieldOpEvent>& events() const { return events_; }
  std::vector<FieldOpEvent> take() { return std::move(events_); }
  void clear() { events_.clear(); }

 private:
  std::vector<FieldOpEvent> events_;
};

}  // namespace atomsca
