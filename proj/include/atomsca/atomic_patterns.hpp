#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "atomsca/event.hpp"
#include "atomsca/field.hpp"

// MNAMNAA atomic patterns for Jacobian point doubling (4 blocks, 28 ops) and
// mixed point addition (6 blocks, 42 ops) on a register file T0..T10, Tx, Ty.
// The scripts are plain data: every block is the fixed 7-slot shape
// M N A M N A A, dummy slots compute on live registers but write the scratch
// register T0, and the executor emits one ground-truth event per primitive
// (a slot M expands into the two Montgomery multiplications X, X').

namespace atomsca {

enum Reg : int8_t {
  T0 = 0,  // dedicated dummy destination
  T1 = 1, T2 = 2, T3 = 3, T4 = 4, T5 = 5,
  T6 = 6, T7 = 7, T8 = 8, T9 = 9, T10 = 10,
  TX = 11,  // affine addend x, read-only
  TY = 12,  // affine addend y, read-only
  kRegisterCount = 13,
  kNoReg = -1,
};

enum class OpKind : uint8_t { M, N, A };

struct AtomicOp {
  OpKind kind;
  int8_t dst;
  int8_t src1;
  int8_t src2;  // kNoReg for N
  bool dummy;
  uint8_t block;  // 1-based
  uint8_t slot;   // 1..7
};

struct AtomicScript {
  PatternKind pattern = PatternKind::kNone;
  std::vector<AtomicOp> ops;

  std::size_t block_count() const { return ops.empty() ? 0 : ops.back().block; }
};

using RegisterFile = std::array<FieldElement, kRegisterCount>;

// Slot positions 1..7 map to the fixed kind sequence M N A M N A A.
inline OpKind slot_kind(uint8_t slot) {
  switch (slot) {
    case 1: case 4: return OpKind::M;
    case 2: case 5: return OpKind::N;
    default: return OpKind::A;
  }
}

namespace detail {

// Point doubling, input (X1,Y1,Z1) in T1..T3, output (X3,Y3,Z3) in T1..T3.
inline const std::array<AtomicOp, 28> kDoublingOps = {{
    // block 1
    {OpKind::M, T4, T3, T3, false, 1, 1},
    {OpKind::N, T0, T1, kNoReg, true, 1, 2},
    {OpKind::A, T5, T1, T4, false, 1, 3},
    {OpKind::M, T6, T2, T2, false, 1, 4},
    {OpKind::N, T4, T4, kNoReg, false, 1, 5},
    {OpKind::A, T2, T2, T2, false, 1, 6},
    {OpKind::A, T4, T1, T4, false, 1, 7},
    // block 2
    {OpKind::M, T5, T4, T5, false, 2, 1},
    {OpKind::N, T0, T2, kNoReg, true, 2, 2},
    {OpKind::A, T4, T5, T5, false, 2, 3},
    {OpKind::M, T3, T2, T3, false, 2, 4},
    {OpKind::N, T0, T4, kNoReg, true, 2, 5},
    {OpKind::A, T4, T4, T5, false, 2, 6},
    {OpKind::A, T2, T6, T6, false, 2, 7},
    // block 3
    {OpKind::M, T5, T4, T4, false, 3, 1},
    {OpKind::N, T0, T1, kNoReg, true, 3, 2},
    {OpKind::A, T6, T2, T2, false, 3, 3},
    {OpKind::M, T6, T1, T6, false, 3, 4},
    {OpKind::N, T1, T6, kNoReg, false, 3, 5},
    {OpKind::A, T1, T1, T1, false, 3, 6},
    {OpKind::A, T1, T1, T5, false, 3, 7},
    // block 4
    {OpKind::M, T2, T2, T2, false, 4, 1},
    {OpKind::N, T5, T1, kNoReg, false, 4, 2},
    {OpKind::A, T5, T5, T6, false, 4, 3},
    {OpKind::M, T5, T4, T5, false, 4, 4},
    {OpKind::N, T2, T2, kNoReg, false, 4, 5},
    {OpKind::A, T2, T2, T2, false, 4, 6},
    {OpKind::A, T2, T2, T5, false, 4, 7},
}};

// Mixed addition, Jacobian (X1,Y1,Z1) in T1..T3 plus affine (X2,Y2) in
// Tx,Ty; output (X3,Y3,Z3) in T1..T3, re-addition leftovers in T4,T5.
inline const std::array<AtomicOp, 42> kAdditionOps = {{
    // block 1
    {OpKind::M, T4, T3, T3, false, 1, 1},
    {OpKind::N, T0, T1, kNoReg, true, 1, 2},
    {OpKind::A, T0, T1, T4, true, 1, 3},
    {OpKind::M, T5, TX, T4, false, 1, 4},
    {OpKind::N, T6, T1, kNoReg, false, 1, 5},
    {OpKind::A, T5, T5, T6, false, 1, 6},
    {OpKind::A, T0, T1, T4, true, 1, 7},
    // block 2
    {OpKind::M, T6, T5, T5, false, 2, 1},
    {OpKind::N, T0, T2, kNoReg, true, 2, 2},
    {OpKind::A, T0, T5, T5, true, 2, 3},
    {OpKind::M, T7, T1, T6, false, 2, 4},
    {OpKind::N, T0, T4, kNoReg, true, 2, 5},
    {OpKind::A, T8, T7, T7, false, 2, 6},
    {OpKind::A, T0, T6, T6, true, 2, 7},
    // block 3
    {OpKind::M, T9, T5, T6, false, 3, 1},
    {OpKind::N, T0, T1, kNoReg, true, 3, 2},
    {OpKind::A, T8, T8, T9, false, 3, 3},
    {OpKind::M, T4, T3, T4, false, 3, 4},
    {OpKind::N, T0, T6, kNoReg, true, 3, 5},
    {OpKind::A, T0, T1, T1, true, 3, 6},
    {OpKind::A, T0, T1, T5, true, 3, 7},
    // block 4
    {OpKind::M, T4, TY, T4, false, 4, 1},
    {OpKind::N, T10, T2, kNoReg, false, 4, 2},
    {OpKind::A, T4, T4, T10, false, 4, 3},
    {OpKind::M, T10, T4, T4, false, 4, 4},
    {OpKind::N, T8, T8, kNoReg, false, 4, 5},
    {OpKind::A, T1, T10, T8, false, 4, 6},
    {OpKind::A, T0, T2, T5, true, 4, 7},
    // block 5
    {OpKind::M, T8, T2, T9, false, 5, 1},
    {OpKind::N, T6, T1, kNoReg, false, 5, 2},
    {OpKind::A, T6, T6, T7, false, 5, 3},
    {OpKind::M, T6, T6, T4, false, 5, 4},
    {OpKind::N, T9, T8, kNoReg, false, 5, 5},
    {OpKind::A, T2, T6, T9, false, 5, 6},
    {OpKind::A, T0, T2, T5, true, 5, 7},
    // block 6
    {OpKind::M, T3, T3, T5, false, 6, 1},
    {OpKind::N, T4, T7, kNoReg, false, 6, 2},
    {OpKind::A, T4, T1, T4, false, 6, 3},
    {OpKind::M, T5, T4, T4, false, 6, 4},
    {OpKind::N, T6, T8, kNoReg, false, 6, 5},
    {OpKind::A, T6, T2, T6, false, 6, 6},
    {OpKind::A, T0, T2, T5, true, 6, 7},
}};

}  // namespace detail

inline const AtomicScript& doubling_script() {
  static const AtomicScript script{
      PatternKind::kPD,
      std::vector<AtomicOp>(detail::kDoublingOps.begin(), detail::kDoublingOps.end())};
  return script;
}

inline const AtomicScript& addition_script() {
  static const AtomicScript script{
      PatternKind::kPA,
      std::vector<AtomicOp>(detail::kAdditionOps.begin(), detail::kAdditionOps.end())};
  return script;
}

struct ShapeReport {
  bool valid = true;
  std::size_t bad_op_index = 0;  // 0-based index of the first violating op
  std::string reason;
};

// Checks the 7-slot block shape, the slot->kind map, the dummy destination
// rule and dummy isolation (a real op never reads T0, so no dummy result can
// feed a real computation).
inline ShapeReport validate_pattern(const AtomicScript& script) {
  auto fail = [](std::size_t i, std::string why) {
    return ShapeReport{false, i, std::move(why)};
  };
  if (script.ops.empty()) return fail(0, "empty script");
  for (std::size_t i = 0; i < script.ops.size(); ++i) {
    const AtomicOp& op = script.ops[i];
    const uint8_t expect_block = static_cast<uint8_t>(i / 7 + 1);
    const uint8_t expect_slot = static_cast<uint8_t>(i % 7 + 1);
    if (op.block != expect_block || op.slot != expect_slot) {
      return fail(i, "block/slot numbering is not the consecutive 7-slot shape");
    }
    if (op.kind != slot_kind(op.slot)) return fail(i, "op kind violates the MNAMNAA slot map");
    auto reg_ok = [](int8_t r) { return r >= 0 && r < kRegisterCount; };
    if (!reg_ok(op.dst) || !reg_ok(op.src1)) return fail(i, "invalid register index");
    if (op.kind == OpKind::N) {
      if (op.src2 != kNoReg) return fail(i, "negation takes a single source");
    } else if (!reg_ok(op.src2)) {
      return fail(i, "invalid register index");
    }
    if (op.dst == TX || op.dst == TY) return fail(i, "Tx/Ty are read-only");
    if (op.dummy && op.dst != T0) return fail(i, "dummy op must write T0");
    if (!op.dummy && (op.src1 == T0 || (op.kind != OpKind::N && op.src2 == T0))) {
      return fail(i, "real op reads the dummy scratch register");
    }
  }
  if (script.ops.size() % 7 != 0) return fail(script.ops.size() - 1, "trailing partial block");
  return ShapeReport{};
}

// Runs a script over the register file, emitting one annotated event per
// primitive field operation. Throws if the script fails shape validation.
inline RegisterFile& execute(const AtomicScript& script, RegisterFile& regs,
                             const MontgomeryContext& ctx, EventSink& sink) {
  const ShapeReport shape = validate_pattern(script);
  if (!shape.valid) {
    throw std::invalid_argument("invalid atomic script at op " +
                                std::to_string(shape.bad_op_index + 1) + ": " + shape.reason);
  }

  // Stamps pattern position and register annotations onto the bare field
  // events produced by the arithmetic layer.
  class Annotator final : public EventSink {
   public:
    Annotator(EventSink& out, PatternKind pattern) : out_(out), pattern_(pattern) {}
    void set_op(const AtomicOp& op) { op_ = &op; }
    void push(const FieldOpEvent& ev) override {
      FieldOpEvent e = ev;
      e.pattern = pattern_;
      e.block = op_->block;
      e.slot = op_->slot;
      e.dummy = op_->dummy;
      e.dst = op_->dst;
      if (e.kind == EventKind::kMontMulR2) {
        // X' reads and writes the destination; the R^2 operand is a shared
        // constant, not a pattern register.
        e.src1 = op_->dst;
        e.src2 = kNoReg;
      } else {
        e.src1 = op_->src1;
        e.src2 = op_->kind == OpKind::N ? kNoReg : op_->src2;
      }
      out_.push(e);
    }

   private:
    EventSink& out_;
    PatternKind pattern_;
    const AtomicOp* op_ = nullptr;
  };

  Annotator annotator(sink, script.pattern);
  for (const AtomicOp& op : script.ops) {
    annotator.set_op(op);
    FieldElement r;
    switch (op.kind) {
      case OpKind::M:
        r = field_mul(regs[static_cast<std::size_t>(op.src1)],
                      regs[static_cast<std::size_t>(op.src2)], ctx, annotator);
        break;
      case OpKind::N:
        r = field_neg(regs[static_cast<std::size_t>(op.src1)], ctx, annotator);
        break;
      case OpKind::A:
        r = field_add(regs[static_cast<std::size_t>(op.src1)],
                      regs[static_cast<std::size_t>(op.src2)], ctx, annotator);
        break;
    }
    regs[static_cast<std::size_t>(op.dst)] = r;
  }
  return regs;
}

// --- script text form: one op per line, for documentation and cross-checks ---

inline const char* reg_name(int8_t r) {
  static const char* names[kRegisterCount] = {"T0", "T1", "T2", "T3", "T4", "T5", "T6",
                                              "T7", "T8", "T9", "T10", "TX", "TY"};
  return r == kNoReg ? "-" : names[r];
}

inline void write_script(const AtomicScript& script, std::ostream& os) {
  os << "script " << (script.pattern == PatternKind::kPD ? "PD" : "PA") << " ops "
     << script.ops.size() << "\n";
  os << "# index kind dst src1 src2 dummy block slot\n";
  for (std::size_t i = 0; i < script.ops.size(); ++i) {
    const AtomicOp& op = script.ops[i];
    const char kind = op.kind == OpKind::M ? 'M' : op.kind == OpKind::N ? 'N' : 'A';
    os << i + 1 << ' ' << kind << ' ' << reg_name(op.dst) << ' ' << reg_name(op.src1) << ' '
       << reg_name(op.src2) << ' ' << (op.dummy ? 1 : 0) << ' ' << int(op.block) << ' '
       << int(op.slot) << "\n";
  }
}

inline int8_t parse_reg(const std::string& tok) {
  if (tok == "-") return kNoReg;
  for (int8_t r = 0; r < kRegisterCount; ++r) {
    if (tok == reg_name(r)) return r;
  }
  throw std::invalid_argument("unknown register name: " + tok);
}

inline AtomicScript read_script(std::istream& is) {
  AtomicScript script;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string first;
    ls >> first;
    if (first == "script") {
      std::string kind, opsword;
      ls >> kind >> opsword >> expected;
      if (kind == "PD") script.pattern = PatternKind::kPD;
      else if (kind == "PA") script.pattern = PatternKind::kPA;
      else throw std::invalid_argument("unknown script pattern: " + kind);
      continue;
    }
    AtomicOp op{};
    std::string kind, dst, s1, s2;
    int dummy = 0, block = 0, slot = 0;
    ls >> kind >> dst >> s1 >> s2 >> dummy >> block >> slot;
    if (ls.fail() || kind.size() != 1) throw std::invalid_argument("malformed script line: " + line);
    op.kind = kind[0] == 'M' ? OpKind::M : kind[0] == 'N' ? OpKind::N : OpKind::A;
    op.dst = parse_reg(dst);
    op.src1 = parse_reg(s1);
    op.src2 = parse_reg(s2);
    op.dummy = dummy != 0;
    op.block = static_cast<uint8_t>(block);
    op.slot = static_cast<uint8_t>(slot);
    script.ops.push_back(op);
  }
  if (script.pattern == PatternKind::kNone) throw std::invalid_argument("missing script header");
  if (expected != script.ops.size()) throw std::invalid_argument("script op count mismatch");
  return script;
}

}  // namespace atomsca
