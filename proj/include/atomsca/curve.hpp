#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomsca/atomic_patterns.hpp"
#include "atomsca/event.hpp"
#include "atomsca/field.hpp"

// NIST P-256 scalar multiplication: the left-to-right binary double-and-add
// loop driving the atomic-pattern executor, plus textbook Jacobian formulas
// kept as an independent in-process verification path.

namespace atomsca {

struct AffinePoint {
  FieldElement x;
  FieldElement y;
  bool infinity = false;

  friend bool operator==(const AffinePoint&, const AffinePoint&) = default;
};

struct JacobianPoint {
  FieldElement X;
  FieldElement Y;
  FieldElement Z;
};

// MSB-first bit string; the leading bit of a valid scalar is 1.
struct Scalar {
  std::vector<uint8_t> bits;

  static Scalar from_bit_string(const std::string& s) {
    if (s.empty() || s.size() > 256) throw std::invalid_argument("scalar must have 1..256 bits");
    if (s[0] != '1') throw std::invalid_argument("scalar leading bit must be 1");
    Scalar k;
    k.bits.reserve(s.size());
    for (char c : s) {
      if (c != '0' && c != '1') throw std::invalid_argument("scalar bits must be 0/1");
      k.bits.push_back(static_cast<uint8_t>(c - '0'));
    }
    return k;
  }

  std::size_t length() const { return bits.size(); }
  // Ones among the processed bits k_{l-2}..k_0 = number of point additions.
  std::size_t processed_ones() const {
    std::size_t n = 0;
    for (std::size_t i = 1; i < bits.size(); ++i) n += bits[i];
    return n;
  }
};

struct CurveContext {
  MontgomeryContext field;
  FieldElement b;      // curve coefficient, y^2 = x^3 - 3x + b
  AffinePoint g;       // base point
  FieldElement order;  // group order n (informational)
};

inline FieldElement fe_one() {
  FieldElement one;
  one.limbs[0] = 1;
  return one;
}

inline bool on_curve(const AffinePoint& pt, const CurveContext& ctx);

inline const CurveContext& p256() {
  static const CurveContext ctx = [] {
    CurveContext c;
    c.field = MontgomeryContext::create(
        from_hex("ffffffff00000001000000000000000000000000ffffffffffffffffffffffff"));
    c.b = from_hex("5ac635d8aa3a93e7b3ebbd55769886bc651d06b0cc53b0f63bce3c3e27d2604b");
    c.g.x = from_hex("6b17d1f2e12c4247f8bce6e563a440f277037d812deb33a0f4a13945d898c296");
    c.g.y = from_hex("4fe342e2fe1a7f9b8ee7eb4a7c0f9e162bce33576b315ececbb6406837bf51f5");
    c.order = from_hex("ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551");
    if (!on_curve(c.g, c)) throw std::logic_error("P-256 base point fails the curve equation");
    return c;
  }();
  return ctx;
}

inline bool on_curve(const AffinePoint& pt, const CurveContext& ctx) {
  if (pt.infinity) return true;
  EventSink& sink = null_sink();
  const MontgomeryContext& f = ctx.field;
  const FieldElement y2 = field_mul(pt.y, pt.y, f, sink);
  const FieldElement x2 = field_mul(pt.x, pt.x, f, sink);
  const FieldElement x3 = field_mul(x2, pt.x, f, sink);
  FieldElement rhs = field_add(x3, ctx.b, f, sink);
  const FieldElement three_x = field_add(field_add(pt.x, pt.x, f, sink), pt.x, f, sink);
  rhs = field_add(rhs, field_neg(three_x, f, sink), f, sink);
  return y2 == rhs;
}

// Textbook Jacobian doubling for a = -3:
//   alpha = 3(X - Z^2)(X + Z^2), beta = 4 X Y^2,
//   X3 = alpha^2 - 2 beta, Y3 = alpha(beta - X3) - 8 Y^4, Z3 = 2 Y Z.
inline JacobianPoint oracle_double(const JacobianPoint& pt, const CurveContext& ctx) {
  EventSink& s = null_sink();
  const MontgomeryContext& f = ctx.field;
  const FieldElement z2 = field_mul(pt.Z, pt.Z, f, s);
  const FieldElement t1 = field_add(pt.X, field_neg(z2, f, s), f, s);  // X - Z^2
  const FieldElement t2 = field_add(pt.X, z2, f, s);                   // X + Z^2
  const FieldElement prod = field_mul(t1, t2, f, s);
  const FieldElement alpha = field_add(field_add(prod, prod, f, s), prod, f, s);
  const FieldElement y2 = field_mul(pt.Y, pt.Y, f, s);
  const FieldElement xy2 = field_mul(pt.X, y2, f, s);
  const FieldElement beta = field_add(field_add(xy2, xy2, f, s), field_add(xy2, xy2, f, s), f, s);
  JacobianPoint r;
  const FieldElement alpha2 = field_mul(alpha, alpha, f, s);
  r.X = field_add(alpha2, field_neg(field_add(beta, beta, f, s), f, s), f, s);
  const FieldElement y4 = field_mul(y2, y2, f, s);
  FieldElement y4_8 = field_add(y4, y4, f, s);
  y4_8 = field_add(y4_8, y4_8, f, s);
  y4_8 = field_add(y4_8, y4_8, f, s);
  const FieldElement diff = field_add(beta, field_neg(r.X, f, s), f, s);
  r.Y = field_add(field_mul(alpha, diff, f, s), field_neg(y4_8, f, s), f, s);
  const FieldElement yz = field_mul(pt.Y, pt.Z, f, s);
  r.Z = field_add(yz, yz, f, s);
  return r;
}

// Textbook mixed Jacobian-affine addition. The degenerate case J = +/-A
// (H = 0) is signalled instead of silently producing a wrong point; it
// cannot occur inside the double-and-add loop for scalars below the order.
inline JacobianPoint oracle_add(const JacobianPoint& j, const AffinePoint& a,
                                const CurveContext& ctx) {
  if (a.infinity) throw std::domain_error("oracle_add requires a finite affine addend");
  EventSink& s = null_sink();
  const MontgomeryContext& f = ctx.field;
  const FieldElement z2 = field_mul(j.Z, j.Z, f, s);
  const FieldElement u2 = field_mul(a.x, z2, f, s);
  const FieldElement z3 = field_mul(j.Z, z2, f, s);
  const FieldElement s2 = field_mul(a.y, z3, f, s);
  const FieldElement h = field_add(u2, field_neg(j.X, f, s), f, s);
  const FieldElement r = field_add(s2, field_neg(j.Y, f, s), f, s);
  if (h.is_zero()) throw std::domain_error("degenerate addition: operands are equal or opposite");
  const FieldElement h2 = field_mul(h, h, f, s);
  const FieldElement h3 = field_mul(h, h2, f, s);
  const FieldElement u1h2 = field_mul(j.X, h2, f, s);
  JacobianPoint out;
  const FieldElement r2 = field_mul(r, r, f, s);
  FieldElement acc = field_add(r2, field_neg(h3, f, s), f, s);
  acc = field_add(acc, field_neg(field_add(u1h2, u1h2, f, s), f, s), f, s);
  out.X = acc;
  const FieldElement mid = field_add(u1h2, field_neg(out.X, f, s), f, s);
  out.Y = field_add(field_mul(r, mid, f, s),
                    field_neg(field_mul(j.Y, h3, f, s), f, s), f, s);
  out.Z = field_mul(j.Z, h, f, s);
  return out;
}

// Field inversion by exponentiation with p - 2.
inline FieldElement field_inverse(const FieldElement& a, const MontgomeryContext& f) {
  EventSink& s = null_sink();
  uint64_t e[kLimbs];
  uint64_t borrow = 0;
  FieldElement two;
  two.limbs[0] = 2;
  for (int i = 0; i < kLimbs; ++i) borrow = detail::sbb(f.p.limbs[i], two.limbs[i], borrow, e[i]);
  FieldElement result = fe_one();
  FieldElement base = a;
  for (int limb = 0; limb < kLimbs; ++limb) {
    for (int bit = 0; bit < 64; ++bit) {
      if ((e[limb] >> bit) & 1) result = field_mul(result, base, f, s);
      base = field_mul(base, base, f, s);
    }
  }
  return result;
}

inline AffinePoint to_affine(const JacobianPoint& pt, const CurveContext& ctx) {
  if (pt.Z.is_zero()) throw std::domain_error("point at infinity has no affine form");
  EventSink& s = null_sink();
  const MontgomeryContext& f = ctx.field;
  const FieldElement zi = field_inverse(pt.Z, f);
  const FieldElement zi2 = field_mul(zi, zi, f, s);
  AffinePoint r;
  r.x = field_mul(pt.X, zi2, f, s);
  r.y = field_mul(pt.Y, field_mul(zi2, zi, f, s), f, s);
  return r;
}

namespace detail {

// Wraps the caller's sink during scalar multiplication: stamps pattern kind
// and ordinal on op events, inserts a short NOP gap at block transitions and
// pattern start/end markers with a long NOP gap after each point operation.
// NOP and marker durations stay unassigned here; the leakage layer owns them.
class PatternStream final : public EventSink {
 public:
  explicit PatternStream(EventSink& out) : out_(out) {}

  void begin_pattern(PatternKind kind) {
    current_ = kind;
    ordinal_ = kind == PatternKind::kPD ? ++pd_count_ : ++pa_count_;
    last_block_ = 0;
    FieldOpEvent ev;
    ev.kind = EventKind::kPatternStart;
    ev.pattern = current_;
    ev.ordinal = ordinal_;
    out_.push(ev);
  }

  void end_pattern() {
    FieldOpEvent ev;
    ev.kind = EventKind::kPatternEnd;
    ev.pattern = current_;
    ev.ordinal = ordinal_;
    out_.push(ev);
    ev.kind = EventKind::kNopLong;
    ev.pattern = PatternKind::kNone;
    ev.ordinal = 0;
    out_.push(ev);
    current_ = PatternKind::kNone;
  }

  void push(const FieldOpEvent& e) override {
    if (last_block_ != 0 && e.block != last_block_) {
      FieldOpEvent gap;
      gap.kind = EventKind::kNopShort;
      out_.push(gap);
    }
    last_block_ = e.block;
    FieldOpEvent ev = e;
    ev.ordinal = ordinal_;
    out_.push(ev);
  }

  std::size_t pd_count() const { return pd_count_; }
  std::size_t pa_count() const { return pa_count_; }

 private:
  EventSink& out_;
  PatternKind current_ = PatternKind::kNone;
  uint32_t ordinal_ = 0;
  uint32_t pd_count_ = 0;
  uint32_t pa_count_ = 0;
  uint8_t last_block_ = 0;
};

}  // namespace detail

// Left-to-right binary double-and-add over the atomic patterns. Processes
// bits k_{l-2}..k_0: each iteration runs the doubling script and, for a set
// bit, the mixed-addition script with the base point in Tx/Ty.
inline JacobianPoint scalar_mul(const Scalar& k, const AffinePoint& p, const CurveContext& ctx,
                                EventSink& sink) {
  if (k.bits.empty() || k.bits[0] != 1) throw std::invalid_argument("scalar leading bit must be 1");
  if (p.infinity) throw std::invalid_argument("base point must be finite");
  if (!on_curve(p, ctx)) throw std::invalid_argument("base point is not on the curve");

  detail::PatternStream stream(sink);
  RegisterFile regs{};
  regs[T1] = p.x;
  regs[T2] = p.y;
  regs[T3] = fe_one();

  for (std::size_t i = 1; i < k.bits.size(); ++i) {
    stream.begin_pattern(PatternKind::kPD);
    execute(doubling_script(), regs, ctx.field, stream);
    stream.end_pattern();
    if (k.bits[i]) {
      regs[TX] = p.x;
      regs[TY] = p.y;
      stream.begin_pattern(PatternKind::kPA);
      execute(addition_script(), regs, ctx.field, stream);
      stream.end_pattern();
    }
  }
  return JacobianPoint{regs[T1], regs[T2], regs[T3]};
}

// Independent double-and-add over the textbook formulas; the verification
// route for scalar_mul.
inline JacobianPoint oracle_scalar_mul(const Scalar& k, const AffinePoint& p,
                                       const CurveContext& ctx) {
  JacobianPoint q{p.x, p.y, fe_one()};
  for (std::size_t i = 1; i < k.bits.size(); ++i) {
    q = oracle_double(q, ctx);
    if (k.bits[i]) q = oracle_add(q, p, ctx);
  }
  return q;
}

}  // namespace atomsca
