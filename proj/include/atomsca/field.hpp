#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "atomsca/event.hpp"

// Arithmetic modulo the NIST P-256 prime with constant operation structure:
// no data-dependent branches or memory addressing anywhere in the word-level
// code. Elements live in the plain residue domain; a full modular product is
// realised as two Montgomery multiplications (X, then X' by R^2), which is
// also how the two multiplication events per pattern slot M arise.

namespace atomsca {

inline constexpr int kLimbs = 4;  // 4 x 64-bit limbs, R = 2^256

struct FieldElement {
  std::array<uint64_t, kLimbs> limbs{};

  friend bool operator==(const FieldElement&, const FieldElement&) = default;
  bool is_zero() const { return (limbs[0] | limbs[1] | limbs[2] | limbs[3]) == 0; }
};

// Word-level operation counters, used to demonstrate that the Montgomery
// routine executes an input-independent number of each operation kind.
struct WordOpCounts {
  uint64_t mul64 = 0;
  uint64_t add64 = 0;
  uint64_t sub64 = 0;
  uint64_t select64 = 0;

  friend bool operator==(const WordOpCounts&, const WordOpCounts&) = default;
};

inline WordOpCounts& word_op_counts() {
  thread_local WordOpCounts counts;
  return counts;
}

inline void reset_word_op_counts() { word_op_counts() = WordOpCounts{}; }

namespace detail {

using u128 = unsigned __int128;

// r = a - b - borrow_in, returns borrow_out in {0,1}.
inline uint64_t sbb(uint64_t a, uint64_t b, uint64_t borrow, uint64_t& r) {
  u128 d = static_cast<u128>(a) - b - borrow;
  r = static_cast<uint64_t>(d);
  word_op_counts().sub64++;
  return static_cast<uint64_t>(d >> 64) & 1;
}

inline uint64_t adc(uint64_t a, uint64_t b, uint64_t carry, uint64_t& r) {
  u128 s = static_cast<u128>(a) + b + carry;
  r = static_cast<uint64_t>(s);
  word_op_counts().add64++;
  return static_cast<uint64_t>(s >> 64);
}

// Constant-structure select: mask is all-ones or all-zeros per limb.
inline void masked_select(const uint64_t* on, const uint64_t* off, uint64_t mask,
                          uint64_t* out) {
  for (int i = 0; i < kLimbs; ++i) {
    out[i] = (on[i] & mask) | (off[i] & ~mask);
    word_op_counts().select64++;
  }
}

}  // namespace detail

struct MontgomeryContext {
  FieldElement p;         // modulus
  FieldElement r_mod_p;   // 2^256 mod p
  FieldElement r2_mod_p;  // (2^256)^2 mod p
  uint64_t n0 = 0;        // -p^{-1} mod 2^64

  // Builds the context for a modulus p with 2^255 < p < 2^256 and p odd.
  static MontgomeryContext create(const FieldElement& modulus) {
    MontgomeryContext ctx;
    ctx.p = modulus;
    if ((modulus.limbs[0] & 1) == 0 || (modulus.limbs[3] >> 63) == 0) {
      throw std::invalid_argument("modulus must be odd and 256 bits wide");
    }
    // Newton iteration for p^{-1} mod 2^64, then negate.
    uint64_t inv = modulus.limbs[0];
    for (int i = 0; i < 5; ++i) inv *= 2 - modulus.limbs[0] * inv;
    ctx.n0 = ~inv + 1;
    if (modulus.limbs[0] * inv != 1) throw std::logic_error("n0 computation failed");

    // 2^256 mod p = 2^256 - p when p > 2^255.
    uint64_t borrow = 0;
    for (int i = 0; i < kLimbs; ++i) {
      borrow = detail::sbb(0, modulus.limbs[i], borrow, ctx.r_mod_p.limbs[i]);
    }
    // R^2 mod p by 256 modular doublings of R mod p.
    FieldElement acc = ctx.r_mod_p;
    for (int i = 0; i < 256; ++i) acc = mod_add(acc, acc, modulus);
    ctx.r2_mod_p = acc;
    return ctx;
  }

  // (a + b) mod p, branchless; used internally before the context exists.
  static FieldElement mod_add(const FieldElement& a, const FieldElement& b,
                              const FieldElement& p) {
    uint64_t sum[kLimbs];
    uint64_t carry = 0;
    for (int i = 0; i < kLimbs; ++i) carry = detail::adc(a.limbs[i], b.limbs[i], carry, sum[i]);
    uint64_t diff[kLimbs];
    uint64_t borrow = 0;
    for (int i = 0; i < kLimbs; ++i) borrow = detail::sbb(sum[i], p.limbs[i], borrow, diff[i]);
    // subtract p iff the raw sum overflowed 2^256 or reached p
    uint64_t mask = ~static_cast<uint64_t>(0) * (carry | (1 - borrow));
    FieldElement r;
    detail::masked_select(diff, sum, mask, r.limbs.data());
    return r;
  }
};

// CIOS Montgomery multiplication: returns a*b*R^{-1} mod p. The loop
// structure, iteration counts and the final conditional subtraction are
// independent of the operand values.
inline FieldElement mont_mul(const FieldElement& a, const FieldElement& b,
                             const MontgomeryContext& ctx) {
  using detail::u128;
  auto& counts = word_op_counts();
  const auto& p = ctx.p.limbs;
  uint64_t t[kLimbs + 2] = {0};

  for (int i = 0; i < kLimbs; ++i) {
    uint64_t carry = 0;
    for (int j = 0; j < kLimbs; ++j) {
      u128 acc = static_cast<u128>(a.limbs[i]) * b.limbs[j] + t[j] + carry;
      t[j] = static_cast<uint64_t>(acc);
      carry = static_cast<uint64_t>(acc >> 64);
      counts.mul64++;
      counts.add64 += 2;
    }
    u128 acc = static_cast<u128>(t[kLimbs]) + carry;
    t[kLimbs] = static_cast<uint64_t>(acc);
    t[kLimbs + 1] = static_cast<uint64_t>(acc >> 64);
    counts.add64++;

    const uint64_t m = t[0] * ctx.n0;
    counts.mul64++;
    acc = static_cast<u128>(m) * p[0] + t[0];
    carry = static_cast<uint64_t>(acc >> 64);
    counts.mul64++;
    counts.add64++;
    for (int j = 1; j < kLimbs; ++j) {
      acc = static_cast<u128>(m) * p[j] + t[j] + carry;
      t[j - 1] = static_cast<uint64_t>(acc);
      carry = static_cast<uint64_t>(acc >> 64);
      counts.mul64++;
      counts.add64 += 2;
    }
    acc = static_cast<u128>(t[kLimbs]) + carry;
    t[kLimbs - 1] = static_cast<uint64_t>(acc);
    t[kLimbs] = t[kLimbs + 1] + static_cast<uint64_t>(acc >> 64);
    t[kLimbs + 1] = 0;
    counts.add64 += 2;
  }

  // t fits in kLimbs+1 words and t < 2p; one conditional subtraction.
  uint64_t diff[kLimbs];
  uint64_t borrow = 0;
  for (int i = 0; i < kLimbs; ++i) borrow = detail::sbb(t[i], p[i], borrow, diff[i]);
  uint64_t mask = ~static_cast<uint64_t>(0) * ((t[kLimbs] != 0) | (1 - borrow));
  FieldElement r;
  detail::masked_select(diff, t, mask, r.limbs.data());
  return r;
}

namespace detail {

inline FieldOpEvent make_field_event(EventKind kind, const FieldElement& a,
                                     const FieldElement* b, const FieldElement& result) {
  FieldOpEvent ev;
  ev.kind = kind;
  int n = 0;
  for (int i = 0; i < kLimbs; ++i) ev.words[n++] = a.limbs[i];
  if (b != nullptr) {
    for (int i = 0; i < kLimbs; ++i) ev.words[n++] = b->limbs[i];
  }
  for (int i = 0; i < kLimbs; ++i) ev.words[n++] = result.limbs[i];
  ev.word_count = static_cast<uint8_t>(n);
  return ev;
}

}  // namespace detail

// a*b mod p as the two-step Montgomery product; emits X then X'.
inline FieldElement field_mul(const FieldElement& a, const FieldElement& b,
                              const MontgomeryContext& ctx, EventSink& sink) {
  const FieldElement t = mont_mul(a, b, ctx);
  sink.push(detail::make_field_event(EventKind::kMontMul, a, &b, t));
  const FieldElement r = mont_mul(t, ctx.r2_mod_p, ctx);
  sink.push(detail::make_field_event(EventKind::kMontMulR2, t, &ctx.r2_mod_p, r));
  return r;
}

inline FieldElement field_add(const FieldElement& a, const FieldElement& b,
                              const MontgomeryContext& ctx, EventSink& sink) {
  const FieldElement r = MontgomeryContext::mod_add(a, b, ctx.p);
  sink.push(detail::make_field_event(EventKind::kAdd, a, &b, r));
  return r;
}

// (p - a) mod p with field_neg(0) = 0, branchless.
inline FieldElement field_neg(const FieldElement& a, const MontgomeryContext& ctx,
                              EventSink& sink) {
  uint64_t diff[kLimbs];
  uint64_t borrow = 0;
  for (int i = 0; i < kLimbs; ++i) borrow = detail::sbb(ctx.p.limbs[i], a.limbs[i], borrow, diff[i]);
  const uint64_t any = a.limbs[0] | a.limbs[1] | a.limbs[2] | a.limbs[3];
  const uint64_t mask = ~static_cast<uint64_t>(0) * (any != 0);
  FieldElement zero{};
  FieldElement r;
  detail::masked_select(diff, zero.limbs.data(), mask, r.limbs.data());
  sink.push(detail::make_field_event(EventKind::kNeg, a, nullptr, r));
  return r;
}

// true iff a < b as 256-bit integers.
inline bool field_less(const FieldElement& a, const FieldElement& b) {
  for (int i = kLimbs - 1; i >= 0; --i) {
    if (a.limbs[i] != b.limbs[i]) return a.limbs[i] < b.limbs[i];
  }
  return false;
}

// --- hex I/O (big-endian digits) ---

inline std::string to_hex(const FieldElement& a) {
  static const char* digits = "0123456789abcdef";
  std::string out(64, '0');
  for (int i = 0; i < kLimbs; ++i) {
    const uint64_t w = a.limbs[kLimbs - 1 - i];
    for (int j = 0; j < 16; ++j) {
      out[static_cast<std::size_t>(i) * 16 + j] = digits[(w >> (60 - 4 * j)) & 0xf];
    }
  }
  return out;
}

inline FieldElement from_hex(const std::string& s) {
  std::size_t pos = 0;
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) pos = 2;
  const std::size_t n = s.size() - pos;
  if (n == 0 || n > 64) throw std::invalid_argument("hex field element must have 1..64 digits");
  FieldElement r;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = s[s.size() - 1 - i];
    uint64_t v;
    if (c >= '0' && c <= '9') v = static_cast<uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v = static_cast<uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') v = static_cast<uint64_t>(c - 'A' + 10);
    else throw std::invalid_argument(std::string("invalid hex digit: ") + c);
    r.limbs[i / 16] |= v << (4 * (i % 16));
  }
  return r;
}

}  // namespace atomsca
