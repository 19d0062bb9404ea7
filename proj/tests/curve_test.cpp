#include <gtest/gtest.h>

#include <string>

#include "atomsca/curve.hpp"
#include "atomsca/rng.hpp"
#include "oracle_bigint.hpp"

using namespace atomsca;

namespace {

std::string to_bits(uint64_t v) {
  std::string s;
  for (int i = 63; i >= 0; --i) {
    if (!s.empty() || ((v >> i) & 1)) s.push_back(static_cast<char>('0' + ((v >> i) & 1)));
  }
  return s.empty() ? "0" : s;
}

std::string random_scalar_bits(Xoshiro256& rng, std::size_t length) {
  std::string s(length, '0');
  s[0] = '1';
  for (std::size_t i = 1; i < length; ++i) s[i] = static_cast<char>('0' + (rng() & 1));
  return s;
}

AffinePoint affine_of(const oracle::Point& p) {
  return AffinePoint{oracle::to_fe(p.x), oracle::to_fe(p.y)};
}

}  // namespace

TEST(Scalar, ParsingRules) {
  EXPECT_EQ(Scalar::from_bit_string("1").length(), 1u);
  EXPECT_EQ(Scalar::from_bit_string("10011011010111111011").processed_ones(), 13u);
  EXPECT_THROW(Scalar::from_bit_string(""), std::invalid_argument);
  EXPECT_THROW(Scalar::from_bit_string("0101"), std::invalid_argument);
  EXPECT_THROW(Scalar::from_bit_string("10x1"), std::invalid_argument);
  EXPECT_THROW(Scalar::from_bit_string(std::string(257, '1')), std::invalid_argument);
}

TEST(OnCurve, KnownPoints) {
  const CurveContext& ctx = p256();
  EXPECT_TRUE(on_curve(ctx.g, ctx));
  EXPECT_FALSE(on_curve(AffinePoint{FieldElement{}, FieldElement{}}, ctx));
  AffinePoint inf;
  inf.infinity = true;
  EXPECT_TRUE(on_curve(inf, ctx));
}

TEST(OracleDouble, MatchesAffineReference) {
  const CurveContext& ctx = p256();
  const JacobianPoint g{ctx.g.x, ctx.g.y, fe_one()};
  const AffinePoint got = to_affine(oracle_double(g, ctx), ctx);
  const oracle::Point expect = oracle::point_double(oracle::generator());
  EXPECT_EQ(oracle::from_fe(got.x), expect.x);
  EXPECT_EQ(oracle::from_fe(got.y), expect.y);
}

TEST(OracleAdd, ThreeGAndDegenerateCase) {
  const CurveContext& ctx = p256();
  const JacobianPoint g{ctx.g.x, ctx.g.y, fe_one()};
  const JacobianPoint two_g = oracle_double(g, ctx);
  const AffinePoint got = to_affine(oracle_add(two_g, ctx.g, ctx), ctx);
  const oracle::Point expect =
      oracle::point_add(oracle::point_double(oracle::generator()), oracle::generator());
  EXPECT_EQ(oracle::from_fe(got.x), expect.x);
  EXPECT_EQ(oracle::from_fe(got.y), expect.y);

  // J = -A: same x, negated y
  AffinePoint minus_g = ctx.g;
  minus_g.y = field_neg(minus_g.y, ctx.field, null_sink());
  EXPECT_THROW(oracle_add(g, minus_g, ctx), std::domain_error);
  EXPECT_THROW(oracle_add(g, ctx.g, ctx), std::domain_error);
}

TEST(ToAffine, IdentityAndRescaling) {
  const CurveContext& ctx = p256();
  const JacobianPoint g{ctx.g.x, ctx.g.y, fe_one()};
  const AffinePoint back = to_affine(g, ctx);
  EXPECT_EQ(back.x, ctx.g.x);
  EXPECT_EQ(back.y, ctx.g.y);

  // (lambda^2 X, lambda^3 Y, lambda Z) is the same point
  Xoshiro256 rng(31);
  auto& s = null_sink();
  FieldElement lambda;
  do {
    for (auto& limb : lambda.limbs) limb = rng();
  } while (!field_less(lambda, ctx.field.p) || lambda.is_zero());
  const FieldElement l2 = field_mul(lambda, lambda, ctx.field, s);
  const JacobianPoint scaled{field_mul(g.X, l2, ctx.field, s),
                             field_mul(g.Y, field_mul(l2, lambda, ctx.field, s), ctx.field, s),
                             field_mul(g.Z, lambda, ctx.field, s)};
  const AffinePoint rescaled = to_affine(scaled, ctx);
  EXPECT_EQ(rescaled.x, ctx.g.x);
  EXPECT_EQ(rescaled.y, ctx.g.y);

  JacobianPoint infinity{fe_one(), fe_one(), FieldElement{}};
  EXPECT_THROW(to_affine(infinity, ctx), std::domain_error);
}

TEST(ScalarMul, KEqualsOneReturnsInput) {
  const CurveContext& ctx = p256();
  RecordingSink sink;
  const JacobianPoint r = scalar_mul(Scalar::from_bit_string("1"), ctx.g, ctx, sink);
  const AffinePoint a = to_affine(r, ctx);
  EXPECT_EQ(a.x, ctx.g.x);
  EXPECT_EQ(a.y, ctx.g.y);
  for (const FieldOpEvent& ev : sink.events()) {
    EXPECT_FALSE(ev.kind == EventKind::kPatternStart);
  }
}

TEST(ScalarMul, KEqualsTwoMatchesOracle) {
  const CurveContext& ctx = p256();
  const AffinePoint got =
      to_affine(scalar_mul(Scalar::from_bit_string("10"), ctx.g, ctx, null_sink()), ctx);
  const oracle::Point expect = oracle::point_double(oracle::generator());
  EXPECT_EQ(oracle::from_fe(got.x), expect.x);
  EXPECT_EQ(oracle::from_fe(got.y), expect.y);
}

TEST(ScalarMul, SmallMultiplesOfG) {
  const CurveContext& ctx = p256();
  oracle::Point expect = oracle::generator();
  for (uint64_t k = 1; k <= 20; ++k) {
    const AffinePoint got =
        to_affine(scalar_mul(Scalar::from_bit_string(to_bits(k)), ctx.g, ctx, null_sink()), ctx);
    EXPECT_EQ(oracle::from_fe(got.x), expect.x) << "k = " << k;
    EXPECT_EQ(oracle::from_fe(got.y), expect.y) << "k = " << k;
    expect = oracle::point_add(expect, oracle::generator());
  }
}

TEST(ScalarMul, RejectsBadInputs) {
  const CurveContext& ctx = p256();
  AffinePoint inf;
  inf.infinity = true;
  EXPECT_THROW(scalar_mul(Scalar::from_bit_string("10"), inf, ctx, null_sink()),
               std::invalid_argument);
  AffinePoint off{fe_one(), fe_one()};
  EXPECT_THROW(scalar_mul(Scalar::from_bit_string("10"), off, ctx, null_sink()),
               std::invalid_argument);
  Scalar zero_led;
  zero_led.bits = {0, 1};
  EXPECT_THROW(scalar_mul(zero_led, ctx.g, ctx, null_sink()), std::invalid_argument);
}

TEST(ScalarMul, AgreesWithIndependentDoubleAndAdd) {
  const CurveContext& ctx = p256();
  Xoshiro256 rng(32);
  for (int i = 0; i < 60; ++i) {
    const std::size_t length = 2 + rng() % 255;
    const std::string bits = random_scalar_bits(rng, length);
    const AffinePoint got =
        to_affine(scalar_mul(Scalar::from_bit_string(bits), ctx.g, ctx, null_sink()), ctx);
    const oracle::Point expect = oracle::scalar_mul(bits, oracle::generator());
    EXPECT_EQ(oracle::from_fe(got.x), expect.x) << "bits = " << bits;
    EXPECT_EQ(oracle::from_fe(got.y), expect.y) << "bits = " << bits;
  }
}

TEST(ScalarMul, EventStreamAccounting) {
  const CurveContext& ctx = p256();
  Xoshiro256 rng(33);
  for (int i = 0; i < 20; ++i) {
    const std::string bits = random_scalar_bits(rng, 2 + rng() % 40);
    const Scalar k = Scalar::from_bit_string(bits);
    RecordingSink sink;
    scalar_mul(k, ctx.g, ctx, sink);
    std::size_t pd = 0, pa = 0, pd_ops = 0, pa_ops = 0;
    for (const FieldOpEvent& ev : sink.events()) {
      if (ev.kind == EventKind::kPatternStart) {
        (ev.pattern == PatternKind::kPD ? pd : pa)++;
      } else if (is_field_op(ev.kind)) {
        (ev.pattern == PatternKind::kPD ? pd_ops : pa_ops)++;
      }
    }
    EXPECT_EQ(pd, k.length() - 1);
    EXPECT_EQ(pa, k.processed_ones());
    EXPECT_EQ(pd_ops, pd * 36);
    EXPECT_EQ(pa_ops, pa * 54);
  }
}

TEST(ScalarMul, PaperStyleScalarCounts) {
  // 22-bit scalar with 15 ones among the 21 processed bits
  const Scalar k = Scalar::from_bit_string("1110011011010111111011");
  EXPECT_EQ(k.length(), 22u);
  EXPECT_EQ(k.length() - 1, 21u);
  EXPECT_EQ(k.processed_ones(), 15u);
  RecordingSink sink;
  scalar_mul(k, p256().g, p256(), sink);
  std::size_t pd = 0, pa = 0;
  for (const FieldOpEvent& ev : sink.events()) {
    if (ev.kind == EventKind::kPatternStart) (ev.pattern == PatternKind::kPD ? pd : pa)++;
  }
  EXPECT_EQ(pd, 21u);
  EXPECT_EQ(pa, 15u);
}

TEST(GroupLaw, AdditionOfMultiples) {
  const CurveContext& ctx = p256();
  Xoshiro256 rng(34);
  for (int i = 0; i < 10; ++i) {
    const uint64_t k1 = 2 + rng() % 5000;
    uint64_t k2 = 2 + rng() % 5000;
    if (k2 == k1) ++k2;
    const JacobianPoint j1 =
        scalar_mul(Scalar::from_bit_string(to_bits(k1)), ctx.g, ctx, null_sink());
    const AffinePoint a2 = to_affine(
        scalar_mul(Scalar::from_bit_string(to_bits(k2)), ctx.g, ctx, null_sink()), ctx);
    const AffinePoint sum = to_affine(oracle_add(j1, a2, ctx), ctx);
    const AffinePoint direct = to_affine(
        scalar_mul(Scalar::from_bit_string(to_bits(k1 + k2)), ctx.g, ctx, null_sink()), ctx);
    EXPECT_EQ(sum, direct);
  }
}
