#include <gtest/gtest.h>

#include "atomsca/curve.hpp"
#include "atomsca/field.hpp"
#include "atomsca/rng.hpp"
#include "oracle_bigint.hpp"

using namespace atomsca;

namespace {

FieldElement random_fe(Xoshiro256& rng, const MontgomeryContext& ctx) {
  FieldElement fe;
  do {
    for (auto& limb : fe.limbs) limb = rng();
  } while (!field_less(fe, ctx.p));
  return fe;
}

const MontgomeryContext& ctx() { return p256().field; }

}  // namespace

TEST(MontgomeryContext, InvariantsHold) {
  const auto& c = ctx();
  // p * n0 + 1 == 0 mod 2^64
  EXPECT_EQ(c.p.limbs[0] * c.n0 + 1, 0u);
  EXPECT_EQ(oracle::from_fe(c.r_mod_p), oracle::mod(oracle::kR));
  EXPECT_EQ(oracle::from_fe(c.r2_mod_p), oracle::mod(oracle::kR * oracle::kR));
}

TEST(MontMul, ZeroAnnihilates) {
  Xoshiro256 rng(11);
  const FieldElement b = random_fe(rng, ctx());
  EXPECT_TRUE(mont_mul(FieldElement{}, b, ctx()).is_zero());
}

TEST(MontMul, RTimesRGivesR) {
  const FieldElement r = ctx().r_mod_p;
  EXPECT_EQ(mont_mul(r, r, ctx()), r);
}

TEST(MontMul, MatchesBigIntOracle) {
  Xoshiro256 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const FieldElement a = random_fe(rng, ctx());
    const FieldElement b = random_fe(rng, ctx());
    const FieldElement got = mont_mul(a, b, ctx());
    EXPECT_EQ(oracle::from_fe(got),
              oracle::mont_product(oracle::from_fe(a), oracle::from_fe(b)))
        << "mismatch at iteration " << i;
  }
}

TEST(MontMul, WordOpCountsAreInputIndependent) {
  Xoshiro256 rng(13);
  const MontgomeryContext& c256 = ctx();  // built before counting starts
  auto count_one = [&](const FieldElement& a, const FieldElement& b) {
    reset_word_op_counts();
    mont_mul(a, b, c256);
    return word_op_counts();
  };
  const WordOpCounts reference = count_one(FieldElement{}, FieldElement{});
  EXPECT_GT(reference.mul64, 0u);
  for (int i = 0; i < 100; ++i) {
    const WordOpCounts c = count_one(random_fe(rng, ctx()), random_fe(rng, ctx()));
    EXPECT_EQ(c, reference) << "operation counts varied at iteration " << i;
  }
}

TEST(FieldMul, IdentityAndEventPair) {
  Xoshiro256 rng(14);
  const FieldElement a = random_fe(rng, ctx());
  RecordingSink sink;
  EXPECT_EQ(field_mul(a, fe_one(), ctx(), sink), a);
  ASSERT_EQ(sink.events().size(), 2u);
  EXPECT_EQ(sink.events()[0].kind, EventKind::kMontMul);
  EXPECT_EQ(sink.events()[1].kind, EventKind::kMontMulR2);
}

TEST(FieldMul, MinusOneSquared) {
  FieldElement minus_one;
  uint64_t borrow = 0;
  FieldElement one = fe_one();
  for (int i = 0; i < kLimbs; ++i) {
    borrow = detail::sbb(ctx().p.limbs[i], one.limbs[i], borrow, minus_one.limbs[i]);
  }
  EXPECT_EQ(field_mul(minus_one, minus_one, ctx(), null_sink()), fe_one());
}

TEST(FieldMul, MatchesBigIntOracle) {
  Xoshiro256 rng(15);
  for (int i = 0; i < 1000; ++i) {
    const FieldElement a = random_fe(rng, ctx());
    const FieldElement b = random_fe(rng, ctx());
    EXPECT_EQ(oracle::from_fe(field_mul(a, b, ctx(), null_sink())),
              oracle::mod(oracle::from_fe(a) * oracle::from_fe(b)));
  }
}

TEST(FieldAddNeg, BasicsAndEvents) {
  RecordingSink sink;
  EXPECT_TRUE(field_add(FieldElement{}, FieldElement{}, ctx(), sink).is_zero());
  ASSERT_EQ(sink.events().size(), 1u);
  EXPECT_EQ(sink.events()[0].kind, EventKind::kAdd);

  sink.clear();
  const FieldElement neg1 = field_neg(fe_one(), ctx(), sink);
  ASSERT_EQ(sink.events().size(), 1u);
  EXPECT_EQ(sink.events()[0].kind, EventKind::kNeg);
  EXPECT_EQ(oracle::from_fe(neg1), oracle::kP - 1);

  EXPECT_TRUE(field_neg(FieldElement{}, ctx(), null_sink()).is_zero());
}

TEST(FieldAddNeg, OracleAgreementAndInverse) {
  Xoshiro256 rng(16);
  for (int i = 0; i < 1000; ++i) {
    const FieldElement a = random_fe(rng, ctx());
    const FieldElement b = random_fe(rng, ctx());
    EXPECT_EQ(oracle::from_fe(field_add(a, b, ctx(), null_sink())),
              oracle::mod(oracle::from_fe(a) + oracle::from_fe(b)));
    EXPECT_EQ(oracle::from_fe(field_neg(a, ctx(), null_sink())),
              oracle::mod(-oracle::from_fe(a)));
    EXPECT_TRUE(field_add(a, field_neg(a, ctx(), null_sink()), ctx(), null_sink()).is_zero());
  }
}

TEST(FieldAxioms, HoldOnRandomSamples) {
  Xoshiro256 rng(17);
  auto& s = null_sink();
  for (int i = 0; i < 200; ++i) {
    const FieldElement a = random_fe(rng, ctx());
    const FieldElement b = random_fe(rng, ctx());
    const FieldElement c = random_fe(rng, ctx());
    EXPECT_EQ(field_mul(a, b, ctx(), s), field_mul(b, a, ctx(), s));
    EXPECT_EQ(field_add(a, b, ctx(), s), field_add(b, a, ctx(), s));
    EXPECT_EQ(field_mul(field_mul(a, b, ctx(), s), c, ctx(), s),
              field_mul(a, field_mul(b, c, ctx(), s), ctx(), s));
    EXPECT_EQ(field_add(field_add(a, b, ctx(), s), c, ctx(), s),
              field_add(a, field_add(b, c, ctx(), s), ctx(), s));
    EXPECT_EQ(field_mul(a, field_add(b, c, ctx(), s), ctx(), s),
              field_add(field_mul(a, b, ctx(), s), field_mul(a, c, ctx(), s), ctx(), s));
  }
}

TEST(FieldAxioms, ResultsStayCanonical) {
  Xoshiro256 rng(18);
  for (int i = 0; i < 200; ++i) {
    const FieldElement a = random_fe(rng, ctx());
    const FieldElement b = random_fe(rng, ctx());
    EXPECT_TRUE(field_less(field_mul(a, b, ctx(), null_sink()), ctx().p));
    EXPECT_TRUE(field_less(field_add(a, b, ctx(), null_sink()), ctx().p));
    EXPECT_TRUE(field_less(field_neg(a, ctx(), null_sink()), ctx().p));
  }
}

TEST(HexIo, RoundTripAndErrors) {
  Xoshiro256 rng(19);
  for (int i = 0; i < 50; ++i) {
    const FieldElement a = random_fe(rng, ctx());
    EXPECT_EQ(from_hex(to_hex(a)), a);
  }
  EXPECT_EQ(to_hex(fe_one()),
            "0000000000000000000000000000000000000000000000000000000000000001");
  EXPECT_EQ(from_hex("0x2a").limbs[0], 42u);
  EXPECT_THROW(from_hex(""), std::invalid_argument);
  EXPECT_THROW(from_hex("zz"), std::invalid_argument);
  EXPECT_THROW(from_hex(std::string(65, 'f')), std::invalid_argument);
}
