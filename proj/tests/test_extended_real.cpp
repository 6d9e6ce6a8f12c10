#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "infcone/extended_real.hpp"

using infcone::ExtendedReal;
using infcone::UndefinedOperation;
using infcone::ext_add;

namespace {

const ExtendedReal kPos = ExtendedReal::pos_inf();
const ExtendedReal kNeg = ExtendedReal::neg_inf();

TEST(ExtendedReal, PositiveInfinityAbsorbsNegativeInfinity) {
  EXPECT_TRUE(ext_add(kPos, kNeg).is_pos_inf());
  EXPECT_TRUE(ext_add(kNeg, kPos).is_pos_inf());
}

TEST(ExtendedReal, FiniteAddition) {
  EXPECT_EQ(ext_add(2.0, 2.0), ExtendedReal(4.0));
  EXPECT_TRUE(ext_add(3.0, kNeg).is_neg_inf());
  EXPECT_TRUE(ext_add(kNeg, kNeg).is_neg_inf());
  EXPECT_TRUE(ext_add(-7.0, kPos).is_pos_inf());
}

TEST(ExtendedReal, ScalarMultiplication) {
  EXPECT_TRUE((ExtendedReal(2.0) * kPos).is_pos_inf());
  EXPECT_TRUE((ExtendedReal(-2.0) * kPos).is_neg_inf());
  EXPECT_TRUE((ExtendedReal(0.5) * kNeg).is_neg_inf());
  EXPECT_TRUE((ExtendedReal(-0.5) * kNeg).is_pos_inf());
  EXPECT_THROW((void)(ExtendedReal(0.0) * kPos), UndefinedOperation);
  EXPECT_THROW((void)(kNeg * ExtendedReal(0.0)), UndefinedOperation);
}

TEST(ExtendedReal, EmptyInfAndSup) {
  std::vector<ExtendedReal> none;
  EXPECT_TRUE(infcone::ext_inf(none).is_pos_inf());
  EXPECT_TRUE(infcone::ext_sup(none).is_neg_inf());
  std::vector<ExtendedReal> some{1.0, kNeg, 3.0};
  EXPECT_TRUE(infcone::ext_inf(some).is_neg_inf());
  EXPECT_EQ(infcone::ext_sup(some), ExtendedReal(3.0));
}

TEST(ExtendedReal, TotalOrder) {
  EXPECT_LT(kNeg, ExtendedReal(-1e300));
  EXPECT_LT(ExtendedReal(1e300), kPos);
  EXPECT_LT(kNeg, kPos);
  EXPECT_EQ(kPos, kPos);
}

TEST(ExtendedReal, NanRejected) {
  EXPECT_THROW(ExtendedReal(std::nan("")), UndefinedOperation);
}

TEST(ExtendedReal, StringForm) {
  EXPECT_EQ(kPos.to_string(), "+inf");
  EXPECT_EQ(kNeg.to_string(), "-inf");
  EXPECT_EQ(ExtendedReal(1.5).to_string(), "1.5");
}

// Exhaustive table over {-inf, negative, zero, positive, +inf}.
TEST(ExtendedReal, AdditionTableIsCommutativeAndMatchesConvention) {
  const std::vector<ExtendedReal> vals{kNeg, -2.5, 0.0, 4.0, kPos};
  for (auto a : vals) {
    for (auto b : vals) {
      const auto s = ext_add(a, b);
      EXPECT_EQ(s, ext_add(b, a));
      if (a.is_pos_inf() || b.is_pos_inf()) {
        EXPECT_TRUE(s.is_pos_inf());
      } else if (a.is_neg_inf() || b.is_neg_inf()) {
        EXPECT_TRUE(s.is_neg_inf());
      } else {
        EXPECT_DOUBLE_EQ(s.value(), a.value() + b.value());
      }
    }
  }
}

}  // namespace
