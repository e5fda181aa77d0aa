#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <limits>

#include "timetile/int_math.hpp"

using namespace timetile;

namespace {

// Reference via long double floor/ceil; exact for the small magnitudes used.
std::int64_t ref_floor(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(std::floor(static_cast<long double>(a) / static_cast<long double>(b)));
}
std::int64_t ref_ceil(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(std::ceil(static_cast<long double>(a) / static_cast<long double>(b)));
}

}  // namespace

TEST(IntMath, FloordCeildMatchRealDivision) {
  for (std::int64_t a = -40; a <= 40; ++a) {
    for (std::int64_t b = 1; b <= 9; ++b) {
      EXPECT_EQ(floord(a, b), ref_floor(a, b)) << a << "/" << b;
      EXPECT_EQ(ceild(a, b), ref_ceil(a, b)) << a << "/" << b;
      const auto m = floor_mod(a, b);
      EXPECT_GE(m, 0);
      EXPECT_LT(m, b);
      EXPECT_EQ(floord(a, b) * b + m, a);
    }
  }
}

TEST(IntMath, KnownValues) {
  EXPECT_EQ(floord(99, 8), 12);
  EXPECT_EQ(floord(-1, 8), -1);
  EXPECT_EQ(ceild(-1, 8), 0);
  EXPECT_EQ(ceild(17, 8), 3);
  EXPECT_EQ(floor_mod(-3, 8), 5);
}

TEST(IntMath, OverflowIsReported) {
  const auto big = std::numeric_limits<std::int64_t>::max();
  EXPECT_THROW(checked_add(big, 1), OverflowError);
  EXPECT_THROW(checked_sub(std::numeric_limits<std::int64_t>::min(), 1), OverflowError);
  EXPECT_THROW(checked_mul(big / 2 + 1, 2), OverflowError);
  EXPECT_THROW(checked_neg(std::numeric_limits<std::int64_t>::min()), OverflowError);
  EXPECT_EQ(checked_mul(-7, 6), -42);
}

TEST(IntMath, Gcd) {
  EXPECT_EQ(abs_gcd(-12, 18), 6);
  EXPECT_EQ(abs_gcd(0, -5), 5);
  EXPECT_EQ(abs_gcd(0, 0), 0);
}
