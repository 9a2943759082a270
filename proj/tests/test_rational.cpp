#include <gtest/gtest.h>

#include "dynflow/rational.hpp"

using dynflow::Rational;

TEST(Rational, ParsesFractionsIntegersAndDecimals) {
  EXPECT_EQ(Rational::parse("3/4"), Rational(3, 4));
  EXPECT_EQ(Rational::parse("-6/8"), Rational(-3, 4));
  EXPECT_EQ(Rational::parse("7"), Rational(7));
  EXPECT_EQ(Rational::parse("0.125"), Rational(1, 8));
  EXPECT_EQ(Rational::parse("1.5e-1"), Rational(3, 20));
  EXPECT_EQ(Rational::parse(" 2.50 "), Rational(5, 2));
}

TEST(Rational, RejectsMalformedText) {
  for (const char* bad : {"", "1/0", "abc", "1//2", "1.2.3", "--1", "e5"})
    EXPECT_THROW(Rational::parse(bad), std::invalid_argument) << bad;
}

TEST(Rational, ArithmeticIsExact) {
  const Rational third(1, 3);
  EXPECT_EQ(third + third + third, Rational(1));
  EXPECT_EQ(Rational(1, 10) * 3, Rational(3, 10));
  EXPECT_EQ(Rational(1) / Rational(3) - third, Rational(0));
  EXPECT_THROW(third / Rational(0), std::domain_error);
}

TEST(Rational, FloorCeilAndFormatting) {
  EXPECT_EQ(Rational(7, 2).floor(), 3);
  EXPECT_EQ(Rational(7, 2).ceil(), 4);
  EXPECT_EQ(Rational(-7, 2).floor(), -4);
  EXPECT_EQ(Rational(-7, 2).ceil(), -3);
  EXPECT_EQ(Rational(6, 4).to_string(), "3/2");
  EXPECT_EQ(Rational(4, 2).to_string(), "2");
  EXPECT_TRUE(Rational(4, 2).is_integer());
  EXPECT_EQ(Rational(-6, 2).to_int64(), -3);
  EXPECT_THROW(Rational(-3, 2).to_int64(), std::domain_error);
}

TEST(Rational, OrderingIsTotal) {
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_GT(Rational(-1, 3), Rational(-1, 2));
  EXPECT_EQ(std::max(Rational(2, 3), Rational(3, 5)), Rational(2, 3));
  EXPECT_EQ(abs(Rational(-5, 7)), Rational(5, 7));
}
