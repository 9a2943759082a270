#include <gtest/gtest.h>

#include "dynflow/piecewise.hpp"

using namespace dynflow;

TEST(StepFunction, BuildsNormalizedPieces) {
  auto f = StepFunction::from_pieces({{0, 1, 2}, {1, 2, 2}, {3, 4, 1}});
  EXPECT_EQ(f.breakpoints(), (std::vector<Rational>{0, 2, 3, 4}));
  EXPECT_EQ(f.values(), (std::vector<Rational>{2, 0, 1}));
  EXPECT_EQ(f.at(Rational(1)), Rational(2));
  EXPECT_EQ(f.at(Rational(2)), Rational(0));
  EXPECT_EQ(f.at(Rational(4)), Rational(0));
  EXPECT_EQ(f.total(), Rational(5));
}

TEST(StepFunction, RejectsOverlap) {
  EXPECT_THROW(StepFunction::from_pieces({{0, 2, 1}, {1, 3, 1}}), std::invalid_argument);
}

TEST(StepFunction, SumsAndTruncates) {
  auto a = StepFunction::from_pieces({{0, 2, 1}});
  auto b = StepFunction::from_pieces({{1, 3, 2}});
  auto s = a + b;
  EXPECT_EQ(s.at(Rational(1, 2)), Rational(1));
  EXPECT_EQ(s.at(Rational(3, 2)), Rational(3));
  EXPECT_EQ(s.at(Rational(5, 2)), Rational(2));
  EXPECT_EQ(s.truncated(Rational(3, 2)).total(), Rational(5, 2));
  EXPECT_TRUE((a + StepFunction()) == a);
}

TEST(PiecewiseLinear, CumulativeIntegratesExactly) {
  auto F = StepFunction::from_pieces({{Rational(1, 2), 1, 2}, {1, 2, 1}}).cumulative();
  EXPECT_EQ(F.at(Rational(0)), Rational(0));
  EXPECT_EQ(F.at(Rational(3, 4)), Rational(1, 2));
  EXPECT_EQ(F.at(Rational(3, 2)), Rational(3, 2));
  EXPECT_EQ(F.final_value(), Rational(2));
}

TEST(PiecewiseLinear, FirstReachInvertsLinearPieces) {
  auto F = StepFunction::from_pieces({{1, 2, 4}}).cumulative();
  EXPECT_EQ(*F.first_reach(Rational(1)), Rational(5, 4));
  EXPECT_EQ(*F.first_reach(Rational(0)), Rational(0));
  EXPECT_EQ(*F.first_reach(Rational(1), Rational(3, 2)), Rational(3, 2));
  EXPECT_FALSE(F.first_reach(Rational(5)).has_value());
  PiecewiseLinear ray({{0, 1}}, Rational(2));
  EXPECT_EQ(*ray.first_reach(Rational(4)), Rational(3, 2));
}

TEST(PiecewiseLinear, DropsCollinearPoints) {
  PiecewiseLinear f({{0, 0}, {1, 1}, {2, 2}, {3, 2}});
  // (1,1) is interior to a straight piece and (3,2) is implied by the flat tail.
  EXPECT_EQ(f.points().size(), 2u);
  EXPECT_EQ(f.at(Rational(5, 2)), Rational(2));
}

TEST(PiecewiseLinear, SupDistanceAtBreakpoints) {
  PiecewiseLinear a({{0, 0}, {1, 1}});
  PiecewiseLinear b({{0, 0}, {Rational(1, 2), 1}});
  EXPECT_EQ(sup_abs_difference(a, b), Rational(1, 2));
  EXPECT_TRUE(same_function(a, a + PiecewiseLinear()));
  EXPECT_THROW(sup_abs_difference(a, PiecewiseLinear({{0, 0}}, Rational(1))), std::domain_error);
}
