#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "splitroa/poly.hpp"

using namespace splitroa;

namespace {

Polynomial x(VarId v) { return Polynomial::var(v); }

}  // namespace

TEST(Monomial, MergesFactorsAndDropsZeroExponents) {
  const Monomial m({{2, 1}, {1, 2}, {2, 3}, {3, 0}});
  EXPECT_EQ(m.degree(), 6u);
  EXPECT_EQ(m.exponent(1), 2u);
  EXPECT_EQ(m.exponent(2), 4u);
  EXPECT_EQ(m.exponent(3), 0u);
  EXPECT_EQ(m.factors().size(), 2u);
}

TEST(Monomial, GradedOrderPutsLowDegreeFirst) {
  const auto basis = monomial_basis(std::vector<VarId>{1, 2}, 2);
  ASSERT_EQ(basis.size(), 6u);
  EXPECT_TRUE(basis[0].is_constant());
  EXPECT_EQ(basis[1], Monomial::var(1));
  EXPECT_EQ(basis[2], Monomial::var(2));
  for (std::size_t i = 1; i < basis.size(); ++i) EXPECT_LE(basis[i - 1].degree(), basis[i].degree());
}

TEST(Monomial, BasisSizeIsBinomial) {
  for (std::size_t n = 1; n <= 5; ++n) {
    for (std::uint32_t d = 0; d <= 6; ++d) EXPECT_EQ(monomial_basis(n, d).size(), binomial(n + d, n));
  }
  EXPECT_EQ(binomial(10, 3), 120u);
}

TEST(Polynomial, ArithmeticMatchesPointwiseEvaluation) {
  const Polynomial p = x(1) * x(1) - 3.0 * x(2) + Polynomial(0.5);
  const Polynomial q = x(2) * x(1) + Polynomial(2.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int s = 0; s < 20; ++s) {
    const std::vector<double> z{0.0, U(rng), U(rng)};
    const double a = p.evaluate(z), b = q.evaluate(z);
    EXPECT_NEAR((p + q).evaluate(z), a + b, 1e-12);
    EXPECT_NEAR((p - q).evaluate(z), a - b, 1e-12);
    EXPECT_NEAR((p * q).evaluate(z), a * b, 1e-12);
    EXPECT_NEAR(pow(p, 3).evaluate(z), a * a * a, 1e-9);
  }
}

TEST(Polynomial, CancellationLeavesNoZeroTerms) {
  const Polynomial p = x(1) + x(2);
  const Polynomial d = p - x(2);
  EXPECT_EQ(d.size(), 1u);
  EXPECT_TRUE((p - p).is_zero());
  EXPECT_EQ((p - p).degree(), 0u);
}

TEST(Polynomial, DegreeAndVariables) {
  const Polynomial p = x(1) * x(1) * x(3) + x(2);
  EXPECT_EQ(p.degree(), 3u);
  EXPECT_EQ(p.degree_in(1), 2u);
  EXPECT_EQ(p.variables(), (std::vector<VarId>{1, 2, 3}));
}

TEST(Polynomial, DerivativeOfPower) {
  // d/dx1 (x1^3 x2) = 3 x1^2 x2
  const Polynomial p = pow(x(1), 3) * x(2);
  EXPECT_EQ(differentiate(p, 1), 3.0 * x(1) * x(1) * x(2));
  EXPECT_EQ(differentiate(p, 2), pow(x(1), 3));
  EXPECT_TRUE(differentiate(p, 5).is_zero());
}

TEST(Polynomial, AffineSubstitutionComposes) {
  // p(x1) = x1^2 + x1, x1 = 1 + 2 y  =>  4y^2 + 6y + 2
  const Polynomial p = x(1) * x(1) + x(1);
  const Polynomial q = substitute_affine(p, {{1, AffineVar{VarId{7}, 1.0, 2.0}}});
  EXPECT_EQ(q, 4.0 * x(7) * x(7) + 6.0 * x(7) + Polynomial(2.0));
  const Polynomial c = substitute_affine(p, {{1, AffineVar{std::nullopt, 3.0, 1.0}}});
  EXPECT_EQ(c, Polynomial(12.0));
}

TEST(Polynomial, MapEvaluationRejectsMissingVariables) {
  const Polynomial p = x(1) * x(2);
  EXPECT_DOUBLE_EQ(p.evaluate(std::map<VarId, double>{{1, 2.0}, {2, 3.0}}), 6.0);
  EXPECT_THROW(p.evaluate(std::map<VarId, double>{{1, 2.0}}), std::invalid_argument);
}

TEST(Moments, BoxMomentsMatchClosedForm) {
  // Integral of x1^2 x2 over [0,1] x [-1,2] = (1/3) * (4 - 1)/2 = 0.5.
  const std::vector<Interval> box{{0.0, 1.0}, {-1.0, 2.0}};
  EXPECT_NEAR(box_moment(box, Monomial({{1, 2}, {2, 1}})), 0.5, 1e-14);
  const auto mv = box_moments(box, 3);
  ASSERT_EQ(mv.basis.size(), mv.values.size());
  EXPECT_EQ(mv.basis.size(), binomial(5, 2));
  EXPECT_NEAR(mv.values[0], 3.0, 1e-14);
  // Odd powers vanish on a symmetric interval.
  const std::vector<Interval> sym{{-1.0, 1.0}};
  EXPECT_EQ(box_moment(sym, Monomial::var(1, 3)), 0.0);
  EXPECT_NEAR(box_moment(sym, Monomial::var(1, 4)), 0.4, 1e-15);
}

TEST(Parser, ReadsStatesInputsAndTime) {
  const Polynomial p = parse_polynomial("3.0*x1^2*u1 - 0.25*x2 + t", 2, 1);
  EXPECT_EQ(p, 3.0 * x(1) * x(1) * x(3) - 0.25 * x(2) + x(0));
  EXPECT_EQ(parse_polynomial("-(x1 - 1)^2", 1, 0), -(x(1) * x(1)) + 2.0 * x(1) - Polynomial(1.0));
  EXPECT_EQ(parse_polynomial("2e-1*x1", 1, 0), 0.2 * x(1));
}

TEST(Parser, ReportsColumnOfError) {
  try {
    parse_polynomial("x1 + y2", 1, 0);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.column(), 6u);
  }
  EXPECT_THROW(parse_polynomial("x3", 2, 0), ParseError);
  EXPECT_THROW(parse_polynomial("2 x1", 1, 0), ParseError);
  EXPECT_THROW(parse_polynomial("(x1", 1, 0), ParseError);
}

TEST(Parser, RoundTripsThroughToString) {
  const Polynomial p = parse_polynomial("x1^3 - 2*x1*x2 + 0.5", 2, 0);
  EXPECT_EQ(parse_polynomial(p.to_string(2), 2, 0), p);
}
