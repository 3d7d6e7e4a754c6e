#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "specfact/matnum.hpp"
#include "support/random_models.hpp"
#include "support/rational.hpp"

namespace specfact {
namespace {

using testing::Rational;

Matrix diag(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v.asDiagonal();
}

TEST(SolveStein, DiagonalExampleMatchesRationalOracle) {
  // (1/16) x = x + 1/16 and (1/9) x = x + 1/36, solved exactly.
  const Rational x1 = Rational(1, 16) / (Rational(1, 16) - Rational(1));
  const Rational x2 = Rational(1, 36) / (Rational(1, 9) - Rational(1));
  ASSERT_EQ(x1, Rational(-1, 15));
  ASSERT_EQ(x2, Rational(-1, 32));

  const Matrix x = solve_stein(diag({0.25, 1.0 / 3.0}), diag({1.0 / 16.0, 1.0 / 36.0}));
  EXPECT_NEAR(x(0, 0), x1.value(), 1e-15);
  EXPECT_NEAR(x(1, 1), x2.value(), 1e-15);
  EXPECT_NEAR(x(0, 1), 0.0, 1e-15);
}

TEST(SolveStein, ZeroOperatorNegatesRightHandSide) {
  Matrix q(2, 2);
  q << 2.0, 0.5, 0.5, -1.0;
  EXPECT_LT(max_abs(Matrix(solve_stein(Matrix::Zero(2, 2), q) + q)), 1e-15);
}

TEST(SolveStein, ReachabilityFormOfExampleGramian) {
  // y/4 = y - b^2 with b in {7/2, 5}.
  const Rational y1 = Rational(49, 4) / (Rational(1) - Rational(1, 4));
  const Rational y2 = Rational(25) / (Rational(1) - Rational(1, 4));
  ASSERT_EQ(y1, Rational(49, 3));
  ASSERT_EQ(y2, Rational(100, 3));
  const Matrix b_plus = diag({-3.5, -5.0});
  const Matrix y = solve_stein(0.5 * Matrix::Identity(2, 2), -b_plus * b_plus.transpose());
  EXPECT_NEAR(y(0, 0), y1.value(), 1e-13);
  EXPECT_NEAR(y(1, 1), y2.value(), 1e-13);
}

TEST(SolveStein, ReciprocalEigenvaluePairIsSingular) {
  try {
    solve_stein(diag({2.0, 0.5}), Matrix::Identity(2, 2));
    FAIL() << "expected SingularSteinOperator";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularSteinOperator);
  }
}

TEST(SolveStein, RandomStableResidual) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 1 + trial % 8;
    const Matrix m = testing::random_stable_matrix(rng, n);
    const Matrix r = testing::random_matrix(rng, n, n);
    const Matrix q = r + r.transpose();
    const Matrix x = solve_stein(m, q);
    EXPECT_TRUE(is_symmetric(x, 0.0));
    EXPECT_LE(max_abs(Matrix(m.transpose() * x * m - x - q)), 1e-8 * (max_abs(q) + max_abs(x)));
  }
}

TEST(SymSqrt, Examples) {
  EXPECT_LT(max_abs(Matrix(sym_sqrt(diag({1.0 / 16.0, 1.0 / 9.0})) - diag({0.25, 1.0 / 3.0}))),
            1e-15);
  EXPECT_LT(max_abs(Matrix(sym_sqrt(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3))), 1e-15);
  EXPECT_LT(max_abs(Matrix(sym_sqrt(4.0 * Matrix::Identity(2, 2)) - 2.0 * Matrix::Identity(2, 2))),
            1e-15);
}

TEST(SymSqrt, RejectsIndefinite) {
  try {
    sym_sqrt(diag({1.0, -1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotPositiveDefinite);
  }
}

TEST(SymSqrt, SquaresBackAndCommutesWithOrthogonalConjugation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 1 + trial % 6;
    const Matrix r = testing::random_matrix(rng, n, n);
    const Matrix s = r * r.transpose() + 0.1 * Matrix::Identity(n, n);
    const Matrix root = sym_sqrt(s);
    EXPECT_LT(max_abs(Matrix(root * root - s)), 1e-8 * max_abs(s));
    const Matrix q = testing::random_orthogonal(rng, n);
    EXPECT_LT(max_abs(Matrix(sym_sqrt(q * s * q.transpose()) - q * root * q.transpose())),
              1e-8 * max_abs(s));
  }
}

TEST(PseudoInverse, Examples) {
  EXPECT_LT(max_abs(Matrix(pseudo_inverse(diag({0, 0, 4.0 / 3.0, 4.0 / 3.0})) -
                           diag({0, 0, 0.75, 0.75}))),
            1e-15);
  EXPECT_EQ(max_abs(pseudo_inverse(Matrix::Zero(3, 3))), 0.0);

  const double theta = 0.7;
  Vector v = Vector::Zero(4);
  v(2) = std::cos(theta);
  v(3) = std::sin(theta);
  const Matrix expected = 0.75 * v * v.transpose();
  EXPECT_LT(max_abs(Matrix(pseudo_inverse(Matrix(4.0 / 3.0 * v * v.transpose())) - expected)),
            1e-14);
}

TEST(PseudoInverse, PenroseIdentitiesOnRankDeficientSymmetric) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + trial % 6;
    const Index k = 1 + trial % (n - 1);
    const Matrix f = testing::random_matrix(rng, n, k);
    const Matrix s = f * diag({1.0, -2.0, 3.0, 0.5, -0.7, 1.5, 2.5}).topLeftCorner(k, k) *
                     f.transpose();
    const Matrix p = pseudo_inverse(s);
    EXPECT_TRUE(is_symmetric(p, 0.0));
    const double scale = max_abs(s) * max_abs(p);
    EXPECT_LT(max_abs(Matrix(s * p * s - s)), 1e-8 * std::max(1.0, scale * max_abs(s)));
    EXPECT_LT(max_abs(Matrix(p * s * p - p)), 1e-8 * std::max(1.0, scale * max_abs(p)));
    EXPECT_LT(max_abs(Matrix((s * p).transpose() - s * p)), 1e-8 * std::max(1.0, scale));
    EXPECT_LT(max_abs(Matrix((p * s).transpose() - p * s)), 1e-8 * std::max(1.0, scale));
  }
}

TEST(OrthProjector, Examples) {
  Matrix v = Matrix::Zero(4, 2);
  v(2, 0) = 1.0;
  v(3, 1) = 1.0;
  EXPECT_LT(max_abs(Matrix(orth_projector(v) - diag({0, 0, 1, 1}))), 1e-15);

  Matrix line = Matrix::Zero(4, 1);
  line(2, 0) = std::cos(std::numbers::pi / 4);
  line(3, 0) = std::sin(std::numbers::pi / 4);
  Matrix expected = Matrix::Zero(4, 4);
  expected.bottomRightCorner(2, 2).setConstant(0.5);
  EXPECT_LT(max_abs(Matrix(orth_projector(line) - expected)), 1e-15);

  EXPECT_LT(max_abs(Matrix(orth_projector(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3))),
            1e-15);
}

TEST(OrthProjector, RejectsRankDeficientBasis) {
  Matrix v(3, 2);
  v << 1, 2, 1, 2, 0, 0;
  try {
    orth_projector(v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankDeficientBasis);
  }
}

TEST(OrthProjector, DependsOnlyOnColumnSpace) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3 + trial % 4;
    const Index k = 1 + trial % (n - 1);
    const Matrix v = testing::random_matrix(rng, n, k);
    const Matrix r = testing::random_matrix(rng, k, k) + 3.0 * Matrix::Identity(k, k);
    const Matrix pv = orth_projector(v);
    EXPECT_LT(max_abs(Matrix(pv - orth_projector(v * r))), 1e-8);
    EXPECT_LT(max_abs(Matrix(pv * pv - pv)), 1e-12);
    EXPECT_LT(max_abs(Matrix(pv * v - v)), 1e-8 * max_abs(v));
  }
}

TEST(InvariantBasis, Examples) {
  const Matrix m = diag({0.25, 1.0 / 3.0, 2.0, 2.0});
  const Matrix e1 = invariant_basis(m, {0});
  ASSERT_EQ(e1.cols(), 1);
  EXPECT_LT(max_abs(Matrix(e1 - Matrix::Identity(4, 4).col(0))), 1e-12);

  try {
    invariant_basis(m, {2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AmbiguousEigenspace);
  }

  const Matrix both = invariant_basis(diag({0.25, 1.0 / 3.0}), {0, 1});
  EXPECT_LT(max_abs(Matrix(both - Matrix::Identity(2, 2))), 1e-15);
}

TEST(InvariantBasis, SelectionByEigenvalue) {
  const Matrix m = diag({0.25, 1.0 / 3.0, 2.0, 2.0});
  const Matrix v = invariant_basis_for_eigenvalues(m, {complex(0.25, 0.0)});
  EXPECT_LT(max_abs(Matrix(v - Matrix::Identity(4, 4).col(0))), 1e-12);

  Matrix rot(3, 3);
  rot << 0.5, -0.4, 0.0, 0.4, 0.5, 0.0, 0.0, 0.0, 0.2;
  try {
    invariant_basis_for_eigenvalues(rot, {complex(0.5, 0.4)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ComplexPairSplit);
  }
  const Matrix pair =
      invariant_basis_for_eigenvalues(rot, {complex(0.5, 0.4), complex(0.5, -0.4)});
  EXPECT_EQ(pair.cols(), 2);
  EXPECT_TRUE(is_invariant(rot, pair, 1e-12));
}

TEST(InvariantBasis, WholeEigenspaceOfRepeatedBlock) {
  const Matrix m = diag({0.25, 1.0 / 3.0, 2.0, 2.0});
  const Matrix v = invariant_basis(m, {2}, {}, MultiplicityPolicy::WholeEigenspace);
  Matrix expected = Matrix::Zero(4, 2);
  expected(2, 0) = 1.0;
  expected(3, 1) = 1.0;
  EXPECT_LT(max_abs(Matrix(v - expected)), 1e-12);
}

TEST(InvariantBasis, OutputIsAlwaysInvariant) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 6;
    const Matrix m = testing::random_stable_matrix(rng, n);
    const auto blocks = spectral_blocks(m);
    std::vector<std::size_t> selection;
    for (std::size_t b = 0; b < blocks.size(); ++b)
      if ((trial >> b) & 1) selection.push_back(b);
    const Matrix v = invariant_basis(m, selection);
    Index expected = 0;
    for (std::size_t b : selection) expected += blocks[b].dimension();
    EXPECT_EQ(v.cols(), expected);
    EXPECT_TRUE(is_invariant(m, v, 1e-8));
  }
}

TEST(IsInvariant, Examples) {
  const Matrix m = diag({0.25, 1.0 / 3.0, 2.0, 2.0});
  for (double theta : {0.0, 0.3, 1.1, 2.5}) {
    Matrix v = Matrix::Zero(4, 1);
    v(2, 0) = std::cos(theta);
    v(3, 0) = std::sin(theta);
    EXPECT_TRUE(is_invariant(m, v, 1e-10));
  }
  Matrix mixed = Matrix::Zero(4, 1);
  mixed(0, 0) = mixed(1, 0) = 1.0;
  EXPECT_FALSE(is_invariant(m, mixed, 1e-10));
  EXPECT_TRUE(is_invariant(m, Matrix::Identity(4, 4), 1e-10));
}

TEST(CanonicalBasis, CoordinateSubspacesComeBackAsUnitVectors) {
  Matrix v(4, 2);
  v << 0, 0, 0, 0, 0.6, -0.8, 0.8, 0.6;  // rotated basis of span(e3, e4)
  Matrix expected = Matrix::Zero(4, 2);
  expected(2, 0) = 1.0;
  expected(3, 1) = 1.0;
  EXPECT_LT(max_abs(Matrix(canonical_basis(v, 1e-9) - expected)), 1e-14);
}

}  // namespace
}  // namespace specfact
