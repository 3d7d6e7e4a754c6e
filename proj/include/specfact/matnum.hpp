#ifndef SPECFACT_MATNUM_HPP
#define SPECFACT_MATNUM_HPP

// Dense kernels used across the factorization pipeline: Stein solver,
// symmetric square root, pseudo-inverse, projectors and invariant-subspace
// bases. Everything here is desk-scale (n up to a few dozen).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specfact/errors.hpp"
#include "specfact/tolerance.hpp"

namespace specfact {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using complex = std::complex<double>;

/// Largest entry modulus; zero for empty matrices.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : static_cast<double>(m.cwiseAbs().maxCoeff());
}

inline bool all_finite(const Matrix& m) {
  return m.size() == 0 || m.allFinite();
}

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.transpose()) <= rel_tol * std::max(1.0, max_abs(m));
}

inline Matrix symmetrize(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Numerical rank with the threshold taken relative to the largest
/// singular value.
inline Index numerical_rank(const Matrix& m, double rank_rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  Index r = 0;
  while (r < s.size() && s(r) > rank_rel_tol * s(0)) ++r;
  return r;
}

/// Solves M^T X M - X = Q for symmetric X by linearizing over the stacked
/// columns of X. Unique when no two eigenvalues of M multiply to one.
inline Matrix solve_stein(const Matrix& M, const Matrix& Q,
                          const ToleranceConfig& tol = {}) {
  const Index n = M.rows();
  if (M.cols() != n || Q.rows() != n || Q.cols() != n)
    fail(Errc::DimensionMismatch, "solve_stein expects square M and Q of equal size");
  if (!is_symmetric(Q, 1e-10))
    fail(Errc::InvalidArgument, "solve_stein expects a symmetric right-hand side");
  if (n == 0) return Matrix(0, 0);

  // vec(M^T X M) = (M^T kron M^T) vec(X)
  const Matrix Mt = M.transpose();
  Matrix K(n * n, n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) = Mt(i, j) * Mt;
  K -= Matrix::Identity(n * n, n * n);

  Eigen::FullPivLU<Matrix> lu(K);
  lu.setThreshold(tol.rank_rel_tol);
  if (lu.rank() < n * n)
    fail(Errc::SingularSteinOperator,
         "Stein operator is singular (eigenvalue pair with product one)");

  const Vector q = Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector x = lu.solve(q);
  Matrix X = symmetrize(Eigen::Map<const Matrix>(x.data(), n, n));

  const double residual = max_abs(Mt * X * M - X - Q);
  if (residual > tol.residual_tol * (max_abs(Q) + max_abs(X)))
    fail(Errc::SingularSteinOperator,
         "Stein solve residual " + format_number(residual) + " exceeds tolerance");
  return X;
}

/// Principal square root of a symmetric positive definite matrix.
inline Matrix sym_sqrt(const Matrix& S, const ToleranceConfig& tol = {}) {
  if (S.rows() != S.cols())
    fail(Errc::DimensionMismatch, "sym_sqrt expects a square matrix");
  if (S.rows() == 0) return S;
  if (!is_symmetric(S, 1e-10))
    fail(Errc::NotPositiveDefinite, "sym_sqrt input is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  const Vector& w = es.eigenvalues();
  const double scale = w.cwiseAbs().maxCoeff();
  if (!(w(0) > tol.rank_rel_tol * scale))
    fail(Errc::NotPositiveDefinite,
         "smallest eigenvalue " + format_number(w(0)) + " is not positive");
  const Matrix& V = es.eigenvectors();
  return symmetrize(V * w.cwiseSqrt().asDiagonal() * V.transpose());
}

/// Moore-Penrose pseudo-inverse with relative rank truncation. Symmetric
/// inputs go through a symmetric eigendecomposition so that the result is
/// exactly symmetric.
inline Matrix pseudo_inverse(const Matrix& S, const ToleranceConfig& tol = {}) {
  if (S.size() == 0) return Matrix::Zero(S.cols(), S.rows());
  if (is_symmetric(S, 1e-12)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
    const Vector& w = es.eigenvalues();
    const double scale = w.cwiseAbs().maxCoeff();
    if (scale == 0.0) return Matrix::Zero(S.cols(), S.rows());
    Vector inv = Vector::Zero(w.size());
    for (Index i = 0; i < w.size(); ++i)
      if (std::abs(w(i)) > tol.rank_rel_tol * scale) inv(i) = 1.0 / w(i);
    const Matrix& V = es.eigenvectors();
    return symmetrize(V * inv.asDiagonal() * V.transpose());
  }
  Eigen::JacobiSVD<Matrix> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s(0) == 0.0) return Matrix::Zero(S.cols(), S.rows());
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol.rank_rel_tol * s(0)) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Orthonormal basis of im(V) that depends only on the subspace, not on
/// the spanning set: pivoted columns of the orthogonal projector, restored
/// to ascending coordinate order and orthonormalized with a positive
/// triangular factor. Coordinate subspaces come back as unit vectors.
inline Matrix canonical_basis(const Matrix& V, double rank_rel_tol) {
  const Index n = V.rows();
  if (V.cols() == 0 || n == 0) return Matrix(n, 0);
  Eigen::JacobiSVD<Matrix> svd(V, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Index r = 0;
  if (s(0) > 0.0)
    while (r < s.size() && s(r) > rank_rel_tol * s(0)) ++r;
  if (r == 0) return Matrix(n, 0);
  const Matrix U = svd.matrixU().leftCols(r);
  const Matrix P = U * U.transpose();

  Eigen::ColPivHouseholderQR<Matrix> pivoted(P);
  std::vector<Index> cols(static_cast<std::size_t>(r));
  for (Index j = 0; j < r; ++j)
    cols[static_cast<std::size_t>(j)] = pivoted.colsPermutation().indices()(j);
  std::sort(cols.begin(), cols.end());

  Matrix S(n, r);
  for (Index j = 0; j < r; ++j) S.col(j) = P.col(cols[static_cast<std::size_t>(j)]);
  Eigen::HouseholderQR<Matrix> qr(S);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, r);
  const Matrix R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (Index j = 0; j < r; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

/// Orthogonal projector onto im(V); V must have full column rank.
inline Matrix orth_projector(const Matrix& V, const ToleranceConfig& tol = {}) {
  const Index n = V.rows();
  if (V.cols() == 0) return Matrix::Zero(n, n);
  Eigen::JacobiSVD<Matrix> svd(V, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (s.size() < V.cols() || s(0) == 0.0 ||
      s(V.cols() - 1) <= tol.rank_rel_tol * s(0))
    fail(Errc::RankDeficientBasis, "projector basis is rank deficient");
  const Matrix U = svd.matrixU();
  return symmetrize(U * U.transpose());
}

/// True iff im(V) is M-invariant: ||M Q - Q Q^T M Q|| <= tol max(1, ||M||)
/// for an orthonormal basis Q of im(V).
inline bool is_invariant(const Matrix& M, const Matrix& V, double tol,
                         double rank_rel_tol = 1e-9) {
  if (M.rows() != M.cols() || V.rows() != M.rows())
    fail(Errc::DimensionMismatch, "is_invariant dimension mismatch");
  if (V.cols() == 0) return true;
  Eigen::JacobiSVD<Matrix> svd(V, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (s.size() < V.cols() || s(0) == 0.0 ||
      s(V.cols() - 1) <= rank_rel_tol * s(0))
    fail(Errc::RankDeficientBasis, "invariance basis is rank deficient");
  const Matrix Q = svd.matrixU();
  const Matrix MQ = M * Q;
  const double residual = (MQ - Q * (Q.transpose() * MQ)).norm();
  return residual <= tol * std::max(1.0, M.norm());
}

/// One block of the real spectral decomposition: a distinct real eigenvalue
/// or a distinct complex-conjugate pair (stored with Im >= 0).
struct EigenBlock {
  complex value;
  int multiplicity = 1;
  bool complex_pair = false;

  Index dimension() const { return multiplicity * (complex_pair ? 2 : 1); }
};

/// Distinct spectral blocks of M ordered by real part, then imaginary part.
/// Eigenvalues closer than cluster_tol * max(1, |lambda|) are merged.
inline std::vector<EigenBlock> spectral_blocks(const Matrix& M,
                                               double cluster_tol = 1e-6) {
  if (M.rows() != M.cols())
    fail(Errc::DimensionMismatch, "spectral_blocks expects a square matrix");
  std::vector<EigenBlock> blocks;
  if (M.rows() == 0) return blocks;
  Eigen::EigenSolver<Matrix> es(M, false);
  const Eigen::VectorXcd ev = es.eigenvalues();

  std::vector<complex> reals;
  std::vector<complex> uppers;
  for (Index i = 0; i < ev.size(); ++i) {
    const complex l = ev(i);
    const double scale = std::max(1.0, std::abs(l));
    if (std::abs(l.imag()) <= cluster_tol * scale)
      reals.emplace_back(l.real(), 0.0);
    else if (l.imag() > 0.0)
      uppers.push_back(l);
  }
  auto by_position = [](const complex& a, const complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  };
  auto cluster = [&](std::vector<complex>& values, bool pair) {
    std::sort(values.begin(), values.end(), by_position);
    std::vector<bool> used(values.size(), false);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (used[i]) continue;
      EigenBlock block;
      block.complex_pair = pair;
      block.multiplicity = 0;
      complex sum = 0.0;
      for (std::size_t j = i; j < values.size(); ++j) {
        if (used[j]) continue;
        const double scale = std::max(1.0, std::abs(values[i]));
        if (std::abs(values[j] - values[i]) <= cluster_tol * scale) {
          used[j] = true;
          sum += values[j];
          ++block.multiplicity;
        }
      }
      block.value = sum / static_cast<double>(block.multiplicity);
      blocks.push_back(block);
    }
  };
  cluster(reals, false);
  cluster(uppers, true);
  std::sort(blocks.begin(), blocks.end(),
            [&](const EigenBlock& a, const EigenBlock& b) {
              return by_position(a.value, b.value);
            });
  return blocks;
}

enum class MultiplicityPolicy {
  /// A repeated eigenvalue has a continuum of invariant subspaces; refuse.
  Reject,
  /// Take the whole (generalized) eigenspace of a repeated eigenvalue.
  WholeEigenspace,
};

/// Real orthonormal basis of the invariant subspace spanned by the selected
/// spectral blocks (indices into spectral_blocks(M)).
inline Matrix invariant_basis(const Matrix& M, const std::vector<std::size_t>& selection,
                              const ToleranceConfig& tol = {},
                              MultiplicityPolicy policy = MultiplicityPolicy::Reject) {
  const Index n = M.rows();
  const auto blocks = spectral_blocks(M);
  std::vector<bool> chosen(blocks.size(), false);
  for (std::size_t idx : selection) {
    if (idx >= blocks.size())
      fail(Errc::InvalidArgument, "eigenvalue block index " + std::to_string(idx) +
                                      " out of range (" + std::to_string(blocks.size()) +
                                      " blocks)");
    if (chosen[idx])
      fail(Errc::InvalidArgument, "eigenvalue block selected twice");
    if (blocks[idx].multiplicity > 1 && policy == MultiplicityPolicy::Reject)
      fail(Errc::AmbiguousEigenspace,
           "eigenvalue block " + std::to_string(idx) +
               " is repeated; supply an explicit basis instead");
    chosen[idx] = true;
  }
  Index k = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (chosen[b]) k += blocks[b].dimension();
  if (k == 0) return Matrix(n, 0);
  if (k == n) return Matrix::Identity(n, n);

  // The selected spectral subspace is the range of the annihilating
  // polynomial of the unselected blocks.
  Matrix P = Matrix::Identity(n, n);
  const Matrix I = Matrix::Identity(n, n);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (chosen[b]) continue;
    const EigenBlock& blk = blocks[b];
    Matrix factor = blk.complex_pair
                        ? Matrix(M * M - 2.0 * blk.value.real() * M + std::norm(blk.value) * I)
                        : Matrix(M - blk.value.real() * I);
    factor /= std::max(factor.norm(), 1e-300);
    for (int p = 0; p < blk.multiplicity; ++p) {
      P = factor * P;
      P /= std::max(P.norm(), 1e-300);
    }
  }
  Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeThinU);
  const Matrix basis = canonical_basis(svd.matrixU().leftCols(k), tol.rank_rel_tol);
  if (basis.cols() != k)
    fail(Errc::RankDeficientBasis, "spectral subspace basis lost rank");
  if (!is_invariant(M, basis, std::sqrt(tol.residual_tol), tol.rank_rel_tol))
    fail(Errc::NotInvariant, "computed spectral subspace failed the invariance check");
  return basis;
}

/// Selection by eigenvalue. Complex eigenvalues must be listed together with
/// their conjugates.
inline Matrix invariant_basis_for_eigenvalues(const Matrix& M, const std::vector<complex>& values,
                                              const ToleranceConfig& tol = {},
                                              double match_tol = 1e-6) {
  const auto blocks = spectral_blocks(M);
  std::vector<std::size_t> selection;
  std::vector<bool> seen_upper(blocks.size(), false);
  std::vector<bool> seen_lower(blocks.size(), false);
  for (const complex& v : values) {
    bool matched = false;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const double scale = match_tol * std::max(1.0, std::abs(blocks[b].value));
      if (std::abs(v - blocks[b].value) <= scale) {
        seen_upper[b] = true;
        matched = true;
      } else if (blocks[b].complex_pair && std::abs(v - std::conj(blocks[b].value)) <= scale) {
        seen_lower[b] = true;
        matched = true;
      }
    }
    if (!matched) fail(Errc::InvalidArgument, "requested value is not an eigenvalue");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (!seen_upper[b] && !seen_lower[b]) continue;
    if (blocks[b].complex_pair && seen_upper[b] != seen_lower[b])
      fail(Errc::ComplexPairSplit, "selection separates a complex-conjugate pair");
    selection.push_back(b);
  }
  return invariant_basis(M, selection, tol);
}

}  // namespace specfact

#endif  // SPECFACT_MATNUM_HPP
