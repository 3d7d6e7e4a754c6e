#ifndef SPECFACT_DIVISORS_HPP
#define SPECFACT_DIVISORS_HPP

// Left all-pass divisors of the conjugate phase function, indexed by the
// invariant subspaces of its block-diagonal state matrix diag(Gamma, A^{-T}).
//
// For the orthogonal projector Pi onto an invariant subspace:
//   P   = [Pi P0^{-1} Pi]^+
//   D_P = (I + C P C^T)^{1/2}
//   B_P = A P C^T D_P^{-1}
// and T_l = (A, B_P, C, D_P) restricted to im(Pi). The right complement
// T_r = T_l^{-1} T is built the same way from the transposed system, whose
// Gramian is P0^{-1}, on the complementary subspace im(I - Pi).

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "specfact/errors.hpp"
#include "specfact/matnum.hpp"
#include "specfact/spectral.hpp"
#include "specfact/statespace.hpp"
#include "specfact/tolerance.hpp"

namespace specfact {

/// Indices into spectral_blocks() of one diagonal block of the state matrix.
using BlockSelection = std::vector<std::size_t>;

/// Either a block selection or an explicit basis (columns) of an invariant
/// subspace of one diagonal block.
using PartSpec = std::variant<BlockSelection, Matrix>;

struct SubspaceSpec {
  PartSpec gamma_part = BlockSelection{};
  PartSpec a_part = BlockSelection{};

  static SubspaceSpec select(BlockSelection gamma, BlockSelection a) {
    return {std::move(gamma), std::move(a)};
  }
};

struct AllPassDivisor {
  Realization t_ell;
  Matrix projector;
  Matrix p;
  Matrix b_p;
  Matrix d_p;
  Index degree = 0;
  double allpass_residual = 0.0;
  std::optional<Realization> right_complement;
};

namespace detail {

inline Matrix selection_basis(const Matrix& block, const BlockSelection& selection,
                              const ToleranceConfig& tol) {
  try {
    return invariant_basis(block, selection, tol, MultiplicityPolicy::WholeEigenspace);
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidArgument) fail(Errc::InvalidSubspace, e.what());
    throw;
  }
}

inline Matrix part_basis(const Matrix& block, const PartSpec& part, const ToleranceConfig& tol) {
  if (const auto* sel = std::get_if<BlockSelection>(&part))
    return selection_basis(block, *sel, tol);
  const Matrix& v = std::get<Matrix>(part);
  if (v.cols() == 0) return Matrix(block.rows(), 0);
  if (v.rows() != block.rows())
    fail(Errc::InvalidSubspace, "explicit basis has " + std::to_string(v.rows()) +
                                    " rows, block has dimension " + std::to_string(block.rows()));
  if (numerical_rank(v, tol.rank_rel_tol) < v.cols())
    fail(Errc::InvalidSubspace, "explicit basis is rank deficient");
  if (!is_invariant(block, v, std::sqrt(tol.residual_tol), tol.rank_rel_tol))
    fail(Errc::InvalidSubspace, "explicit basis does not span an invariant subspace");
  return v;
}

}  // namespace detail

/// Stacked basis diag(V_gamma, V_a) of the subspace described by `spec`.
inline Matrix subspace_basis(const ConjugatePhase& cp, const SubspaceSpec& spec,
                             const ToleranceConfig& tol = {}) {
  const Matrix vg = detail::part_basis(cp.gamma, spec.gamma_part, tol);
  const Matrix va = detail::part_basis(cp.a_inv_t, spec.a_part, tol);
  const Index n_g = cp.n_gamma;
  Matrix v = Matrix::Zero(n_g + cp.n_a, vg.cols() + va.cols());
  v.topLeftCorner(n_g, vg.cols()) = vg;
  v.bottomRightCorner(cp.n_a, va.cols()) = va;
  return v;
}

inline Matrix projector_from_spec(const ConjugatePhase& cp, const SubspaceSpec& spec,
                                  const ToleranceConfig& tol = {}) {
  return orth_projector(subspace_basis(cp, spec, tol), tol);
}

/// Builds the left all-pass divisor generated by the orthogonal projector `pi`.
inline AllPassDivisor divisor_from_projector(const ConjugatePhase& cp, const Matrix& pi,
                                             const ToleranceConfig& tol = {}) {
  const Matrix& ta = cp.t.a();
  const Matrix& tc = cp.t.c();
  const Index n2 = cp.t.states();
  const Index m = cp.t.outputs();
  if (pi.rows() != n2 || pi.cols() != n2)
    fail(Errc::DimensionMismatch, "projector must be " + std::to_string(n2) + "x" +
                                      std::to_string(n2));
  const double pi_scale = std::max(1.0, max_abs(pi));
  if (max_abs(Matrix(pi - pi.transpose())) > tol.residual_tol * pi_scale ||
      max_abs(Matrix(pi * pi - pi)) > tol.residual_tol * pi_scale)
    fail(Errc::InvalidArgument, "parameter is not an orthogonal projector");

  AllPassDivisor div;
  div.projector = symmetrize(pi);
  Index rank = 0;
  Matrix range(n2, 0);
  if (n2 > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(div.projector);
    for (Index i = 0; i < n2; ++i)
      if (es.eigenvalues()(i) > 0.5) ++rank;
    range = es.eigenvectors().rightCols(rank);
  }
  if (!is_invariant(ta, range, std::sqrt(tol.residual_tol), tol.rank_rel_tol))
    fail(Errc::NotInvariant, "image of the projector is not invariant under the state matrix");

  div.p = pseudo_inverse(symmetrize(div.projector * cp.p0_inv * div.projector), tol);
  const Matrix s = Matrix::Identity(m, m) + tc * div.p * tc.transpose();
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
    const Vector& w = es.eigenvalues();
    if (!(w(0) > tol.rank_rel_tol * w.cwiseAbs().maxCoeff()))
      fail(Errc::CompressionNotPD, "I + C P C^T is not positive definite");
  }
  div.d_p = sym_sqrt(symmetrize(s), tol);
  div.b_p = ta * div.p * tc.transpose() * div.d_p.llt().solve(Matrix::Identity(m, m));
  // B_P lies in the invariant subspace im(Pi), so the reachable part is
  // known in advance; restricting to it avoids a numerical rank decision.
  const Matrix q = canonical_basis(range, tol.rank_rel_tol);
  div.t_ell = q.cols() == 0 ? Realization::constant(div.d_p)
                            : minimal(detail::restrict_to(Realization(ta, div.b_p, tc, div.d_p), q),
                                      tol);
  div.degree = div.t_ell.states();
  if (div.degree != rank)
    fail(Errc::DegreeAdditivityViolation,
         "divisor degree " + std::to_string(div.degree) + " differs from subspace dimension " +
             std::to_string(rank));
  div.allpass_residual = allpass_residual(div.t_ell, tol);
  return div;
}

inline AllPassDivisor divisor_from_spec(const ConjugatePhase& cp, const SubspaceSpec& spec,
                                        const ToleranceConfig& tol = {}) {
  return divisor_from_projector(cp, projector_from_spec(cp, spec, tol), tol);
}

/// T_r with T = T_l T_r; certifies that it is all-pass, that the product
/// reproduces T, and that the McMillan degrees add up to that of T.
inline Realization right_complement(const ConjugatePhase& cp, const AllPassDivisor& div,
                                    const ToleranceConfig& tol = {}) {
  const Index n2 = cp.t.states();
  const Index m = cp.t.outputs();
  const Matrix eye_m = Matrix::Identity(m, m);
  if (n2 == 0) return Realization::constant(div.t_ell.d().partialPivLu().solve(cp.t.d()));
  const Matrix& ta = cp.t.a();
  const Matrix& tb = cp.t.b();

  const Matrix pc = symmetrize(Matrix::Identity(n2, n2) - div.projector);
  const Matrix p = pseudo_inverse(symmetrize(pc * cp.p0 * pc), tol);
  const Matrix s = symmetrize(eye_m + tb.transpose() * p * tb);
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const Vector& w = es.eigenvalues();
    if (!(w(0) > tol.rank_rel_tol * w.cwiseAbs().maxCoeff()))
      fail(Errc::CompressionNotPD, "I + B^T P B is not positive definite");
  }
  const Matrix d_r = sym_sqrt(s, tol);
  const Matrix c_r = d_r.llt().solve(tb.transpose() * p * ta);
  const Matrix q = canonical_basis(pc, tol.rank_rel_tol);
  Realization t_r = q.cols() == 0
                        ? Realization::constant(d_r)
                        : Realization(q.transpose() * ta * q, q.transpose() * tb, c_r * q, d_r);

  // The construction fixes T_r only up to a constant orthogonal left factor;
  // recover it at the comparison point farthest from all poles.
  const TransferEvaluator el(div.t_ell, tol);
  const TransferEvaluator et(cp.t, tol);
  const TransferEvaluator er(t_r, tol);
  complex z0 = 0.0;
  double best = -1.0;
  for (const complex& z : comparison_points(16)) {
    const double dist = std::min({el.pole_distance(z), et.pole_distance(z), er.pole_distance(z)});
    if (dist > best) {
      best = dist;
      z0 = z;
    }
  }
  const CMatrix o = el(z0).partialPivLu().solve(et(z0)) * er(z0).inverse();
  const Matrix o_real = o.real();
  if (max_abs(Matrix(o.imag())) > kAllPassTol ||
      max_abs(Matrix(o_real.transpose() * o_real - eye_m)) > kAllPassTol)
    fail(Errc::NotAllPass, "right complement is not an orthogonal multiple of T_l^{-1} T");
  t_r = minimal(Realization(t_r.a(), t_r.b(), o_real * t_r.c(), o_real * t_r.d()), tol);

  if (div.degree + t_r.states() != n2)
    fail(Errc::DegreeAdditivityViolation,
         "degrees " + std::to_string(div.degree) + " + " + std::to_string(t_r.states()) +
             " do not add up to " + std::to_string(n2));
  const double product = transfer_distance(series(div.t_ell, t_r), cp.t, tol);
  if (!(product <= kAllPassTol))
    fail(Errc::DegreeAdditivityViolation,
         "T_l T_r deviates from T by " + format_number(product));
  const double residual = allpass_residual(t_r, tol);
  if (!(residual <= kAllPassTol))
    fail(Errc::NotAllPass, "right complement all-pass residual " + format_number(residual));
  return t_r;
}

/// Attaches the right complement after checking both sides of T = T_l T_r.
inline void certify_divisor(const ConjugatePhase& cp, AllPassDivisor& div,
                            const ToleranceConfig& tol = {}) {
  if (!(div.allpass_residual <= kAllPassTol))
    fail(Errc::NotAllPass, "divisor all-pass residual " + format_number(div.allpass_residual));
  div.right_complement = right_complement(cp, div, tol);
}

enum class Part { Gamma, A };

inline const char* to_string(Part part) { return part == Part::Gamma ? "gamma" : "a"; }

/// A repeated eigenvalue whose eigenspace carries a continuum of invariant
/// subspaces; members must be supplied as explicit bases.
struct ContinuumMarker {
  Part part;
  std::size_t block;
  complex eigenvalue;
  Index dimension;
};

struct EnumeratedDivisor {
  BlockSelection gamma_selection;
  BlockSelection a_selection;
  /// Dimensions of the gamma and A^{-T} parts of the subspace.
  std::pair<Index, Index> subspace_class;
  AllPassDivisor divisor;
};

struct DivisorEnumeration {
  std::vector<EnumeratedDivisor> divisors;
  std::vector<ContinuumMarker> continua;
};

/// One certified divisor per subset of distinct eigenvalue blocks of each
/// diagonal block (repeated blocks are taken whole), plus markers for the
/// eigenspaces that hide a continuum.
inline DivisorEnumeration enumerate_divisors(const ConjugatePhase& cp,
                                             const ToleranceConfig& tol = {}) {
  DivisorEnumeration out;
  const auto gamma_blocks = spectral_blocks(cp.gamma);
  const auto a_blocks = spectral_blocks(cp.a_inv_t);
  for (std::size_t b = 0; b < gamma_blocks.size(); ++b)
    if (gamma_blocks[b].multiplicity > 1)
      out.continua.push_back({Part::Gamma, b, gamma_blocks[b].value, gamma_blocks[b].dimension()});
  for (std::size_t b = 0; b < a_blocks.size(); ++b)
    if (a_blocks[b].multiplicity > 1)
      out.continua.push_back({Part::A, b, a_blocks[b].value, a_blocks[b].dimension()});

  auto subsets = [](const std::vector<EigenBlock>& blocks) {
    std::vector<std::pair<BlockSelection, Index>> result;
    const std::size_t k = blocks.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
      BlockSelection sel;
      Index dim = 0;
      for (std::size_t b = 0; b < k; ++b)
        if (mask & (std::size_t{1} << b)) {
          sel.push_back(b);
          dim += blocks[b].dimension();
        }
      result.emplace_back(std::move(sel), dim);
    }
    return result;
  };
  const auto gamma_subsets = subsets(gamma_blocks);
  const auto a_subsets = subsets(a_blocks);
  for (const auto& [gs, gdim] : gamma_subsets) {
    for (const auto& [as, adim] : a_subsets) {
      EnumeratedDivisor item{gs, as, {gdim, adim},
                             divisor_from_spec(cp, SubspaceSpec::select(gs, as), tol)};
      certify_divisor(cp, item.divisor, tol);
      out.divisors.push_back(std::move(item));
    }
  }
  return out;
}

/// Expands a spec with block selections into explicit-basis specs that
/// replace every selected two-dimensional real eigenspace by the lines
/// span(cos t e1 + sin t e2), t = j pi / grid, j = 0..grid-1, where (e1, e2)
/// is the canonical orthonormal basis of that eigenspace. Several such
/// eigenspaces produce the Cartesian product of their grids.
inline std::vector<SubspaceSpec> sample_continuum(const ConjugatePhase& cp,
                                                  const SubspaceSpec& spec, std::size_t grid,
                                                  const ToleranceConfig& tol = {}) {
  if (grid == 0) fail(Errc::InvalidArgument, "theta grid must be positive");

  // Per part: a list of alternative bases.
  auto expand_part = [&](const Matrix& block, const PartSpec& part) {
    std::vector<Matrix> options;
    const auto* sel = std::get_if<BlockSelection>(&part);
    if (sel == nullptr) {
      options.push_back(std::get<Matrix>(part));
      return options;
    }
    const auto blocks = spectral_blocks(block);
    BlockSelection fixed;
    std::vector<Matrix> planes;
    for (std::size_t idx : *sel) {
      if (idx >= blocks.size()) fail(Errc::InvalidSubspace, "block index out of range");
      const EigenBlock& blk = blocks[idx];
      if (blk.multiplicity > 1 && !blk.complex_pair) {
        if (blk.dimension() != 2)
          fail(Errc::InvalidArgument, "theta grids support two-dimensional eigenspaces only");
        planes.push_back(invariant_basis(block, {idx}, tol, MultiplicityPolicy::WholeEigenspace));
      } else {
        fixed.push_back(idx);
      }
    }
    const Matrix base = detail::part_basis(block, PartSpec{fixed}, tol);
    options.push_back(base);
    for (const Matrix& plane : planes) {
      std::vector<Matrix> next;
      for (const Matrix& partial : options) {
        for (std::size_t j = 0; j < grid; ++j) {
          const double theta = std::numbers::pi * static_cast<double>(j) / static_cast<double>(grid);
          Matrix grown(block.rows(), partial.cols() + 1);
          grown << partial, plane.col(0) * std::cos(theta) + plane.col(1) * std::sin(theta);
          next.push_back(std::move(grown));
        }
      }
      options = std::move(next);
    }
    return options;
  };

  const auto gamma_options = expand_part(cp.gamma, spec.gamma_part);
  const auto a_options = expand_part(cp.a_inv_t, spec.a_part);
  std::vector<SubspaceSpec> out;
  for (const Matrix& g : gamma_options)
    for (const Matrix& a : a_options) out.push_back({PartSpec{g}, PartSpec{a}});
  return out;
}

}  // namespace specfact

#endif  // SPECFACT_DIVISORS_HPP
