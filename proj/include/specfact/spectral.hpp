#ifndef SPECFACT_SPECTRAL_HPP
#define SPECFACT_SPECTRAL_HPP

// Extremal spectral factors and the conjugate phase function built from a
// minimal realization (A, B, C, D) of the outer (minimum-phase, stable)
// factor W_-.
//
//   W_+      = W_- T_1         stable, all zeros outside the disc
//   Wbar_+   = W_+ T_2         unstable, all zeros outside the disc
//   T        = T_1 T_2         conjugate phase function, all-pass of degree 2n

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "specfact/errors.hpp"
#include "specfact/matnum.hpp"
#include "specfact/statespace.hpp"
#include "specfact/tolerance.hpp"

namespace specfact {

/// Spectral margin required between the unit circle and the spectra of A
/// and of the zero matrix for a realization to count as outer.
inline constexpr double kOuterMargin = 1e-8;

/// Threshold for certifying all-pass functions and their factorizations over
/// the circle samples. Divisors come out of two Stein solves and a
/// pseudo-inverse, so they carry a few more rounding steps than a spectrum
/// comparison.
inline constexpr double kAllPassTol = 1e-7;

/// Checks that `w` is a minimal, square, invertible-feedthrough realization
/// whose poles and zeros lie strictly inside the unit disc. With
/// `require_invertible` the state and zero matrices must also be
/// nonsingular (no pole or zero at the origin).
inline void validate_outer(const Realization& w, const ToleranceConfig& tol = {},
                           bool require_invertible = true) {
  tol.validate();
  if (!w.square()) fail(Errc::NotOuter, "not outer: realization is not square");
  require_invertible_feedthrough(w, tol);
  const Index n = w.states();
  if (n == 0) return;
  if (mcmillan_degree(w, tol) != n) fail(Errc::NotOuter, "not outer: realization is not minimal");
  const double rho_a = spectral_radius(w.a());
  if (!(rho_a < 1.0 - kOuterMargin))
    fail(Errc::NotOuter, "not outer: pole of modulus " + std::to_string(rho_a) +
                             " on or outside the unit circle");
  const Matrix gamma = zero_matrix(w, tol);
  const double rho_g = spectral_radius(gamma);
  if (!(rho_g < 1.0 - kOuterMargin))
    fail(Errc::NotOuter, "not outer: zero of modulus " + std::to_string(rho_g) +
                             " on or outside the unit circle");
  if (!require_invertible) return;
  if (numerical_rank(w.a(), tol.rank_rel_tol) < n)
    fail(Errc::SingularStateMatrix, "improper: pole at the origin (use a Moebius preprocessing)");
  if (numerical_rank(gamma, tol.rank_rel_tol) < n)
    fail(Errc::SingularStateMatrix, "improper: zero at the origin (use a Moebius preprocessing)");
}

/// True when the outer realization has a pole or zero at the origin and so
/// must be routed through a Moebius change of variable.
inline bool needs_moebius(const Realization& w, const ToleranceConfig& tol = {}) {
  if (w.states() == 0) return false;
  if (numerical_rank(w.a(), tol.rank_rel_tol) < w.states()) return true;
  try {
    return numerical_rank(zero_matrix(w, tol), tol.rank_rel_tol) < w.states();
  } catch (const Error&) {
    return false;
  }
}

struct OuterToPlus {
  Realization t1;
  Realization w_plus;
  Matrix x;
  Matrix h1;
  Matrix u1;
  Matrix g1;
  Matrix b_plus;
  Matrix d_plus;
};

/// W_+ = W_- T_1 with T_1 = (Gamma, G1, H1, U1).
inline OuterToPlus outer_to_plus(const Realization& w_minus, const ToleranceConfig& tol = {}) {
  validate_outer(w_minus, tol);
  const Index n = w_minus.states();
  const Index m = w_minus.outputs();
  if (n == 0) {
    const Matrix empty(0, 0);
    return {Realization::identity(m), w_minus, empty, Matrix(m, 0), Matrix::Identity(m, m),
            Matrix(0, m), Matrix(0, m), w_minus.d()};
  }
  const Matrix& a = w_minus.a();
  const Matrix& b = w_minus.b();
  const Matrix& c = w_minus.c();
  const Matrix& d = w_minus.d();
  const Eigen::PartialPivLU<Matrix> d_lu(d);
  const Matrix gamma = a - b * d_lu.solve(c);
  const Matrix h1 = d_lu.solve(c);

  const Matrix x = solve_stein(gamma, h1.transpose() * h1, tol);
  Eigen::SelfAdjointEigenSolver<Matrix> x_eig(x);
  if (!(x_eig.eigenvalues().maxCoeff() < 0.0))
    fail(Errc::NotOuter, "not outer: Stein solution X is not negative definite");
  // X is negative definite; invert through -X.
  const Matrix x_inverse = -Matrix((-x).llt().solve(Matrix::Identity(n, n)));

  const Matrix u1 = sym_sqrt(Matrix::Identity(m, m) + h1 * x_inverse * h1.transpose(), tol);
  const Matrix u1_inv = u1.llt().solve(Matrix::Identity(m, m));
  const Matrix g1 = gamma * x_inverse * h1.transpose() * u1_inv;
  const Matrix b_plus = b * u1 + g1;
  const Matrix d_plus = d * u1;

  OuterToPlus out{Realization(gamma, g1, h1, u1), Realization(a, b_plus, c, d_plus), x, h1,
                  u1, g1, b_plus, d_plus};
  return out;
}

struct PlusToBarPlus {
  Realization t2;
  Realization w_bar_plus;
  Matrix y;
  Matrix h2;
  Matrix u2;
  Matrix g2;
};

/// Wbar_+ = W_+ T_2 with T_2 = (A^{-T}, G2, H2, U2).
inline PlusToBarPlus plus_to_bar_plus(const Realization& w_plus, const ToleranceConfig& tol = {}) {
  const Index n = w_plus.states();
  const Index m = w_plus.outputs();
  if (n == 0)
    return {Realization::identity(m), w_plus, Matrix(0, 0), Matrix(m, 0),
            Matrix::Identity(m, m), Matrix(0, m)};
  const Matrix& a = w_plus.a();
  const Matrix& b_plus = w_plus.b();
  if (numerical_rank(a, tol.rank_rel_tol) < n)
    fail(Errc::SingularStateMatrix, "state matrix of W_+ is singular");
  const Matrix a_inv_t = a.transpose().partialPivLu().inverse();
  const Matrix h2 = b_plus.transpose() * a_inv_t;

  // A Y A^T - Y = -B_+ B_+^T
  const Matrix y = solve_stein(a.transpose(), -b_plus * b_plus.transpose(), tol);
  Eigen::SelfAdjointEigenSolver<Matrix> y_eig(y);
  if (!(y_eig.eigenvalues().minCoeff() > 0.0))
    fail(Errc::NotPositiveDefiniteY, "Stein solution Y is not positive definite");
  const Matrix y_inv = y.llt().solve(Matrix::Identity(n, n));

  const Matrix u2 = sym_sqrt(Matrix::Identity(m, m) + h2 * y_inv * h2.transpose(), tol);
  const Matrix u2_inv = u2.llt().solve(Matrix::Identity(m, m));
  const Matrix g2 = a_inv_t * y_inv * h2.transpose() * u2_inv;
  const Realization t2(a_inv_t, g2, h2, u2);

  const Realization w_bar_plus = minimal(series(w_plus, t2), tol);
  if (w_bar_plus.states() != n)
    fail(Errc::DegreeViolation, "W_+ T_2 reduced to degree " +
                                    std::to_string(w_bar_plus.states()) + ", expected " +
                                    std::to_string(n));
  return {t2, w_bar_plus, y, h2, u2, g2};
}

struct ExtremalSet {
  Realization w_minus;
  Realization w_plus;
  Realization w_bar_plus;
  Realization t1;
  Realization t2;
  Matrix x, y, z;
  Matrix u1, u2, g1, g2, h1, h2;
  Matrix b_plus, d_plus;
};

inline ExtremalSet extremal_set(const Realization& w_minus, const ToleranceConfig& tol = {}) {
  OuterToPlus first = outer_to_plus(w_minus, tol);
  PlusToBarPlus second = plus_to_bar_plus(first.w_plus, tol);
  const Index n = w_minus.states();
  Matrix z(n, n);
  // Reachability Gramian of (A, B); equals Y + X^{-1} but avoids the
  // cancellation between those two large terms.
  if (n > 0)
    z = solve_stein(w_minus.a().transpose(), -w_minus.b() * w_minus.b().transpose(), tol);
  return {w_minus,   first.w_plus,  second.w_bar_plus, first.t1, second.t2,
          first.x,   second.y,      z,                 first.u1, second.u2,
          first.g1,  second.g2,     first.h1,          second.h2,
          first.b_plus, first.d_plus};
}

/// Residuals of the four Gramian identities satisfied by the conjugate phase
/// realization, each scaled by max(1, largest term).
struct GramianReport {
  double stein_p0 = 0.0;        // A P0 A^T - P0 - B B^T
  double cross = 0.0;           // A P0 C^T - B D^T
  double feedthrough = 0.0;     // I + C P0 C^T - D D^T
  double stein_p0_inv = 0.0;    // A^T P0^{-1} A - P0^{-1} - C^T C
  double inverse_check = 0.0;   // P0 P0^{-1} - I
  bool pass = true;

  double worst() const {
    return std::max({stein_p0, cross, feedthrough, stein_p0_inv, inverse_check});
  }
};

struct ConjugatePhase {
  /// Minimal realization with block-diagonal state matrix diag(Gamma, A^{-T}).
  Realization t;
  Matrix p0;
  /// Closed form [[X, -I], [-I, Z]]; never obtained by numerical inversion.
  Matrix p0_inv;
  Index n_gamma = 0;
  Index n_a = 0;
  Matrix gamma;
  Matrix a_inv_t;
  ExtremalSet extremal;
  GramianReport gramians;
};

inline GramianReport check_gramian_identities(const ConjugatePhase& cp,
                                              const ToleranceConfig& tol = {}) {
  GramianReport report;
  const Index n2 = cp.t.states();
  if (n2 == 0) return report;
  const Matrix& a = cp.t.a();
  const Matrix& b = cp.t.b();
  const Matrix& c = cp.t.c();
  const Matrix& d = cp.t.d();
  const Matrix& p0 = cp.p0;
  const Matrix& p0i = cp.p0_inv;
  const Index m = d.rows();
  auto scaled = [](const Matrix& residual, std::initializer_list<double> terms) {
    return max_abs(residual) / std::max(1.0, std::max(terms));
  };
  const Matrix apa = a * p0 * a.transpose();
  const Matrix bb = b * b.transpose();
  report.stein_p0 = scaled(apa - p0 - bb, {max_abs(apa), max_abs(p0), max_abs(bb)});
  const Matrix apc = a * p0 * c.transpose();
  const Matrix bd = b * d.transpose();
  report.cross = scaled(apc - bd, {max_abs(apc), max_abs(bd)});
  const Matrix cpc = c * p0 * c.transpose();
  const Matrix dd = d * d.transpose();
  report.feedthrough =
      scaled(Matrix::Identity(m, m) + cpc - dd, {1.0, max_abs(cpc), max_abs(dd)});
  const Matrix apia = a.transpose() * p0i * a;
  const Matrix cc = c.transpose() * c;
  report.stein_p0_inv = scaled(apia - p0i - cc, {max_abs(apia), max_abs(p0i), max_abs(cc)});
  report.inverse_check = max_abs(Matrix(p0 * p0i - Matrix::Identity(n2, n2)));
  report.pass = report.worst() <= tol.residual_tol;
  return report;
}

/// Assembles the minimal realization of T = T_1 T_2 after the change of basis
/// [[I, -X^{-1}], [0, I]], together with the structural Gramian P0 and its
/// closed-form inverse.
inline ConjugatePhase conjugate_phase(const Realization& w_minus, const ToleranceConfig& tol = {}) {
  ExtremalSet es = extremal_set(w_minus, tol);
  const Index n = w_minus.states();
  const Index m = w_minus.outputs();
  ConjugatePhase cp;
  cp.n_gamma = n;
  cp.n_a = n;
  if (n == 0) {
    cp.t = Realization::constant(es.u1 * es.u2);
    cp.p0 = Matrix(0, 0);
    cp.p0_inv = Matrix(0, 0);
    cp.gamma = Matrix(0, 0);
    cp.a_inv_t = Matrix(0, 0);
    cp.extremal = std::move(es);
    return cp;
  }
  const Matrix& b = w_minus.b();
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix gamma = es.t1.a();
  const Matrix a_inv_t = es.t2.a();

  Matrix ta = Matrix::Zero(2 * n, 2 * n);
  ta.topLeftCorner(n, n) = gamma;
  ta.bottomRightCorner(n, n) = a_inv_t;
  Matrix tc(m, 2 * n);
  tc.leftCols(n) = es.h1;
  tc.rightCols(n) = b.transpose() * a_inv_t;

  cp.p0_inv = Matrix(2 * n, 2 * n);
  cp.p0_inv.topLeftCorner(n, n) = es.x;
  cp.p0_inv.topRightCorner(n, n) = -eye;
  cp.p0_inv.bottomLeftCorner(n, n) = -eye;
  cp.p0_inv.bottomRightCorner(n, n) = es.z;
  cp.p0_inv = symmetrize(cp.p0_inv);
  // The closed form of P0 adds terms of size |X^{-1}| |Y^{-1}| |X^{-1}| that
  // cancel; the inverse of the moderate p0_inv is far more accurate.
  cp.p0 = symmetrize(cp.p0_inv.partialPivLu().inverse());

  // The input matrix is [G1 U2 + X^{-1} G2; G2], whose top block again
  // cancels large terms. It is recovered from A P0 C^T = B D^T instead.
  const Matrix td = es.u1 * es.u2;
  const Matrix tb = ta * cp.p0 * tc.transpose() * td.transpose().partialPivLu().inverse();
  cp.t = Realization(ta, tb, tc, td);

  cp.gamma = gamma;
  cp.a_inv_t = a_inv_t;
  cp.extremal = std::move(es);

  cp.gramians = check_gramian_identities(cp, tol);
  if (!cp.gramians.pass)
    fail(Errc::GramianIdentityViolation,
         "Gramian identity residual " + format_number(cp.gramians.worst()) +
             " exceeds tolerance");
  if (mcmillan_degree(cp.t, tol) != 2 * n)
    fail(Errc::DegreeViolation, "conjugate phase realization is not minimal");
  return cp;
}

/// Phi(z) = W(z) W(z)^H on the unit circle.
inline CMatrix spectrum_sample(const Realization& w, complex z, const ToleranceConfig& tol = {}) {
  if (std::abs(std::abs(z) - 1.0) > 1e-12)
    fail(Errc::InvalidArgument, "spectrum_sample expects a point on the unit circle");
  const CMatrix g = eval(w, z, tol);
  return g * g.adjoint();
}

/// Para-Hermitian density Phi(z) = W(z) W(1/z)^T at an arbitrary point.
inline CMatrix density_eval(const Realization& w, complex z, const ToleranceConfig& tol = {}) {
  if (z == 0.0) fail(Errc::EvaluationAtPole, "density evaluation at the origin");
  const TransferEvaluator e(w, tol);
  return e(z) * e(1.0 / z).transpose();
}

/// max over circle samples of |G G^H - I| (entrywise); infinite when the
/// realization is not square or has a pole on the circle.
inline double allpass_residual(const Realization& r, const ToleranceConfig& tol = {}) {
  if (!r.square()) return std::numeric_limits<double>::infinity();
  const TransferEvaluator e(r, tol);
  const Index m = r.outputs();
  double worst = 0.0;
  try {
    for (const complex& z : circle_points(tol.circle_samples)) {
      const CMatrix g = e(z);
      worst = std::max(worst, max_abs(CMatrix(g * g.adjoint() - CMatrix::Identity(m, m))));
    }
  } catch (const Error& err) {
    if (err.code() == Errc::EvaluationAtPole) return std::numeric_limits<double>::infinity();
    throw;
  }
  return worst;
}

inline bool is_all_pass(const Realization& r, double threshold, const ToleranceConfig& tol = {}) {
  return allpass_residual(r, tol) <= threshold;
}

/// max over circle samples of |Phi_w - Phi_ref| / max(1, |Phi_ref|), entrywise.
inline double spectrum_residual(const Realization& w, const Realization& reference,
                                const ToleranceConfig& tol = {}) {
  if (w.outputs() != reference.outputs()) return std::numeric_limits<double>::infinity();
  const TransferEvaluator ew(w, tol);
  const TransferEvaluator er(reference, tol);
  double worst = 0.0;
  try {
    for (const complex& z : circle_points(tol.circle_samples)) {
      const CMatrix gw = ew(z);
      const CMatrix gr = er(z);
      const CMatrix phi_r = gr * gr.adjoint();
      const CMatrix diff = gw * gw.adjoint() - phi_r;
      worst = std::max(worst, max_abs(diff) / std::max(1.0, max_abs(phi_r)));
    }
  } catch (const Error& err) {
    if (err.code() == Errc::EvaluationAtPole) return std::numeric_limits<double>::infinity();
    throw;
  }
  return worst;
}

}  // namespace specfact

#endif  // SPECFACT_SPECTRAL_HPP
