#ifndef SPECFACT_EXAMPLE_MODEL_HPP
#define SPECFACT_EXAMPLE_MODEL_HPP

// Two-channel worked example: the outer factor
//   W_-(z) = diag((z - 1/4)/(z - 1/2), (z - 1/3)/(z - 1/2))
// and the reference matrices of its conjugate phase function and of the
// unstable minimum-phase factor Wbar_-.

#include <cmath>

#include "specfact/matnum.hpp"
#include "specfact/statespace.hpp"

namespace specfact::example {

inline Realization outer_factor() {
  Matrix c(2, 2);
  c << 0.25, 0.0, 0.0, 1.0 / 6.0;
  return Realization(0.5 * Matrix::Identity(2, 2), Matrix::Identity(2, 2), c,
                     Matrix::Identity(2, 2));
}

struct PhaseReference {
  Matrix a, b, c, d;
};

inline PhaseReference conjugate_phase_reference() {
  PhaseReference ref;
  ref.a = Matrix::Zero(4, 4);
  ref.a.diagonal() << 0.25, 1.0 / 3.0, 2.0, 2.0;
  ref.b = Matrix::Zero(4, 2);
  ref.b(0, 0) = -15.0 / 14.0;
  ref.b(1, 1) = -16.0 / 15.0;
  ref.b(2, 0) = -3.0 / 7.0;
  ref.b(3, 1) = -3.0 / 10.0;
  ref.c = Matrix::Zero(2, 4);
  ref.c(0, 0) = 0.25;
  ref.c(0, 2) = 2.0;
  ref.c(1, 1) = 1.0 / 6.0;
  ref.c(1, 3) = 2.0;
  ref.d = Matrix::Zero(2, 2);
  ref.d.diagonal() << 0.5, 2.0 / 3.0;
  return ref;
}

/// Closed-form inverse Gramian [[X, -I], [-I, Z]]. The top-left block is
/// the Stein solution X = diag(-1/15, -1/32), which is negative definite.
inline Matrix p0_inverse_reference() {
  Matrix p = Matrix::Zero(4, 4);
  p.diagonal() << -1.0 / 15.0, -1.0 / 32.0, 4.0 / 3.0, 4.0 / 3.0;
  p(0, 2) = p(2, 0) = -1.0;
  p(1, 3) = p(3, 1) = -1.0;
  return p;
}

/// Unstable minimum-phase factor Wbar_- = W_- Tbar_1.
inline Realization bar_minus_factor() {
  Matrix b(2, 2);
  b << -0.8, 1.6, -1.6, -0.8;
  Matrix c(2, 2);
  c << -7.0 / 8.0, -7.0 / 4.0, 5.0 / 3.0, -5.0 / 6.0;
  return Realization(2.0 * Matrix::Identity(2, 2), b, c, 2.0 * Matrix::Identity(2, 2));
}

/// Divisor generated by the whole A^{-T} block: (2I, 3/2 I, 2I, 2I).
inline Realization bar_divisor() {
  const Matrix eye = Matrix::Identity(2, 2);
  return Realization(2.0 * eye, 1.5 * eye, 2.0 * eye, 2.0 * eye);
}

/// Feedthrough of the divisor generated by the line span(cos t, sin t) in
/// the A^{-T} block.
inline Matrix theta_divisor_feedthrough(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix d(2, 2);
  d << 1.0 + c * c, c * s, c * s, 1.0 + s * s;
  return d;
}

/// Scalar form of that divisor, (2, [cos t, sin t], 3 [cos t; sin t], D_t).
inline Realization theta_divisor(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Matrix a(1, 1);
  a << 2.0;
  Matrix b(1, 2);
  b << c, s;
  Matrix cm(2, 1);
  cm << 3.0 * c, 3.0 * s;
  return Realization(a, b, cm, theta_divisor_feedthrough(theta));
}

/// (2/3 z^2 - 20/9 z + 2/3) / (z^2 - 5/2 z + 1): second diagonal entry of
/// the spectral density.
inline complex density_22(complex z) {
  return (2.0 / 3.0 * z * z - 20.0 / 9.0 * z + 2.0 / 3.0) / (z * z - 2.5 * z + 1.0);
}

/// (1/2 z^2 - 17/8 z + 1/2) / (z^2 - 5/2 z + 1), recomputed from the model.
inline complex density_11(complex z) {
  return (0.5 * z * z - 17.0 / 8.0 * z + 0.5) / (z * z - 2.5 * z + 1.0);
}

}  // namespace specfact::example

#endif  // SPECFACT_EXAMPLE_MODEL_HPP
