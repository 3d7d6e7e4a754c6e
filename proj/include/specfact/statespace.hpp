#ifndef SPECFACT_STATESPACE_HPP
#define SPECFACT_STATESPACE_HPP

// Rational matrices carried as state-space realizations
//   G(z) = C (zI - A)^{-1} B + D.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specfact/errors.hpp"
#include "specfact/matnum.hpp"
#include "specfact/tolerance.hpp"

namespace specfact {

class Realization {
 public:
  Realization() = default;

  Realization(Matrix a, Matrix b, Matrix c, Matrix d)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
    const Index n = a_.rows();
    if (a_.cols() != n || b_.rows() != n || c_.cols() != n || d_.rows() != c_.rows() ||
        d_.cols() != b_.cols())
      fail(Errc::DimensionMismatch,
           "realization blocks are inconsistent: A " + shape(a_) + ", B " + shape(b_) +
               ", C " + shape(c_) + ", D " + shape(d_));
    if (!all_finite(a_) || !all_finite(b_) || !all_finite(c_) || !all_finite(d_))
      fail(Errc::NonFiniteEntry, "realization contains NaN or Inf");
  }

  /// Static gain: a realization with no states.
  static Realization constant(const Matrix& d) {
    return Realization(Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d);
  }

  static Realization identity(Index m) { return constant(Matrix::Identity(m, m)); }

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& c() const { return c_; }
  const Matrix& d() const { return d_; }

  Index states() const { return a_.rows(); }
  Index inputs() const { return d_.cols(); }
  Index outputs() const { return d_.rows(); }
  bool square() const { return inputs() == outputs(); }

 private:
  static std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  }

  Matrix a_;
  Matrix b_;
  Matrix c_;
  Matrix d_;
};

inline Eigen::VectorXcd eigenvalues(const Matrix& m) {
  if (m.rows() == 0) return Eigen::VectorXcd(0);
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues();
}

inline double spectral_radius(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  return eigenvalues(m).cwiseAbs().maxCoeff();
}

/// Evaluates a realization at many points without recomputing its spectrum.
class TransferEvaluator {
 public:
  explicit TransferEvaluator(const Realization& r, const ToleranceConfig& tol = {})
      : r_(r), poles_(eigenvalues(r.a())), norm_a_(r.a().norm()), tol_(tol) {
    ac_ = r.a().cast<complex>();
    bc_ = r.b().cast<complex>();
    cc_ = r.c().cast<complex>();
    dc_ = r.d().cast<complex>();
  }

  /// Smallest distance from z to the spectrum of A.
  double pole_distance(complex z) const {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < poles_.size(); ++i) best = std::min(best, std::abs(z - poles_(i)));
    return best;
  }

  bool near_pole(complex z) const {
    return pole_distance(z) <= tol_.rank_rel_tol * (1.0 + std::abs(z)) * std::max(1.0, norm_a_);
  }

  CMatrix operator()(complex z) const {
    if (r_.states() == 0) return dc_;
    if (near_pole(z))
      fail(Errc::EvaluationAtPole, "evaluation point coincides with a pole");
    const Index n = r_.states();
    const CMatrix zi_a = z * CMatrix::Identity(n, n) - ac_;
    return cc_ * zi_a.partialPivLu().solve(bc_) + dc_;
  }

  const Eigen::VectorXcd& poles() const { return poles_; }

 private:
  Realization r_;
  Eigen::VectorXcd poles_;
  double norm_a_;
  ToleranceConfig tol_;
  CMatrix ac_, bc_, cc_, dc_;
};

inline CMatrix eval(const Realization& r, complex z, const ToleranceConfig& tol = {}) {
  return TransferEvaluator(r, tol)(z);
}

/// Cascade with eval(series(r1, r2), z) = eval(r1, z) * eval(r2, z).
inline Realization series(const Realization& r1, const Realization& r2) {
  if (r1.inputs() != r2.outputs())
    fail(Errc::DimensionMismatch, "series: left factor has " + std::to_string(r1.inputs()) +
                                      " inputs, right factor " + std::to_string(r2.outputs()) +
                                      " outputs");
  const Index n1 = r1.states();
  const Index n2 = r2.states();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = r1.a();
  a.topRightCorner(n1, n2) = r1.b() * r2.c();
  a.bottomRightCorner(n2, n2) = r2.a();
  Matrix b(n1 + n2, r2.inputs());
  b.topRows(n1) = r1.b() * r2.d();
  b.bottomRows(n2) = r2.b();
  Matrix c(r1.outputs(), n1 + n2);
  c.leftCols(n1) = r1.c();
  c.rightCols(n2) = r1.d() * r2.c();
  return Realization(std::move(a), std::move(b), std::move(c), r1.d() * r2.d());
}

inline void require_invertible_feedthrough(const Realization& r, const ToleranceConfig& tol) {
  if (!r.square()) fail(Errc::SingularFeedthrough, "feedthrough is not square");
  if (r.outputs() == 0) return;
  Eigen::JacobiSVD<Matrix> svd(r.d());
  const Vector& s = svd.singularValues();
  if (!(s(s.size() - 1) > tol.rank_rel_tol * s(0)))
    fail(Errc::SingularFeedthrough, "feedthrough matrix D is singular");
}

/// Zero matrix A - B D^{-1} C of a square realization with invertible D.
inline Matrix zero_matrix(const Realization& r, const ToleranceConfig& tol = {}) {
  require_invertible_feedthrough(r, tol);
  return r.a() - r.b() * r.d().partialPivLu().solve(r.c());
}

inline Realization inverse(const Realization& r, const ToleranceConfig& tol = {}) {
  require_invertible_feedthrough(r, tol);
  const Eigen::PartialPivLU<Matrix> lu(r.d());
  const Matrix d_inv = lu.inverse();
  const Matrix d_inv_c = d_inv * r.c();
  return Realization(r.a() - r.b() * d_inv_c, r.b() * d_inv, -d_inv_c, d_inv);
}

/// Para-conjugate G^*(z) = G(1/z)^T. Requires an invertible state matrix.
inline Realization adjoint(const Realization& r, const ToleranceConfig& tol = {}) {
  const Index n = r.states();
  if (n == 0) return Realization::constant(r.d().transpose());
  Eigen::JacobiSVD<Matrix> svd(r.a());
  const Vector& s = svd.singularValues();
  if (!(s(n - 1) > tol.rank_rel_tol * s(0)))
    fail(Errc::SingularStateMatrix, "adjoint needs an invertible state matrix; apply moebius first");
  const Matrix f = r.a().transpose().partialPivLu().inverse();
  const Matrix f_ct = f * r.c().transpose();
  return Realization(f, f_ct, -r.b().transpose() * f,
                     r.d().transpose() - r.b().transpose() * f_ct);
}

/// Change of variable G(lambda) = F(z(lambda)) with z(lambda) = (lambda + a) / (1 + a lambda),
/// the inverse of lambda(z) = (z - a) / (1 - a z). Poles p move to lambda(p).
inline Realization moebius(const Realization& r, double a, const ToleranceConfig& tol = {}) {
  if (!(std::abs(a) < 1.0))
    fail(Errc::InvalidArgument, "moebius parameter must satisfy |a| < 1");
  const Index n = r.states();
  if (n == 0 || a == 0.0) return r;
  const Matrix shifted = Matrix::Identity(n, n) - a * r.a();
  Eigen::JacobiSVD<Matrix> svd(shifted);
  const Vector& s = svd.singularValues();
  if (!(s(n - 1) > tol.rank_rel_tol * s(0)))
    fail(Errc::ParameterHitsSpectrum, "1/a is an eigenvalue of the state matrix");
  const Eigen::PartialPivLU<Matrix> lu(shifted);
  const Matrix inv = lu.inverse();
  const double root = std::sqrt(1.0 - a * a);
  const Matrix a_new = (r.a() - a * Matrix::Identity(n, n)) * inv;
  const Matrix inv_b = inv * r.b();
  return Realization(a_new, root * inv_b, root * r.c() * inv, r.d() + a * r.c() * inv_b);
}

/// lambda(z) = (z - a) / (1 - a z), maps the unit circle onto itself.
inline complex moebius_map(complex z, double a) { return (z - a) / (1.0 - a * z); }

/// Picks a real |a| <= 0.9 keeping 1/a away from the listed poles and zeros and
/// -1/a away from the listed state-matrix eigenvalues. Scans the grid
/// 0.1, -0.1, 0.2, -0.2, ..., then seeded random draws.
inline double choose_moebius_parameter(const std::vector<complex>& poles,
                                       const std::vector<complex>& zeros,
                                       const std::vector<complex>& state_eigenvalues = {},
                                       const ToleranceConfig& tol = {}) {
  auto clear = [&](double a) {
    auto far = [&](complex target, const std::vector<complex>& points) {
      for (const complex& p : points) {
        if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) continue;
        if (std::abs(target - p) < 10.0 * tol.rank_rel_tol * (1.0 + std::abs(p))) return false;
      }
      return true;
    };
    const complex inv(1.0 / a, 0.0);
    return far(inv, poles) && far(inv, zeros) && far(-inv, state_eigenvalues);
  };
  for (int k = 1; k <= 9; ++k) {
    for (double sign : {1.0, -1.0}) {
      const double a = sign * 0.1 * k;
      if (clear(a)) return a;
    }
  }
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> draw(-0.9, 0.9);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double a = draw(rng);
    if (a != 0.0 && clear(a)) return a;
  }
  fail(Errc::NoParameterFound, "no admissible Moebius parameter after 1000 draws");
}

namespace detail {

// Radius of a sampling circle that passes between the eigenvalue moduli:
// points must sit at distances comparable to the eigenvalues to tell the
// modes apart, yet not so close that one mode swamps the others. Candidates
// are the unit circle, the log-midpoints of consecutive moduli and circles
// just outside the range; the log-distance to the nearest modulus, capped at
// kMaxLogGap, decides, with earlier candidates winning ties.
inline double sampling_radius(const Eigen::VectorXcd& eig) {
  constexpr double kMaxLogGap = 0.35;
  std::vector<double> logs;
  double largest = 0.0;
  for (Index i = 0; i < eig.size(); ++i) largest = std::max(largest, std::abs(eig(i)));
  for (Index i = 0; i < eig.size(); ++i)
    if (std::abs(eig(i)) > 1e-8 * largest) logs.push_back(std::log(std::abs(eig(i))));
  if (logs.empty()) return 1.0;
  std::sort(logs.begin(), logs.end());
  std::vector<double> candidates = {0.0};
  for (std::size_t i = 0; i + 1 < logs.size(); ++i)
    candidates.push_back(0.5 * (logs[i] + logs[i + 1]));
  candidates.push_back(logs.front() - kMaxLogGap);
  candidates.push_back(logs.back() + kMaxLogGap);
  double best = 0.0;
  double best_score = -1.0;
  for (double c : candidates) {
    double gap = kMaxLogGap;
    for (double l : logs) gap = std::min(gap, std::abs(l - c));
    if (gap > best_score + 1e-9) {
      best_score = gap;
      best = c;
    }
  }
  return std::exp(best);
}

// Orthonormal basis of the smallest A-invariant subspace containing im(B).
// That subspace is spanned by the resolvent images (zI - A)^{-1} B at any N >= n
// points off the spectrum (partial fractions), so it is sampled on a circle
// chosen away from the eigenvalue moduli. Unlike a Krylov staircase this does
// not raise rounding noise to the power of the step count, which matters when
// the spectrum straddles the unit circle as in all-pass cancellations.
inline Matrix reachable_basis(const Matrix& A, const Matrix& B, double rank_rel_tol,
                              double scale) {
  const Index n = A.rows();
  if (n == 0 || B.cols() == 0) return Matrix(n, 0);
  // A B at rounding level relative to the whole realization reaches nothing.
  const double norm_b = spectral_norm(B);
  if (!(norm_b > rank_rel_tol * std::max(scale, 1e-300))) return Matrix(n, 0);

  const double radius = sampling_radius(eigenvalues(A));
  const Index count = std::max<Index>(2 * n + 2, 16);
  const Index m = B.cols();
  Matrix samples(n, 2 * count * m);
  const CMatrix a = A.cast<complex>();
  const CMatrix b = B.cast<complex>();
  for (Index k = 0; k < count; ++k) {
    // The offset keeps the points off the real axis, where eigenvalues of
    // real matrices cluster.
    const double angle = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.3183) /
                         static_cast<double>(count);
    const complex z = std::polar(radius, angle);
    const CMatrix shifted = z * CMatrix::Identity(n, n) - a;
    const Eigen::PartialPivLU<CMatrix> lu(shifted);
    const CMatrix block = lu.solve(b);
    samples.middleCols(2 * k * m, m) = block.real();
    samples.middleCols((2 * k + 1) * m, m) = block.imag();
  }
  Eigen::JacobiSVD<Matrix> svd(samples, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double threshold = rank_rel_tol * sv(0);
  Index r = 0;
  while (r < sv.size() && sv(r) > threshold) ++r;
  if (r == 0) return Matrix(n, 0);
  return canonical_basis(svd.matrixU().leftCols(r), rank_rel_tol);
}

// Restrict (A, B, C) to the subspace spanned by the orthonormal columns of Q.
inline Realization restrict_to(const Realization& r, const Matrix& q) {
  return Realization(q.transpose() * r.a() * q, q.transpose() * r.b(), r.c() * q, r.d());
}

}  // namespace detail

/// Minimal realization by two-sided orthogonal compression: remove the
/// unreachable part, then the unobservable part. Already-minimal realizations
/// are returned unchanged, and kept subspaces are expressed in a basis that
/// depends only on the subspace.
inline Realization minimal(const Realization& r, const ToleranceConfig& tol = {}) {
  const Index n = r.states();
  if (n == 0) return r;
  Realization out = r;
  const double scale = std::max({spectral_norm(r.a()), spectral_norm(r.b()),
                                 spectral_norm(r.c()), spectral_norm(r.d())});
  const Matrix reach = detail::reachable_basis(out.a(), out.b(), tol.rank_rel_tol, scale);
  if (reach.cols() < n) {
    if (reach.cols() == 0) return Realization::constant(r.d());
    out = detail::restrict_to(out, canonical_basis(reach, tol.rank_rel_tol));
  }
  const Index m = out.states();
  const Matrix obs =
      detail::reachable_basis(out.a().transpose(), out.c().transpose(), tol.rank_rel_tol,
                              scale);
  if (obs.cols() < m) {
    if (obs.cols() == 0) return Realization::constant(r.d());
    out = detail::restrict_to(out, canonical_basis(obs, tol.rank_rel_tol));
  }
  return out;
}

inline Index mcmillan_degree(const Realization& r, const ToleranceConfig& tol = {}) {
  return minimal(r, tol).states();
}

struct SpectralPoint {
  complex value;
  int multiplicity = 1;
};

struct PoleZeroReport {
  std::vector<SpectralPoint> poles;
  /// Empty when the feedthrough is not square invertible.
  std::vector<SpectralPoint> zeros;
  bool zeros_available = false;
  Index degree = 0;
};

/// Groups eigenvalues into distinct points with multiplicities, sorted by
/// real part then imaginary part.
inline std::vector<SpectralPoint> group_points(const Eigen::VectorXcd& values,
                                               double cluster_tol = 1e-6) {
  std::vector<complex> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end(), [](const complex& a, const complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  std::vector<SpectralPoint> out;
  std::vector<bool> used(sorted.size(), false);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (used[i]) continue;
    SpectralPoint p{sorted[i], 0};
    complex sum = 0.0;
    for (std::size_t j = i; j < sorted.size(); ++j) {
      if (!used[j] && std::abs(sorted[j] - sorted[i]) <= cluster_tol * std::max(1.0, std::abs(sorted[i]))) {
        used[j] = true;
        sum += sorted[j];
        ++p.multiplicity;
      }
    }
    p.value = sum / static_cast<double>(p.multiplicity);
    out.push_back(p);
  }
  return out;
}

/// Poles and zeros of the minimal realization. Throws SingularFeedthrough
/// when zeros are requested for a non-invertible feedthrough.
inline PoleZeroReport poles_zeros(const Realization& r, const ToleranceConfig& tol = {},
                                  bool require_zeros = true) {
  const Realization m = minimal(r, tol);
  PoleZeroReport report;
  report.degree = m.states();
  report.poles = group_points(eigenvalues(m.a()));
  try {
    report.zeros = group_points(eigenvalues(zero_matrix(m, tol)));
    report.zeros_available = true;
  } catch (const Error& e) {
    if (require_zeros || e.code() != Errc::SingularFeedthrough) throw;
  }
  return report;
}

/// Flattens a grouped point list back into a multiset.
inline std::vector<complex> expand(const std::vector<SpectralPoint>& points) {
  std::vector<complex> out;
  for (const auto& p : points)
    for (int k = 0; k < p.multiplicity; ++k) out.push_back(p.value);
  return out;
}

/// True iff the two multisets match under a greedy nearest pairing.
inline bool multisets_match(std::vector<complex> lhs, std::vector<complex> rhs, double tol) {
  if (lhs.size() != rhs.size()) return false;
  for (const complex& x : lhs) {
    auto best = rhs.end();
    double best_dist = std::numeric_limits<double>::infinity();
    for (auto it = rhs.begin(); it != rhs.end(); ++it) {
      const double d = std::abs(*it - x);
      if (d < best_dist) {
        best_dist = d;
        best = it;
      }
    }
    if (best == rhs.end() || best_dist > tol * std::max(1.0, std::abs(x))) return false;
    rhs.erase(best);
  }
  return true;
}

/// Deterministic comparison points: `count` roots of unity at radius 1 and 1.37.
inline std::vector<complex> comparison_points(std::size_t count) {
  std::vector<complex> pts;
  pts.reserve(2 * count);
  for (double radius : {1.0, 1.37})
    for (std::size_t k = 0; k < count; ++k)
      pts.push_back(std::polar(radius, 2.0 * std::numbers::pi * static_cast<double>(k) /
                                           static_cast<double>(count)));
  return pts;
}

inline std::vector<complex> circle_points(std::size_t count) {
  std::vector<complex> pts;
  pts.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    pts.push_back(std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) /
                                      static_cast<double>(count)));
  return pts;
}

/// Largest entrywise deviation between two transfer functions over the
/// comparison points that are safely away from both pole sets, scaled by
/// max(1, |G1(z)|).
inline double transfer_distance(const Realization& r1, const Realization& r2,
                                const ToleranceConfig& tol = {}) {
  if (r1.inputs() != r2.inputs() || r1.outputs() != r2.outputs())
    return std::numeric_limits<double>::infinity();
  const TransferEvaluator e1(r1, tol);
  const TransferEvaluator e2(r2, tol);
  double worst = 0.0;
  for (const complex& z : comparison_points(tol.circle_samples)) {
    if (e1.pole_distance(z) < 1e-6 || e2.pole_distance(z) < 1e-6) continue;
    const CMatrix g1 = e1(z);
    worst = std::max(worst, max_abs(CMatrix(g1 - e2(z))) / std::max(1.0, max_abs(g1)));
  }
  return worst;
}

inline bool eval_equal(const Realization& r1, const Realization& r2, double residual,
                       const ToleranceConfig& tol = {}) {
  return transfer_distance(r1, r2, tol) <= residual;
}

/// Measures how far r2 is from r1 * O for a constant orthogonal O: the
/// spread of r1(z)^{-1} r2(z) across the comparison points plus the
/// departure of its mean from a real orthogonal matrix.
inline double orthogonal_factor_distance(const Realization& r1, const Realization& r2,
                                         const ToleranceConfig& tol = {}) {
  if (!r1.square() || r1.inputs() != r2.inputs() || r1.outputs() != r2.outputs())
    return std::numeric_limits<double>::infinity();
  const TransferEvaluator e1(r1, tol);
  const TransferEvaluator e2(r2, tol);
  std::vector<CMatrix> ratios;
  for (const complex& z : comparison_points(tol.circle_samples)) {
    if (e1.pole_distance(z) < 1e-6 || e2.pole_distance(z) < 1e-6) continue;
    const CMatrix g1 = e1(z);
    Eigen::JacobiSVD<CMatrix> svd(g1);
    const auto& s = svd.singularValues();
    if (s.size() > 0 && s(s.size() - 1) < 1e-6 * s(0)) continue;
    ratios.push_back(g1.partialPivLu().solve(e2(z)));
  }
  if (ratios.empty()) return std::numeric_limits<double>::infinity();
  const CMatrix& ref = ratios.front();
  double spread = 0.0;
  for (const auto& o : ratios) spread = std::max(spread, max_abs(CMatrix(o - ref)));
  const Index m = ref.rows();
  const double imag = max_abs(Matrix(ref.imag()));
  const Matrix o = ref.real();
  const double orth = max_abs(Matrix(o.transpose() * o - Matrix::Identity(m, m)));
  return std::max({spread, imag, orth});
}

/// Constant real orthogonal O with r2 = r1 O, if the two agree that way.
inline std::optional<Matrix> orthogonal_right_factor(const Realization& r1,
                                                     const Realization& r2, double residual,
                                                     const ToleranceConfig& tol = {}) {
  if (orthogonal_factor_distance(r1, r2, tol) > residual) return std::nullopt;
  const TransferEvaluator e1(r1, tol);
  const TransferEvaluator e2(r2, tol);
  for (const complex& z : comparison_points(tol.circle_samples)) {
    if (e1.pole_distance(z) < 1e-6 || e2.pole_distance(z) < 1e-6) continue;
    return Matrix(e1(z).partialPivLu().solve(e2(z)).real());
  }
  return std::nullopt;
}

}  // namespace specfact

#endif  // SPECFACT_STATESPACE_HPP
