#ifndef SPECFACT_FACTORS_HPP
#define SPECFACT_FACTORS_HPP

// Minimal spectral factors W = W_- T_l, candidate verification, and
// extraction of the left divisor T_- = W_-^{-1} W_0 of a given factor.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specfact/divisors.hpp"
#include "specfact/errors.hpp"
#include "specfact/spectral.hpp"
#include "specfact/statespace.hpp"
#include "specfact/tolerance.hpp"

namespace specfact {

struct FactorReport {
  Index degree = 0;
  Index expected_degree = 0;
  double spectrum_residual = 0.0;
  std::optional<double> allpass_residual;
  PoleZeroReport poles_zeros;
  bool pass = false;
  std::vector<std::string> reasons;
};

struct Factor {
  Realization w;
  FactorReport report;
};

/// Compares `w` against the outer factor: same spectrum on the unit circle
/// and McMillan degree equal to that of `w_minus`. Never throws on a bad
/// candidate; the verdict carries the reasons.
inline FactorReport verify_factor(const Realization& w, const Realization& w_minus,
                                  const ToleranceConfig& tol = {}) {
  FactorReport report;
  report.expected_degree = mcmillan_degree(w_minus, tol);
  if (w.outputs() != w_minus.outputs()) {
    report.reasons.push_back("output dimension " + std::to_string(w.outputs()) + " differs from " +
                             std::to_string(w_minus.outputs()));
    report.spectrum_residual = std::numeric_limits<double>::infinity();
    return report;
  }
  report.poles_zeros = poles_zeros(w, tol, false);
  report.degree = report.poles_zeros.degree;
  report.spectrum_residual = spectrum_residual(w, w_minus, tol);
  if (report.degree != report.expected_degree)
    report.reasons.push_back("McMillan degree " + std::to_string(report.degree) +
                             ", expected " + std::to_string(report.expected_degree));
  if (!(report.spectrum_residual <= tol.residual_tol))
    report.reasons.push_back("spectrum residual " + format_number(report.spectrum_residual) +
                             " exceeds " + format_number(tol.residual_tol));
  report.pass = report.reasons.empty();
  return report;
}

/// W = minimal(W_- T_l). Throws when the product is not a minimal spectral
/// factor, which for a valid divisor signals numerical breakdown.
inline Factor minimal_factor(const Realization& w_minus, const AllPassDivisor& div,
                             const ToleranceConfig& tol = {}) {
  Factor f{minimal(series(w_minus, div.t_ell), tol), {}};
  f.report = verify_factor(f.w, w_minus, tol);
  f.report.allpass_residual = div.allpass_residual;
  if (f.report.degree != f.report.expected_degree)
    fail(Errc::DegreeViolation, "factor has McMillan degree " + std::to_string(f.report.degree) +
                                    ", expected " + std::to_string(f.report.expected_degree));
  if (!(f.report.spectrum_residual <= tol.residual_tol))
    fail(Errc::SpectrumMismatch,
         "factor spectrum residual " + format_number(f.report.spectrum_residual));
  return f;
}

struct ExtractedDivisor {
  Realization t_minus;
  /// Degree of W_0^{-1} Wbar_+, the complementary divisor.
  Index complement_degree = 0;
  FactorReport report;
};

/// T_- = minimal(W_-^{-1} W_0), certified as a left all-pass divisor of the
/// conjugate phase function through degree additivity with W_0^{-1} Wbar_+.
inline ExtractedDivisor extract_left_divisor(const Realization& w_minus, const Realization& w0,
                                             const ToleranceConfig& tol = {}) {
  if (!w0.square() || w0.outputs() != w_minus.outputs())
    fail(Errc::DimensionMismatch, "candidate must be square with the dimensions of W_-");
  require_invertible_feedthrough(w0, tol);
  const ExtremalSet es = extremal_set(w_minus, tol);
  const Index n = w_minus.states();

  ExtractedDivisor out;
  out.t_minus = minimal(series(inverse(w_minus, tol), w0), tol);
  const double residual = allpass_residual(out.t_minus, tol);
  out.report.allpass_residual = residual;
  out.report.spectrum_residual = spectrum_residual(w0, w_minus, tol);
  out.report.degree = out.t_minus.states();
  out.report.poles_zeros = poles_zeros(out.t_minus, tol, false);
  if (!(residual <= kAllPassTol))
    fail(Errc::NotAFactor, "W_-^{-1} W_0 is not all-pass (residual " + format_number(residual) +
                               ")");
  out.complement_degree = mcmillan_degree(series(inverse(w0, tol), es.w_bar_plus), tol);
  out.report.expected_degree = 2 * n - out.complement_degree;
  if (out.report.degree + out.complement_degree != 2 * n)
    fail(Errc::NotMinimalFactor, "divisor degrees " + std::to_string(out.report.degree) + " + " +
                                     std::to_string(out.complement_degree) + " differ from " +
                                     std::to_string(2 * n));
  out.report.pass = true;
  return out;
}

struct FamilyMember {
  SubspaceSpec spec;
  AllPassDivisor divisor;
  Factor factor;
};

inline std::vector<FamilyMember> factor_family(const ConjugatePhase& cp,
                                               const std::vector<SubspaceSpec>& specs,
                                               const ToleranceConfig& tol = {}) {
  std::vector<FamilyMember> out;
  out.reserve(specs.size());
  const Realization& w_minus = cp.extremal.w_minus;
  for (const SubspaceSpec& spec : specs) {
    AllPassDivisor div = divisor_from_spec(cp, spec, tol);
    Factor f = minimal_factor(w_minus, div, tol);
    out.push_back({spec, std::move(div), std::move(f)});
  }
  return out;
}

inline std::vector<FamilyMember> factor_family(const Realization& w_minus,
                                               const std::vector<SubspaceSpec>& specs,
                                               const ToleranceConfig& tol = {}) {
  if (specs.empty()) return {};
  return factor_family(conjugate_phase(w_minus, tol), specs, tol);
}

/// Runs the factor family on the Moebius image moebius(W_-, a), where the
/// subspace specs refer to the transformed conjugate phase function, and maps
/// every factor back with -a. Reports are recomputed against the original W_-.
inline std::vector<FamilyMember> factor_family_moebius(const Realization& w_minus,
                                                       const std::vector<SubspaceSpec>& specs,
                                                       double a,
                                                       const ToleranceConfig& tol = {}) {
  const Realization mapped = moebius(w_minus, a, tol);
  std::vector<FamilyMember> members = factor_family(mapped, specs, tol);
  for (std::size_t k = 0; k < members.size(); ++k) {
    FamilyMember& m = members[k];
    try {
      m.divisor.t_ell = moebius(m.divisor.t_ell, -a, tol);
      m.factor.w = moebius(m.factor.w, -a, tol);
    } catch (const Error& e) {
      if (e.code() != Errc::ParameterHitsSpectrum) throw;
      // A pole of the mapped factor at -1/a is a pole at infinity of the
      // original one, which has no proper realization.
      fail(Errc::ParameterHitsSpectrum,
           "factor " + std::to_string(k) + " has a pole at infinity in the original variable");
    }
    m.factor.report = verify_factor(m.factor.w, w_minus, tol);
    m.factor.report.allpass_residual = allpass_residual(m.divisor.t_ell, tol);
  }
  return members;
}

/// Moebius parameter for an outer factor: keeps 1/a off the poles and zeros
/// of the spectral density (those of W_- and their reciprocals).
inline double moebius_parameter_for(const Realization& w_minus, const ToleranceConfig& tol = {}) {
  std::vector<complex> poles;
  std::vector<complex> zeros;
  const auto add_with_reciprocal = [](std::vector<complex>& out, const Eigen::VectorXcd& v) {
    for (Index i = 0; i < v.size(); ++i) {
      out.push_back(v(i));
      if (std::abs(v(i)) > 0.0) out.push_back(1.0 / v(i));
    }
  };
  add_with_reciprocal(poles, eigenvalues(w_minus.a()));
  if (w_minus.square() && w_minus.states() > 0) {
    try {
      add_with_reciprocal(zeros, eigenvalues(zero_matrix(w_minus, tol)));
    } catch (const Error&) {
    }
  }
  return choose_moebius_parameter(poles, zeros, {}, tol);
}

}  // namespace specfact

#endif  // SPECFACT_FACTORS_HPP
