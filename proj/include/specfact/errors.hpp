#ifndef SPECFACT_ERRORS_HPP
#define SPECFACT_ERRORS_HPP

#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace specfact {

/// Failure categories raised by the library. Mathematical failures of a
/// candidate factor are reported through FactorReport, not through these.
enum class Errc {
  InvalidArgument,
  DimensionMismatch,
  NonFiniteEntry,
  SingularSteinOperator,
  NotPositiveDefinite,
  RankDeficientBasis,
  AmbiguousEigenspace,
  ComplexPairSplit,
  EvaluationAtPole,
  SingularFeedthrough,
  SingularStateMatrix,
  ParameterHitsSpectrum,
  NoParameterFound,
  NotOuter,
  NotPositiveDefiniteY,
  GramianIdentityViolation,
  InvalidSubspace,
  CompressionNotPD,
  NotInvariant,
  DegreeAdditivityViolation,
  NotAllPass,
  DegreeViolation,
  SpectrumMismatch,
  NotAFactor,
  NotMinimalFactor,
  ParseError,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteEntry: return "NonFiniteEntry";
    case Errc::SingularSteinOperator: return "SingularSteinOperator";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::RankDeficientBasis: return "RankDeficientBasis";
    case Errc::AmbiguousEigenspace: return "AmbiguousEigenspace";
    case Errc::ComplexPairSplit: return "ComplexPairSplit";
    case Errc::EvaluationAtPole: return "EvaluationAtPole";
    case Errc::SingularFeedthrough: return "SingularFeedthrough";
    case Errc::SingularStateMatrix: return "SingularStateMatrix";
    case Errc::ParameterHitsSpectrum: return "ParameterHitsSpectrum";
    case Errc::NoParameterFound: return "NoParameterFound";
    case Errc::NotOuter: return "NotOuter";
    case Errc::NotPositiveDefiniteY: return "NotPositiveDefiniteY";
    case Errc::GramianIdentityViolation: return "GramianIdentityViolation";
    case Errc::InvalidSubspace: return "InvalidSubspace";
    case Errc::CompressionNotPD: return "CompressionNotPD";
    case Errc::NotInvariant: return "NotInvariant";
    case Errc::DegreeAdditivityViolation: return "DegreeAdditivityViolation";
    case Errc::NotAllPass: return "NotAllPass";
    case Errc::DegreeViolation: return "DegreeViolation";
    case Errc::SpectrumMismatch: return "SpectrumMismatch";
    case Errc::NotAFactor: return "NotAFactor";
    case Errc::NotMinimalFactor: return "NotMinimalFactor";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Short scientific rendering for messages (std::to_string prints 0.000000
/// for residuals of 1e-7).
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace specfact

#endif  // SPECFACT_ERRORS_HPP
