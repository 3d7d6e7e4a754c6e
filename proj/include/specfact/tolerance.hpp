#ifndef SPECFACT_TOLERANCE_HPP
#define SPECFACT_TOLERANCE_HPP

#include <cmath>
#include <cstddef>

#include "specfact/errors.hpp"

namespace specfact {

struct ToleranceConfig {
  /// Rank decisions, relative to the largest singular value involved.
  double rank_rel_tol = 1e-9;
  double residual_tol = 1e-8;
  /// Number of unit-circle angles used by sampling checks.
  std::size_t circle_samples = 512;

  void validate() const {
    if (!(rank_rel_tol > 0.0) || !std::isfinite(rank_rel_tol))
      fail(Errc::InvalidArgument, "rank_rel_tol must be positive");
    if (!(residual_tol > 0.0) || !std::isfinite(residual_tol))
      fail(Errc::InvalidArgument, "residual_tol must be positive");
    if (circle_samples < 8)
      fail(Errc::InvalidArgument, "circle_samples must be at least 8");
  }
};

}  // namespace specfact

#endif  // SPECFACT_TOLERANCE_HPP
