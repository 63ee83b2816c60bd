#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "intentgc/tape.hpp"

namespace intentgc {

struct GradCoordinate {
  std::size_t param = 0;  ///< index into the parameter list
  std::size_t index = 0;  ///< flat element index
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
};

struct GradCheckReport {
  double max_rel_error = 0;
  std::size_t checked = 0;
  /// Coordinates whose +/- epsilon probes cross a relu/hinge kink.
  std::vector<GradCoordinate> excluded;
  /// Coordinates above the tolerance.
  std::vector<GradCoordinate> failures;

  bool ok() const noexcept { return failures.empty(); }
};

/// Builds a scalar on the tape from leaves bound to the given parameters.
using ScalarFunction = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

/// Compares tape gradients with central finite differences:
/// rel = |a - n| / max(1e-8, |a| + |n|). Coordinates whose probes change the
/// relu/hinge sign pattern are reported in `excluded` instead of checked.
GradCheckReport grad_check(const ScalarFunction& f, const std::vector<Tensor<double>*>& params,
                           double epsilon = 1e-6, double tolerance = 1e-6);

/// Builds the same scalar as a ScalarFunction on an extended-precision tape.
using ExtendedScalarFunction = std::function<Var(Tape<long double>&, const std::vector<Var>&)>;

/// As above, but the finite differences (and the kink test) run on `reference`
/// in long double, so rounding noise in the differences stays far below the
/// 1e-8 floor even for gradients that are exactly zero.
GradCheckReport grad_check(const ScalarFunction& f, const ExtendedScalarFunction& reference,
                           const std::vector<Tensor<double>*>& params, double epsilon = 1e-6,
                           double tolerance = 1e-6);

}  // namespace intentgc
