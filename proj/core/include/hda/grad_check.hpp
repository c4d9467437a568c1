#pragma once

#include <functional>
#include <vector>

#include "hda/tensor.hpp"

namespace hda {

/// Scalar-valued function of one tensor, re-traced on a fresh tape per call.
using ScalarFunction = std::function<Tensor(Tape&, const Tensor&)>;

struct GradCheckOptions {
  double step = 1e-6;
  /// Denominator floor: error_i = |analytic − numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-2;
};

struct GradCheckReport {
  std::vector<double> analytic;
  std::vector<double> numeric;
  std::vector<double> rel_error;
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Compares the reverse-mode gradient of `f` at `point` with central
/// differences. Passes iff every coordinate's relative error is below `tol`.
GradCheckReport grad_check(const ScalarFunction& f, const Dense& point, double tol,
                           const GradCheckOptions& options = {});

}  // namespace hda
