#include "hda/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace hda {
namespace {

double evaluate(const ScalarFunction& f, const Dense& point) {
  Tape tape;
  return f(tape, tape.constant(point)).item();
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& f, const Dense& point, double tol,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  {
    Tape tape;
    Tensor x = tape.variable(point);
    Tensor y = f(tape, x);
    tape.backward(y);
    report.analytic = x.grad().data;
  }

  Dense probe = point;
  report.numeric.resize(point.size());
  report.rel_error.resize(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = probe.data[i];
    probe.data[i] = orig + options.step;
    const double up = evaluate(f, probe);
    probe.data[i] = orig - options.step;
    const double down = evaluate(f, probe);
    probe.data[i] = orig;
    report.numeric[i] = (up - down) / (2.0 * options.step);

    const double a = report.analytic[i];
    const double n = report.numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), options.floor});
    report.rel_error[i] = std::abs(a - n) / denom;
    if (std::isnan(report.rel_error[i])) {
      report.max_rel_error = report.rel_error[i];
      break;
    }
    report.max_rel_error = std::max(report.max_rel_error, report.rel_error[i]);
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace hda
