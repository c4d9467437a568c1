#pragma once

#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "hda/grad_check.hpp"

namespace hda::test {

/// One randomized gradient-check instance: a scalar function of a single
/// tensor and the point at which to check it.
struct GradInstance {
  ScalarFunction f;
  Dense point;
};

struct GradCase {
  std::string name;
  std::function<GradInstance(std::mt19937_64&)> make;
};

inline void PrintTo(const GradCase& c, std::ostream* os) { *os << c.name; }

/// Every differentiable building block, each reduced to a scalar through a
/// fixed random weighting so no gradient entry cancels by symmetry.
const std::vector<GradCase>& gradient_cases();

}  // namespace hda::test
