#pragma once

#include <stdexcept>
#include <string>

namespace evoglm {

/// Invalid input: bad shapes, out-of-domain arguments, malformed files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a result (singular matrix,
/// non-convergence, total weight collapse).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace evoglm
