#pragma once

#include <stdexcept>
#include <string>

namespace sme {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A symmetric matrix handed to sym_sqrt has an eigenvalue below -tol.
struct EigenvalueBelowTolerance : Error {
  using Error::Error;
};

// Sigma^{1/2} (or another PSD factor) is not invertible where required.
struct SingularCovariance : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

struct NonPositiveInput : Error {
  using Error::Error;
};

// A state entry became NaN/Inf; step_index is the offending iteration.
struct NonFiniteState : Error {
  NonFiniteState(const std::string& what, long step_index)
      : Error(what + " (step " + std::to_string(step_index) + ")"),
        step_index(step_index) {}
  long step_index = -1;
};

// Adam continuous models need t_start > 0.
struct InvalidStart : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line = 0;
};

struct ValidationError : Error {
  using Error::Error;
};

}  // namespace sme
