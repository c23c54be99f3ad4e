#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace adiabatic {

using cplx = std::complex<double>;
using RealArray = Eigen::ArrayXd;
using ComplexArray = Eigen::ArrayXcd;

inline constexpr cplx kI{0.0, 1.0};

// Error taxonomy. The CLI maps each kind onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad grid parameters, unparsable expressions, schema
// violations in a configuration file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numerical invariant was violated (mass drift, eigen-residual, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// A run had to stop (blow-up guard, resonance guard, extrapolation).
class RuntimeAbort : public Error {
 public:
  using Error::Error;
};

// 2 config, 3 invariant, 4 runtime (anything else counts as runtime).
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const InvariantError*>(&e)) return 3;
  return 4;
}

// Japanese bracket <x> = sqrt(1 + x^2).
inline double japanese_bracket(double x) { return std::sqrt(1.0 + x * x); }

}  // namespace adiabatic
