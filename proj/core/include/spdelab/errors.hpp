#pragma once

#include <stdexcept>
#include <string>

namespace spdelab {

/// Base class for all library-defined runtime failures.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A state update produced a non-finite value.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& msg, double t, double h_norm)
      : Error(msg), t(t), h_norm(h_norm) {}
  double t;
  double h_norm;
};

/// An operator evaluation returned a non-finite value.
class OperatorEvalError : public Error {
public:
  OperatorEvalError(const std::string& msg, double t, double h_norm)
      : Error(msg), t(t), h_norm(h_norm) {}
  double t;
  double h_norm;
};

/// Too many ensemble members diverged.
class EnsembleError : public Error {
public:
  EnsembleError(const std::string& msg, int divergent, int total)
      : Error(msg), divergent(divergent), total(total) {}
  int divergent;
  int total;
};

/// Optimizer could not produce any usable candidate.
class OptimizationError : public Error {
public:
  using Error::Error;
};

/// Config text rejected; carries the offending location when known.
class ConfigError : public Error {
public:
  ConfigError(const std::string& msg, int line = 0, int col = 0)
      : Error(msg), line(line), col(col) {}
  int line;
  int col;
};

/// Filesystem write/read failure in the run driver.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace spdelab
