#pragma once

#include <stdexcept>
#include <string>

namespace levelflow {

/// Malformed or invalid scenario configuration. `line()` is 0 for validation
/// errors that are not tied to a single line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver failed to reach the requested tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double achieved_residual, long iterations)
      : std::runtime_error(what + " (relative residual " + std::to_string(achieved_residual) +
                           " after " + std::to_string(iterations) + " iterations)"),
        residual_(achieved_residual),
        iterations_(iterations) {}
  double residual() const { return residual_; }
  long iterations() const { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace levelflow
