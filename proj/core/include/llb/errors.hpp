#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace llb {

/// Base class for every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input to an operation: grid mismatch, empty box, degenerate time grid...
class InputError : public Error {
 public:
  using Error::Error;
};

enum class SolverFailure {
  implicit_solve,   // CG did not reach the acceptance tolerance
  blow_up,          // non-finite state or |m| above the blow-up threshold
  stalled_descent,  // Armijo backtracking exhausted
};

class SolverError : public Error {
 public:
  SolverError(SolverFailure kind, double time, const std::string& what)
      : Error(what), kind_(kind), time_(time) {}

  SolverFailure kind() const noexcept { return kind_; }
  /// Model time of the last successfully computed frame.
  double time() const noexcept { return time_; }

 private:
  SolverFailure kind_;
  double time_;
};

/// Configuration problems; carries every violation found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out;
    for (const auto& s : issues) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> issues_;
};

}  // namespace llb
