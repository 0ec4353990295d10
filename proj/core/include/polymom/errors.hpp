#pragma once

#include <stdexcept>
#include <string>

namespace polymom {

/// A computed resource requirement exceeded its configured cap. Carries the
/// computed value so callers can report how far over budget the request was.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, double computed)
      : std::runtime_error(what), computed_(computed) {}
  double computed() const { return computed_; }

 private:
  double computed_;
};

/// A low-dimensional estimation could not produce a usable result.
class EstimationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Component association between two estimates is not unique at the margin.
class MatchingAmbiguous : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Extension records do not cover the parameter slots exactly once.
class AssemblyIncomplete : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter box contains no feasible lattice point.
class InfeasibleBox : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polymom
