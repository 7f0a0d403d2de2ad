#pragma once

#include <stdexcept>
#include <string>

namespace mpclust {

// Base class for all library errors.
struct error : std::runtime_error {
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Bad argument values, out-of-range parameters, mismatched inputs.
struct parameter_error : error {
  explicit parameter_error(const std::string& what) : error(what) {}
};

// A documented precondition of an operation does not hold.
struct precondition_error : error {
  explicit precondition_error(const std::string& what) : error(what) {}
};

// Dataset has no usable geometry (e.g. all points identical).
struct degenerate_error : error {
  explicit degenerate_error(const std::string& what) : error(what) {}
};

// A fractional center set carries less than one unit of opening mass.
struct infeasible_error : error {
  explicit infeasible_error(const std::string& what) : error(what) {}
};

// A combinatorial or size guard was exceeded (oracles, LP solver).
struct guard_error : error {
  explicit guard_error(const std::string& what) : error(what) {}
};

// Simulated machines ran out of memory or communication budget.
struct capacity_error : error {
  explicit capacity_error(const std::string& what) : error(what) {}
};

// I/O and parsing failures.
struct io_error : error {
  explicit io_error(const std::string& what) : error(what) {}
};

}  // namespace mpclust
