#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sigppde {

// Raised when a computation produces non-finite values or a factorization
// cannot be stabilised.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Raised by iterative solvers that exhaust their budget.
class ConvergenceError : public NumericalError {
public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : NumericalError(what), last_iterate_(std::move(last_iterate)) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
  std::vector<double> last_iterate_;
};

}  // namespace sigppde
