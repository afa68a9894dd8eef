#ifndef DQLM_COMMON_HPP
#define DQLM_COMMON_HPP

#include <stdexcept>
#include <string>

namespace dqlm {

/// Invalid parameter values or arguments outside an operation's domain.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Runtime numerical failure: quadrature non-convergence, loss of positive
/// definiteness, non-finite values in an iterative scheme. Carries the best
/// error estimate available at the point of failure when one exists.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg, double achieved = -1.0)
      : std::runtime_error(msg), achieved_error(achieved) {}
  double achieved_error;
};

}  // namespace dqlm

#endif  // DQLM_COMMON_HPP
