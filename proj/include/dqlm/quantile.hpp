#ifndef DQLM_QUANTILE_HPP
#define DQLM_QUANTILE_HPP

#include <cmath>
#include <sstream>

#include "dqlm/common.hpp"

namespace dqlm {

/// Target quantile level together with the two derived mixture constants
/// a_tau = (1 - 2 tau) / (tau (1 - tau)) and b_tau = 2 / (tau (1 - tau)).
struct QuantileSpec {
  double tau;
  double a_tau;
  double b_tau;

  static QuantileSpec from_tau(double tau) {
    if (!(tau > 0.0) || !(tau < 1.0)) {
      std::ostringstream msg;
      msg << "quantile level must lie in (0, 1), got " << tau;
      throw DomainError(msg.str());
    }
    const double tq = tau * (1.0 - tau);
    return QuantileSpec{tau, (1.0 - 2.0 * tau) / tq, 2.0 / tq};
  }
};

/// Check (pinball) loss rho_tau(u) = u (tau - 1{u < 0}).
inline double check_loss(double u, double tau) {
  return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

}  // namespace dqlm

#endif  // DQLM_QUANTILE_HPP
