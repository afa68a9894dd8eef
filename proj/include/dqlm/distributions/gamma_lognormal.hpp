#ifndef DQLM_DISTRIBUTIONS_GAMMA_LOGNORMAL_HPP
#define DQLM_DISTRIBUTIONS_GAMMA_LOGNORMAL_HPP

#include <cmath>
#include <sstream>

#include "dqlm/common.hpp"

namespace dqlm {

struct GammaMoments {
  double shape;  // a
  double rate;   // b

  static GammaMoments make(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) ||
        !std::isfinite(rate)) {
      throw DomainError("gamma moments require shape > 0 and rate > 0");
    }
    return GammaMoments{shape, rate};
  }

  double mean() const { return shape / rate; }
  double variance() const { return shape / (rate * rate); }
};

struct LognormalMoments {
  double log_mean;  // mean of log theta
  double log_var;   // variance of log theta

  static LognormalMoments make(double log_mean, double log_var) {
    if (!std::isfinite(log_mean) || !(log_var > 0.0) ||
        !std::isfinite(log_var)) {
      throw DomainError("lognormal moments require finite mean, log_var > 0");
    }
    return LognormalMoments{log_mean, log_var};
  }

  double mean() const { return std::exp(log_mean + 0.5 * log_var); }
  double variance() const {
    return std::exp(2.0 * log_mean + log_var) * log_var;
  }
};

/// Normal law of zeta = log(theta) for theta ~ Ga(a, b): the log transform is
/// the KL-optimal normalizer in the power family, with
/// E(zeta) = log(a/b) - 1/(2a) and V(zeta) = 1/a.
inline LognormalMoments gamma_to_lognormal(const GammaMoments& g) {
  return LognormalMoments::make(
      std::log(g.shape / g.rate) - 0.5 / g.shape, 1.0 / g.shape);
}

/// Gamma law minimizing KL(LN(mu, sigma2) || Ga(a, b)) over (a, b):
/// a = 1/sigma2, b = exp(-(mu + sigma2/2)) / sigma2. Requires sigma2 < 1 so
/// the resulting gamma has a mode.
inline GammaMoments lognormal_to_gamma(const LognormalMoments& l) {
  if (!(l.log_var < 1.0)) {
    std::ostringstream msg;
    msg << "lognormal_to_gamma requires log variance < 1 (mode existence), "
           "got "
        << l.log_var;
    throw DomainError(msg.str());
  }
  const double a = 1.0 / l.log_var;
  return GammaMoments::make(a, a * std::exp(-(l.log_mean + 0.5 * l.log_var)));
}

}  // namespace dqlm

#endif  // DQLM_DISTRIBUTIONS_GAMMA_LOGNORMAL_HPP
