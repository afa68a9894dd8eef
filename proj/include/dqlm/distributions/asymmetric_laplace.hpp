#ifndef DQLM_DISTRIBUTIONS_ASYMMETRIC_LAPLACE_HPP
#define DQLM_DISTRIBUTIONS_ASYMMETRIC_LAPLACE_HPP

#include <cmath>

#include "dqlm/common.hpp"
#include "dqlm/quantile.hpp"
#include "dqlm/rng.hpp"

namespace dqlm {

/// Asymmetric Laplace law AL(mu, sigma, tau): location mu, scale sigma,
/// skewness tau. Its density is tau(1-tau)/sigma * exp(-rho_tau((y-mu)/sigma)),
/// so the tau-quantile sits exactly at mu.
struct AlParams {
  double mu;
  double sigma;
  QuantileSpec quantile;

  static AlParams make(double mu, double sigma, double tau) {
    return make(mu, sigma, QuantileSpec::from_tau(tau));
  }
  static AlParams make(double mu, double sigma, const QuantileSpec& q) {
    if (!std::isfinite(mu)) throw DomainError("AL location must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw DomainError("AL scale must be positive and finite");
    }
    return AlParams{mu, sigma, q};
  }
};

inline double al_log_density(double y, const AlParams& p) {
  if (!std::isfinite(y)) throw DomainError("al_log_density: y must be finite");
  const double tau = p.quantile.tau;
  return std::log(tau * (1.0 - tau) / p.sigma) -
         check_loss((y - p.mu) / p.sigma, tau);
}

inline double al_density(double y, const AlParams& p) {
  return std::exp(al_log_density(y, p));
}

inline double al_cdf(double y, const AlParams& p) {
  if (!std::isfinite(y)) throw DomainError("al_cdf: y must be finite");
  const double tau = p.quantile.tau;
  const double z = (y - p.mu) / p.sigma;
  if (z <= 0.0) return tau * std::exp((1.0 - tau) * z);
  return 1.0 - (1.0 - tau) * std::exp(-tau * z);
}

/// P(Y <= mu), which equals tau by the defining quantile property.
inline double al_cdf_at_location(const AlParams& p) {
  return al_cdf(p.mu, p);
}

inline double al_quantile(double prob, const AlParams& p) {
  if (!(prob > 0.0) || !(prob < 1.0)) {
    throw DomainError("al_quantile: probability must lie in (0, 1)");
  }
  const double tau = p.quantile.tau;
  if (prob <= tau) {
    return p.mu + p.sigma / (1.0 - tau) * std::log(prob / tau);
  }
  return p.mu - p.sigma / tau * std::log((1.0 - prob) / (1.0 - tau));
}

/// Draw via the location-scale mixture: U ~ Ga(1, 1/sigma) (an exponential
/// with mean sigma), then y | U ~ N(mu + a_tau U, b_tau sigma U).
inline double al_sample(const AlParams& p, Rng& rng) {
  const double u = rng.exponential(1.0 / p.sigma);
  return p.mu + p.quantile.a_tau * u +
         std::sqrt(p.quantile.b_tau * p.sigma * u) * rng.normal();
}

}  // namespace dqlm

#endif  // DQLM_DISTRIBUTIONS_ASYMMETRIC_LAPLACE_HPP
