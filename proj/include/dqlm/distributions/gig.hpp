#ifndef DQLM_DISTRIBUTIONS_GIG_HPP
#define DQLM_DISTRIBUTIONS_GIG_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "dqlm/common.hpp"
#include "dqlm/rng.hpp"

namespace dqlm {

/// Generalized inverse Gaussian GIG(chi, kappa, lambda) with density
/// proportional to x^{lambda-1} exp(-(chi/x + kappa x)/2) on x > 0.
/// chi = 0 degenerates to Ga(lambda, kappa/2); kappa = 0 to the reciprocal
/// of Ga(-lambda, chi/2).
struct GigParams {
  double chi;
  double kappa;
  double lambda;

  static GigParams make(double chi, double kappa, double lambda) {
    const bool finite = std::isfinite(chi) && std::isfinite(kappa) &&
                        std::isfinite(lambda);
    const bool region =
        (chi > 0.0 && kappa >= 0.0) || (chi >= 0.0 && kappa > 0.0);
    if (!finite || !region || (chi == 0.0 && !(lambda > 0.0)) ||
        (kappa == 0.0 && !(lambda < 0.0))) {
      throw DomainError("invalid GIG parameter region");
    }
    return GigParams{chi, kappa, lambda};
  }
};

namespace detail {

// Rejection sampler of Devroye (2014) for the two-parameter GIG(lambda, omega)
// with lambda >= 0, omega > 0. Returns a draw of the standardized variable;
// the caller applies the sqrt(chi/kappa) scale.
inline double gig_devroye(double lambda, double omega, Rng& rng) {
  const double alpha = std::sqrt(omega * omega + lambda * lambda) - lambda;
  const auto psi = [&](double x) {
    return -alpha * (std::cosh(x) - 1.0) - lambda * (std::exp(x) - x - 1.0);
  };
  const auto psi_deriv = [&](double x) {
    return -alpha * std::sinh(x) - lambda * (std::exp(x) - 1.0);
  };

  double t = 1.0;
  double v = -psi(1.0);
  if (v > 2.0) {
    t = std::sqrt(2.0 / (alpha + lambda));
  } else if (v < 0.5) {
    t = std::log(4.0 / (alpha + 2.0 * lambda));
  }

  double s = 1.0;
  v = -psi(-1.0);
  if (v > 2.0) {
    s = std::sqrt(4.0 / (alpha * std::cosh(1.0) + lambda));
  } else if (v < 0.5) {
    const double inv_lambda =
        lambda > 0.0 ? 1.0 / lambda : std::numeric_limits<double>::infinity();
    s = std::min(inv_lambda,
                 std::log(1.0 + 1.0 / alpha +
                          std::sqrt(1.0 / (alpha * alpha) + 2.0 / alpha)));
  }

  const double eta = -psi(t);
  const double zeta = -psi_deriv(t);
  const double theta = -psi(-s);
  const double xi = psi_deriv(-s);
  const double p = 1.0 / xi;
  const double r = 1.0 / zeta;
  const double td = t - r * eta;
  const double sd = s - p * theta;
  const double q = td + sd;

  const auto envelope = [&](double x) {
    if (x >= -sd && x <= td) return 1.0;
    if (x > td) return std::exp(-eta - zeta * (x - t));
    return std::exp(-theta + xi * (x + s));
  };

  double draw = 0.0;
  for (;;) {
    const double u = rng.uniform_pos();
    const double w = rng.uniform_pos();
    const double vv = rng.uniform_pos();
    if (u < q / (p + q + r)) {
      draw = -sd + q * vv;
    } else if (u < (q + r) / (p + q + r)) {
      draw = td - r * std::log(vv);
    } else {
      draw = -sd + p * std::log(vv);
    }
    if (w * envelope(draw) <= std::exp(psi(draw))) break;
  }
  return (lambda / omega + std::sqrt(1.0 + lambda * lambda / (omega * omega))) *
         std::exp(draw);
}

}  // namespace detail

inline double gig_sample(const GigParams& p, Rng& rng) {
  if (p.chi == 0.0) return rng.gamma(p.lambda, 0.5 * p.kappa);
  if (p.kappa == 0.0) return 1.0 / rng.gamma(-p.lambda, 0.5 * p.chi);
  // X ~ GIG(chi, kappa, lambda)  <=>  1/X ~ GIG(kappa, chi, -lambda)
  if (p.lambda < 0.0) {
    return std::sqrt(p.chi / p.kappa) /
           detail::gig_devroye(-p.lambda, std::sqrt(p.chi * p.kappa), rng);
  }
  return std::sqrt(p.chi / p.kappa) *
         detail::gig_devroye(p.lambda, std::sqrt(p.chi * p.kappa), rng);
}

/// Conjugate update for a normal sample y_i ~ N(a + b U, c U) against a
/// GIG(chi, kappa, lambda) prior whose kappa slot holds an exponential-style
/// rate (it is doubled into the posterior GIG exponent):
///   chi*    = chi + sum (y_i - a)^2 / c
///   kappa*  = n b^2 / c + 2 kappa
///   lambda* = lambda - n / 2
/// An empty sample returns the prior unchanged.
inline GigParams gig_posterior_update(const GigParams& prior,
                                      std::span<const double> y, double a,
                                      double b, double c) {
  if (!(c > 0.0)) {
    throw DomainError("gig_posterior_update: c must be positive");
  }
  if (y.empty()) return prior;
  double ssq = 0.0;
  for (double yi : y) {
    const double d = yi - a;
    ssq += d * d;
  }
  const double n = static_cast<double>(y.size());
  return GigParams::make(prior.chi + ssq / c, n * b * b / c + 2.0 * prior.kappa,
                         prior.lambda - 0.5 * n);
}

}  // namespace dqlm

#endif  // DQLM_DISTRIBUTIONS_GIG_HPP
