#ifndef DQLM_DISTRIBUTIONS_NGAL_HPP
#define DQLM_DISTRIBUTIONS_NGAL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "dqlm/common.hpp"
#include "dqlm/quadrature.hpp"

namespace dqlm {

/// Generalized asymmetric Laplace GAL(theta, mu, sigma2, rho): location theta,
/// asymmetry mu, squared scale sigma2, gamma shape rho. Equivalently the law
/// of theta + mu W + sigma sqrt(W) Z with W ~ Ga(rho, 1), Z ~ N(0, 1).
struct GalParams {
  double theta;
  double mu;
  double sigma2;
  double rho;

  static GalParams make(double theta, double mu, double sigma2, double rho) {
    if (!std::isfinite(theta) || !std::isfinite(mu) || !(sigma2 > 0.0) ||
        !(rho > 0.0) || !std::isfinite(sigma2) || !std::isfinite(rho)) {
      throw DomainError("GAL requires finite params, sigma2 > 0, rho > 0");
    }
    return GalParams{theta, mu, sigma2, rho};
  }
};

/// Five-parameter canonical form of the NGAL law, with characteristic
/// function  [alpha beta exp(i delta s - gamma s^2 / 2) /
///            ((alpha - i s)(beta + i s))]^rho.
struct NgalCanonical {
  double delta;
  double gamma;
  double alpha;
  double beta;
  double rho;
};

/// Convolution of independent N(0, c) and GAL(theta, mu, sigma2, rho).
/// c = 0 reduces to the GAL itself.
struct NgalParams {
  GalParams gal;
  double c = 0.0;

  static NgalParams make(const GalParams& gal, double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw DomainError("NGAL normal variance c must be >= 0 and finite");
    }
    return NgalParams{gal, c};
  }

  NgalCanonical canonical() const {
    const double sigma = std::sqrt(gal.sigma2);
    const double root2 = std::numbers::sqrt2;
    const double kappa =
        (std::sqrt(2.0 * gal.sigma2 + gal.mu * gal.mu) - gal.mu) /
        (root2 * sigma);
    return NgalCanonical{gal.theta / gal.rho, c / gal.rho,
                         root2 * kappa / sigma, root2 / (sigma * kappa),
                         gal.rho};
  }
};

inline NgalParams ngal_from_canonical(const NgalCanonical& p) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0) || !(p.rho > 0.0) ||
      !(p.gamma >= 0.0)) {
    throw DomainError("canonical NGAL requires alpha, beta, rho > 0, "
                      "gamma >= 0");
  }
  const double sigma2 = 2.0 / (p.alpha * p.beta);
  const double mu = 1.0 / p.alpha - 1.0 / p.beta;
  return NgalParams::make(
      GalParams::make(p.rho * p.delta, mu, sigma2, p.rho), p.rho * p.gamma);
}

struct NgalMoments {
  double mean;
  double variance;
  double skewness;
  double kurtosis_excess;
};

/// Closed-form moments from the cumulants
///   k1 = rho (delta + 1/alpha - 1/beta),  k2 = rho (gamma + 1/a^2 + 1/b^2),
///   k3 = 2 rho (1/a^3 - 1/b^3),           k4 = 6 rho (1/a^4 + 1/b^4).
inline NgalMoments ngal_moments(const NgalParams& p) {
  const NgalCanonical cn = p.canonical();
  const double ia = 1.0 / cn.alpha;
  const double ib = 1.0 / cn.beta;
  const double k1 = cn.rho * (cn.delta + ia - ib);
  const double k2 = cn.rho * (cn.gamma + ia * ia + ib * ib);
  const double k3 = 2.0 * cn.rho * (ia * ia * ia - ib * ib * ib);
  const double k4 = 6.0 * cn.rho * (ia * ia * ia * ia + ib * ib * ib * ib);
  return NgalMoments{k1, k2, k3 / std::pow(k2, 1.5), k4 / (k2 * k2)};
}

namespace detail {

/// log(1 + z) for complex z without cancellation in the small-|z| regime
/// (needed when the gamma shape rho is large and rho * log(1 + z) would
/// amplify the rounding of 1 + z).
inline std::complex<double> log1p_complex(const std::complex<double>& z) {
  const double re = z.real();
  const double im = z.imag();
  return {0.5 * std::log1p(2.0 * re + re * re + im * im),
          std::atan2(im, 1.0 + re)};
}

}  // namespace detail

inline std::complex<double> ngal_cf(double s, const NgalParams& p) {
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> z =
      std::complex<double>(0.5 * p.gal.sigma2 * s * s, -p.gal.mu * s);
  return std::exp(i * s * p.gal.theta - 0.5 * p.c * s * s -
                  p.gal.rho * detail::log1p_complex(z));
}

enum class DensityMethod { convolution, cf_inversion };

namespace detail {

inline double ngal_cf_cutoff(const NgalParams& p, double tail_tol = 1e-12) {
  // |cf(s)| <= exp(-c s^2 / 2) (1 + sigma2 s^2 / 2)^{-rho}; cut where either
  // factor alone falls below tail_tol.
  const double log_tol = -std::log(tail_tol);
  const double s_poly = std::sqrt(
      2.0 * std::expm1(log_tol / p.gal.rho) / p.gal.sigma2);
  if (p.c > 0.0) {
    return std::min(std::sqrt(2.0 * log_tol / p.c), s_poly);
  }
  return s_poly;
}

inline double normal_log_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

// Integrate f over [a, b] split at the given interior breakpoints, sharing
// the subdivision budget. Used where the integrand has known narrow windows
// an unsplit adaptive pass could miss.
template <class F>
QuadratureResult integrate_piecewise(F&& f, std::vector<double> knots,
                                     const QuadratureOptions& opt) {
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  QuadratureResult total;
  total.converged = true;
  const int pieces = static_cast<int>(knots.size()) - 1;
  QuadratureOptions piece_opt = opt;
  piece_opt.max_subdivisions =
      std::max(25, opt.max_subdivisions / std::max(1, pieces));
  piece_opt.abs_tol = opt.abs_tol / std::max(1, pieces);
  for (int k = 0; k < pieces; ++k) {
    QuadratureResult r = integrate(f, knots[k], knots[k + 1], piece_opt);
    total.value += r.value;
    total.error += r.error;
    total.subdivisions += r.subdivisions;
    total.converged = total.converged && r.converged;
  }
  return total;
}

inline QuadratureResult ngal_density_convolution(double y, const NgalParams& p,
                                                 const QuadratureOptions& opt) {
  const double rho = p.gal.rho;
  const double lgamma_rho = std::lgamma(rho);
  const auto integrand = [&](double w) {
    const double var = p.c + p.gal.sigma2 * w;
    return std::exp((rho - 1.0) * std::log(w) - w - lgamma_rho +
                    normal_log_pdf(y, p.gal.theta + p.gal.mu * w, var));
  };

  // Gamma-weight window plus, when the asymmetry localizes the normal factor
  // in w, the window around w_y = (y - theta) / mu.
  const double sr = std::sqrt(rho + 1.0);
  std::vector<double> knots;
  double hi = rho + 50.0 * sr + 50.0;
  knots.push_back(std::max(0.0, rho - 50.0 * sr - 50.0));
  knots.push_back(std::max(0.0, rho - 8.0 * sr));
  knots.push_back(rho + 8.0 * sr + 8.0);
  if (p.gal.mu != 0.0) {
    const double w_y = (y - p.gal.theta) / p.gal.mu;
    if (w_y > 0.0) {
      const double sd_w =
          std::sqrt(p.c + p.gal.sigma2 * w_y) / std::abs(p.gal.mu);
      knots.push_back(std::max(0.0, w_y - 8.0 * (sd_w + 1.0)));
      knots.push_back(w_y + 8.0 * (sd_w + 1.0));
      hi = std::max(hi, w_y + 50.0 * (sd_w + 1.0));
    }
  }
  knots.push_back(hi);
  for (double& k : knots) k = std::min(k, hi);
  return integrate_piecewise(integrand, std::move(knots), opt);
}

inline QuadratureResult ngal_density_cf(double y, const NgalParams& p,
                                        const QuadratureOptions& opt) {
  const double cutoff = ngal_cf_cutoff(p);
  const auto integrand = [&](double s) {
    const std::complex<double> i(0.0, 1.0);
    return std::real(std::exp(-i * s * y) * ngal_cf(s, p));
  };
  QuadratureResult r = integrate(integrand, 0.0, cutoff, opt);
  r.value /= std::numbers::pi;
  r.error /= std::numbers::pi;
  return r;
}

}  // namespace detail

/// NGAL density at y, by numerical quadrature of either the normal-GAL
/// convolution (conditioning on the gamma weight) or the inversion of the
/// characteristic function. Throws NumericalError with the achieved error
/// estimate if the quadrature budget is exhausted before reaching tolerance.
inline double ngal_density(double y, const NgalParams& p,
                           DensityMethod method = DensityMethod::cf_inversion,
                           const QuadratureOptions& opt = {}) {
  if (!std::isfinite(y)) throw DomainError("ngal_density: y must be finite");
  QuadratureResult r = method == DensityMethod::convolution
                           ? detail::ngal_density_convolution(y, p, opt)
                           : detail::ngal_density_cf(y, p, opt);
  if (!r.converged) {
    throw NumericalError("ngal_density quadrature did not converge; achieved "
                         "error " +
                             std::to_string(r.error),
                         r.error);
  }
  return std::max(r.value, 0.0);
}

/// CDF through the Gil-Pelaez inversion
///   F(y) = 1/2 - (1/pi) int_0^inf Im(e^{-isy} cf(s)) / s ds.
inline double ngal_cdf(double y, const NgalParams& p,
                       const QuadratureOptions& opt = {}) {
  const double cutoff = detail::ngal_cf_cutoff(p);
  const auto integrand = [&](double s) {
    const std::complex<double> i(0.0, 1.0);
    return std::imag(std::exp(-i * s * y) * ngal_cf(s, p)) / s;
  };
  QuadratureResult r = integrate(integrand, 0.0, cutoff, opt);
  if (!r.converged) {
    throw NumericalError("ngal_cdf quadrature did not converge", r.error);
  }
  return std::clamp(0.5 - r.value / std::numbers::pi, 0.0, 1.0);
}

/// Quantile by bisection on the numerical CDF.
inline double ngal_quantile(double prob, const NgalParams& p,
                            const QuadratureOptions& opt = {}) {
  if (!(prob > 0.0) || !(prob < 1.0)) {
    throw DomainError("ngal_quantile: probability must lie in (0, 1)");
  }
  const NgalMoments m = ngal_moments(p);
  const double sd = std::sqrt(m.variance);
  double lo = m.mean - 10.0 * sd;
  double hi = m.mean + 10.0 * sd;
  while (ngal_cdf(lo, p, opt) > prob) lo -= 10.0 * sd;
  while (ngal_cdf(hi, p, opt) < prob) hi += 10.0 * sd;
  for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + std::abs(m.mean) + sd);
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ngal_cdf(mid, p, opt) < prob) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace dqlm

#endif  // DQLM_DISTRIBUTIONS_NGAL_HPP
