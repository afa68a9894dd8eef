#ifndef DQLM_MODEL_HPP
#define DQLM_MODEL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dqlm/common.hpp"
#include "dqlm/linalg.hpp"
#include "dqlm/quantile.hpp"

namespace dqlm {

/// Mean vector with covariance; the currency of every filter in the library.
/// Whether C is an actual covariance or a multiple of phi^{-1} depends on the
/// engine convention documented at each use site.
struct GaussianState {
  Eigen::VectorXd m;
  Eigen::MatrixXd C;
};

// ---------------------------------------------------------------------------
// Evolution-variance policies

/// Known evolution covariance. For the sequential engine W scales phi^{-1}
/// and w_u is the variance of the log-weight random walk (same scaling).
struct FixedEvolution {
  Eigen::MatrixXd W;
  double w_u = 0.0;
};

/// W_t ~ InverseWishart(df, scale), resampled per time point in the Gibbs
/// sweep. MCMC engine only.
struct InverseWishartEvolution {
  double df = 8.0;
  Eigen::MatrixXd scale;
};

/// Discount factor: the propagated covariance is inflated by 1/delta in
/// place of an explicit W_t.
struct DiscountEvolution {
  double delta = 0.95;
};

/// Student-t evolution via the scale mixture theta_t ~ N(G theta_{t-1},
/// W / lambda_t), lambda_t ~ Ga(nu/2, nu/2), W = w I_p with a half-Cauchy
/// prior on sqrt(w). MCMC engine only.
struct StudentTEvolution {
  double nu = 2.5;
  double half_cauchy_scale = 25.0;
  double w_init = 1.0;
};

using EvolutionPolicy = std::variant<FixedEvolution, InverseWishartEvolution,
                                     DiscountEvolution, StudentTEvolution>;

// ---------------------------------------------------------------------------

/// Observation design F_t, state evolution G_t, evolution-variance policy and
/// the quantile grid a fit targets. Immutable after construction; the design
/// and transition callables must be pure functions of t (1-based).
struct ModelSpec {
  int state_dim = 1;
  std::function<Eigen::VectorXd(int)> design;
  std::function<Eigen::MatrixXd(int)> transition;
  EvolutionPolicy evolution = DiscountEvolution{};
  std::vector<QuantileSpec> quantiles = {QuantileSpec::from_tau(0.5)};
  std::vector<std::string> component_names;

  void validate() const {
    if (state_dim < 1) throw DomainError("state_dim must be >= 1");
    if (!design || !transition) {
      throw DomainError("ModelSpec requires design and transition functions");
    }
    if (const auto* d = std::get_if<DiscountEvolution>(&evolution)) {
      if (!(d->delta > 0.0) || !(d->delta < 1.0)) {
        throw DomainError("discount factor must lie in (0, 1)");
      }
    }
    if (const auto* st = std::get_if<StudentTEvolution>(&evolution)) {
      if (!(st->nu > 0.0)) throw DomainError("Student-t nu must be positive");
    }
    if (const auto* fx = std::get_if<FixedEvolution>(&evolution)) {
      if (fx->W.rows() != state_dim || fx->W.cols() != state_dim ||
          !fx->W.allFinite() || fx->w_u < 0.0) {
        throw DomainError("fixed evolution W has wrong shape or bad values");
      }
    }
    if (quantiles.empty()) throw DomainError("quantile grid must be nonempty");
  }
};

/// Prior block shared by both engines. The MCMC engine reads (m0, C0) as
/// actual moments and (n_phi, s_phi) as the IGa(n/2, s/2) prior on the scale
/// phi^{-1/2}. The sequential engine reads C0 (and the u-block C_u0, the
/// cross block lambda0) as multiples of phi^{-1} and (n0, d0) as the
/// Ga(n/2, d/2) prior on the precision phi^{-1}.
struct PriorSpec {
  Eigen::VectorXd m0;
  Eigen::MatrixXd C0;
  double n_phi = 0.001;
  double s_phi = 0.001;
  double n0 = 0.001;
  double d0 = 0.001;
  // Log-weight block prior. The default centers the implied mixture weight
  // at E(U) = exp(m_u0) = 1, the unit mean of the exact scaled weight.
  double m_u0 = 0.0;
  double c_u0 = 1.0;
  Eigen::VectorXd lambda0;  // state-u cross covariance; empty means zero

  static PriorSpec diffuse(int p, double c0_scale = 1e5) {
    PriorSpec prior;
    prior.m0 = Eigen::VectorXd::Zero(p);
    prior.C0 = c0_scale * Eigen::MatrixXd::Identity(p, p);
    return prior;
  }

  void validate(int p) const {
    if (m0.size() != p || C0.rows() != p || C0.cols() != p) {
      throw DomainError("prior dimensions do not match state_dim");
    }
    if (!is_spd(C0)) throw DomainError("C0 must be symmetric positive definite");
    if (!(n_phi > 0.0) || !(s_phi > 0.0) || !(n0 > 0.0) || !(d0 > 0.0) ||
        !(c_u0 > 0.0)) {
      throw DomainError("prior hyperparameters must be positive");
    }
    if (lambda0.size() != 0 && lambda0.size() != p) {
      throw DomainError("lambda0 must be empty or of length state_dim");
    }
  }

  Eigen::VectorXd cross_block(int p) const {
    return lambda0.size() == p ? lambda0 : Eigen::VectorXd::Zero(p);
  }
};

/// Observed series. y[i] is the observation at the (i+1)-th time point;
/// labels keep the original time strings for output tables. Covariates, when
/// present, are row-aligned with y.
struct TimeSeriesData {
  std::vector<double> y;
  std::vector<std::string> time_labels;
  Eigen::MatrixXd covariates;  // T x k, k may be 0
  std::vector<std::string> covariate_names;

  int length() const { return static_cast<int>(y.size()); }

  void validate() const {
    for (double v : y) {
      if (!std::isfinite(v)) {
        throw DomainError("time series contains non-finite observations");
      }
    }
    if (covariates.rows() != 0 &&
        covariates.rows() != static_cast<Eigen::Index>(y.size())) {
      throw DomainError("covariate rows do not match series length");
    }
  }

  std::string label(int i) const {
    return i < static_cast<int>(time_labels.size()) ? time_labels[i]
                                                    : std::to_string(i + 1);
  }
};

// ---------------------------------------------------------------------------
// Model builders

/// Second-order polynomial trend plus one harmonic: F = (1,0,1,0)',
/// G = blockdiag([[1,1],[0,1]], rotation(2*pi/period)).
inline ModelSpec build_trend_seasonal(int period,
                                      EvolutionPolicy ev = DiscountEvolution{}) {
  if (period < 2) throw DomainError("harmonic period must be >= 2");
  const double omega = 2.0 * std::numbers::pi / period;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(4, 4);
  G(0, 0) = 1.0;
  G(0, 1) = 1.0;
  G(1, 1) = 1.0;
  G(2, 2) = std::cos(omega);
  G(2, 3) = std::sin(omega);
  G(3, 2) = -std::sin(omega);
  G(3, 3) = std::cos(omega);
  Eigen::VectorXd F(4);
  F << 1.0, 0.0, 1.0, 0.0;

  ModelSpec spec;
  spec.state_dim = 4;
  spec.design = [F](int) { return F; };
  spec.transition = [G](int) { return G; };
  spec.evolution = std::move(ev);
  spec.component_names = {"level", "slope", "seasonal", "seasonal_aux"};
  return spec;
}

/// First-order polynomial model: F = G = 1.
inline ModelSpec build_local_level(EvolutionPolicy ev = DiscountEvolution{}) {
  ModelSpec spec;
  spec.state_dim = 1;
  spec.design = [](int) { return Eigen::VectorXd::Ones(1); };
  spec.transition = [](int) { return Eigen::MatrixXd::Ones(1, 1); };
  spec.evolution = std::move(ev);
  spec.component_names = {"level"};
  return spec;
}

/// Local linear trend plus quarterly seasonal: F = (1,0,1,0,0)' and the 5x5
/// transition with the seasonal sum-to-rotation block.
inline ModelSpec build_local_linear_plus_quarterly(
    EvolutionPolicy ev = DiscountEvolution{}) {
  Eigen::MatrixXd G(5, 5);
  G << 1, 1, 0, 0, 0,
       0, 1, 0, 0, 0,
       0, 0, -1, -1, -1,
       0, 0, 1, 0, 0,
       0, 0, 0, 1, 0;
  Eigen::VectorXd F(5);
  F << 1, 0, 1, 0, 0;

  ModelSpec spec;
  spec.state_dim = 5;
  spec.design = [F](int) { return F; };
  spec.transition = [G](int) { return G; };
  spec.evolution = std::move(ev);
  spec.component_names = {"level", "slope", "seasonal", "seasonal_lag1",
                          "seasonal_lag2"};
  return spec;
}

/// Dynamic regression F_t = (1, x_t...)', G = I. The covariate matrix is
/// captured by the design function.
inline ModelSpec build_dynamic_regression(
    const Eigen::MatrixXd& covariates,
    EvolutionPolicy ev = DiscountEvolution{}) {
  const int p = static_cast<int>(covariates.cols()) + 1;
  ModelSpec spec;
  spec.state_dim = p;
  Eigen::MatrixXd X = covariates;
  spec.design = [X, p](int t) {
    if (t < 1 || t > X.rows()) {
      throw DomainError("design time index out of range");
    }
    Eigen::VectorXd F(p);
    F(0) = 1.0;
    F.tail(p - 1) = X.row(t - 1).transpose();
    return F;
  };
  spec.transition = [p](int) { return Eigen::MatrixXd::Identity(p, p); };
  spec.evolution = std::move(ev);
  spec.component_names.push_back("intercept");
  for (int j = 1; j < p; ++j) {
    spec.component_names.push_back("beta" + std::to_string(j));
  }
  return spec;
}

}  // namespace dqlm

#endif  // DQLM_MODEL_HPP
