#ifndef DQLM_FORECAST_HPP
#define DQLM_FORECAST_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include "dqlm/common.hpp"
#include "dqlm/distributions/asymmetric_laplace.hpp"
#include "dqlm/linalg.hpp"
#include "dqlm/mcmc.hpp"
#include "dqlm/model.hpp"
#include "dqlm/seqfilter.hpp"

namespace dqlm {

inline constexpr double kZ975 = 1.959963984540054;

struct ForecastStep {
  int horizon;
  double pred_mean;  // observation predictive
  double pred_var;
  double pred_lo;  // equal-tailed 95%
  double pred_hi;
  double linpred_mean;  // F' theta at the horizon
  double linpred_lo;
  double linpred_hi;
};

struct ForecastResult {
  std::vector<ForecastStep> steps;
  Eigen::MatrixXd linpred_draws;  // draws x horizons; mcmc engine only
};

/// k-step-ahead forecast from the sequential filter's terminal state via the
/// moment recursion a* = G* a*, R* = G* R* G*' + W*. The evolution noise is
/// frozen at the end of sample: in discount mode W* = ((1-delta)/delta)
/// G* C_T* G*', so the one-step forecast coincides with the filter's own
/// next-step predictive and variances still grow with the horizon.
inline ForecastResult forecast_seq(const AugmentedState& final_state,
                                   const ModelSpec& spec,
                                   const QuantileSpec& quantile, double phi,
                                   int horizon, int start_t = 0,
                                   const SeqOptions& options = {}) {
  if (horizon < 1) throw DomainError("forecast horizon must be >= 1");
  const int p = spec.state_dim;

  Eigen::MatrixXd Gs = Eigen::MatrixXd::Zero(p + 1, p + 1);
  Gs.topLeftCorner(p, p) = spec.transition(start_t + 1);
  Gs(p, p) = 1.0;
  Eigen::MatrixXd w_frozen;
  if (const auto* d = std::get_if<DiscountEvolution>(&spec.evolution)) {
    w_frozen = symmetrized((1.0 - d->delta) / d->delta * Gs *
                           final_state.C * Gs.transpose());
  } else if (const auto* fx = std::get_if<FixedEvolution>(&spec.evolution)) {
    w_frozen = Eigen::MatrixXd::Zero(p + 1, p + 1);
    w_frozen.topLeftCorner(p, p) = fx->W;
    w_frozen(p, p) = fx->w_u;
  } else {
    throw DomainError(
        "sequential forecasting supports discount or fixed evolution only");
  }

  ForecastResult out;
  out.steps.reserve(horizon);
  AugmentedState state = final_state;
  const double r_u_max = phi / 1.0001;
  for (int k = 1; k <= horizon; ++k) {
    const int t = start_t + k;
    Gs.topLeftCorner(p, p) = spec.transition(t);
    state.m = Gs * state.m;
    state.C = symmetrized(Gs * state.C * Gs.transpose() + w_frozen);
    if (state.u_var() > r_u_max) {
      const double shrink = std::sqrt(r_u_max / state.u_var());
      state.C.topRightCorner(p, 1) *= shrink;
      state.C.bottomLeftCorner(1, p) *= shrink;
      state.C(p, p) = r_u_max;
    }
    const OneStepPredictive pred =
        predictive(state, spec, quantile, phi, t);

    ForecastStep step;
    step.horizon = k;
    step.pred_mean = pred.f;
    step.pred_var = pred.q / phi;
    step.pred_lo = ngal_quantile(0.025, pred.ngal, options.quadrature);
    step.pred_hi = ngal_quantile(0.975, pred.ngal, options.quadrature);
    const Eigen::VectorXd F = spec.design(t);
    step.linpred_mean = F.dot(state.state_mean());
    const double sd_lin =
        std::sqrt(std::max(0.0, F.dot(state.state_cov() * F) / phi));
    step.linpred_lo = step.linpred_mean - kZ975 * sd_lin;
    step.linpred_hi = step.linpred_mean + kZ975 * sd_lin;
    out.steps.push_back(step);
  }
  return out;
}

/// k-step-ahead forecast from retained Gibbs draws: each draw's terminal
/// state propagates through the evolution with fresh noise, the observation
/// adds asymmetric Laplace noise at that draw's scale. Quantile tracks come
/// from the pooled draws.
inline ForecastResult forecast_mcmc(const McmcDraws& draws,
                                    const ModelSpec& spec,
                                    const QuantileSpec& quantile, int horizon,
                                    int start_t, Rng& rng) {
  if (horizon < 1) throw DomainError("forecast horizon must be >= 1");
  if (draws.size() == 0) throw DomainError("no retained draws to propagate");
  const int n = draws.size();
  const int p = spec.state_dim;

  ForecastResult out;
  out.linpred_draws.resize(n, horizon);
  Eigen::MatrixXd y_draws(n, horizon);

  const auto* fixed = std::get_if<FixedEvolution>(&spec.evolution);
  const auto* discount = std::get_if<DiscountEvolution>(&spec.evolution);
  const auto* student = std::get_if<StudentTEvolution>(&spec.evolution);
  const bool iw = std::holds_alternative<InverseWishartEvolution>(
      spec.evolution);

  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd theta = draws.theta[i].row(draws.theta[i].rows() - 1);
    const double sigma = draws.sigma[i];

    Eigen::MatrixXd w_frozen;
    if (fixed) {
      w_frozen = fixed->W;
    } else if (iw) {
      w_frozen = draws.w_last[i];
    } else if (discount) {
      const Eigen::MatrixXd G = spec.transition(start_t + 1);
      w_frozen = symmetrized((1.0 - discount->delta) / discount->delta * G *
                             draws.c_last[i] * G.transpose());
    }

    for (int k = 1; k <= horizon; ++k) {
      const int t = start_t + k;
      const Eigen::MatrixXd G = spec.transition(t);
      Eigen::MatrixXd w_step;
      if (student) {
        const double lambda = rng.gamma(0.5 * student->nu, 0.5 * student->nu);
        w_step = (draws.w_scalar[i] / lambda) *
                 Eigen::MatrixXd::Identity(p, p);
      } else {
        w_step = w_frozen;
      }
      theta = sample_mvn(G * theta, w_step, rng);
      const double linpred = spec.design(t).dot(theta);
      out.linpred_draws(i, k - 1) = linpred;
      y_draws(i, k - 1) =
          al_sample(AlParams::make(linpred, sigma, quantile), rng);
    }
  }

  out.steps.reserve(horizon);
  std::vector<double> buffer(n);
  const auto pct = [&](std::vector<double>& v, double prob) {
    const int idx = std::clamp(static_cast<int>(prob * n), 0, n - 1);
    std::nth_element(v.begin(), v.begin() + idx, v.end());
    return v[idx];
  };
  for (int k = 1; k <= horizon; ++k) {
    ForecastStep step;
    step.horizon = k;
    Eigen::Map<Eigen::VectorXd>(buffer.data(), n) = y_draws.col(k - 1);
    step.pred_mean = y_draws.col(k - 1).mean();
    step.pred_var =
        (y_draws.col(k - 1).array() - step.pred_mean).square().sum() / n;
    step.pred_lo = pct(buffer, 0.025);
    Eigen::Map<Eigen::VectorXd>(buffer.data(), n) = y_draws.col(k - 1);
    step.pred_hi = pct(buffer, 0.975);

    step.linpred_mean = out.linpred_draws.col(k - 1).mean();
    Eigen::Map<Eigen::VectorXd>(buffer.data(), n) =
        out.linpred_draws.col(k - 1);
    step.linpred_lo = pct(buffer, 0.025);
    Eigen::Map<Eigen::VectorXd>(buffer.data(), n) =
        out.linpred_draws.col(k - 1);
    step.linpred_hi = pct(buffer, 0.975);
    out.steps.push_back(step);
  }
  return out;
}

/// Sum forecast means over fixed windows (e.g. months into years). Returns
/// one entry per complete window.
inline std::vector<double> window_sum(const std::vector<double>& values,
                                      int window) {
  if (window < 1) throw DomainError("window must be >= 1");
  std::vector<double> out;
  for (size_t start = 0; start + window <= values.size(); start += window) {
    double s = 0.0;
    for (int j = 0; j < window; ++j) s += values[start + j];
    out.push_back(s);
  }
  return out;
}

}  // namespace dqlm

#endif  // DQLM_FORECAST_HPP
