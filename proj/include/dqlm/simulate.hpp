#ifndef DQLM_SIMULATE_HPP
#define DQLM_SIMULATE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "dqlm/distributions/asymmetric_laplace.hpp"
#include "dqlm/linalg.hpp"
#include "dqlm/model.hpp"
#include "dqlm/rng.hpp"

namespace dqlm {

/// Sample path together with the latent truth, for coverage checks.
struct SimulatedPath {
  TimeSeriesData data;
  Eigen::MatrixXd states;            // (T+1) x p, row 0 = theta_0
  Eigen::VectorXd linear_predictor;  // T, F_t' theta_t
};

namespace detail {

inline void fill_labels(TimeSeriesData& data, int T) {
  data.time_labels.resize(T);
  for (int t = 0; t < T; ++t) data.time_labels[t] = std::to_string(t + 1);
}

template <class ObsDraw>
SimulatedPath simulate_states(const ModelSpec& spec,
                              const Eigen::MatrixXd& W_true,
                              const Eigen::VectorXd& theta0, int T, Rng& rng,
                              ObsDraw&& obs_draw) {
  if (T < 1) throw DomainError("simulation length must be >= 1");
  const int p = spec.state_dim;
  if (theta0.size() != p || W_true.rows() != p || W_true.cols() != p) {
    throw DomainError("simulation inputs do not match state_dim");
  }
  SimulatedPath path;
  path.states.resize(T + 1, p);
  path.states.row(0) = theta0.transpose();
  path.linear_predictor.resize(T);
  path.data.y.resize(T);

  Eigen::VectorXd theta = theta0;
  for (int t = 1; t <= T; ++t) {
    theta = sample_mvn(spec.transition(t) * theta, W_true, rng);
    path.states.row(t) = theta.transpose();
    const double mu = spec.design(t).dot(theta);
    path.linear_predictor[t - 1] = mu;
    path.data.y[t - 1] = obs_draw(mu, rng);
  }
  fill_labels(path.data, T);
  return path;
}

}  // namespace detail

/// Gaussian DLM sample path: y_t = F_t' theta_t + N(0, v_true). Zero noise
/// variances are honored exactly (deterministic path).
inline SimulatedPath simulate_dlm(const ModelSpec& spec,
                                  const Eigen::MatrixXd& W_true, double v_true,
                                  const Eigen::VectorXd& theta0, int T,
                                  Rng& rng) {
  if (!(v_true >= 0.0)) throw DomainError("observation variance must be >= 0");
  const double sd = std::sqrt(v_true);
  return detail::simulate_states(
      spec, W_true, theta0, T, rng,
      [sd](double mu, Rng& r) { return sd == 0.0 ? mu : r.normal(mu, sd); });
}

/// DLM path with asymmetric Laplace observation noise at quantile tau, so the
/// true tau-quantile of y_t equals F_t' theta_t.
inline SimulatedPath simulate_al_dlm(const ModelSpec& spec,
                                     const Eigen::MatrixXd& W_true,
                                     double sigma, double tau,
                                     const Eigen::VectorXd& theta0, int T,
                                     Rng& rng) {
  const QuantileSpec q = QuantileSpec::from_tau(tau);
  return detail::simulate_states(
      spec, W_true, theta0, T, rng, [&, sigma](double mu, Rng& r) {
        return al_sample(AlParams::make(mu, sigma, q), r);
      });
}

/// First-order dynamic gamma regression: eta_t = theta_{t,1} + theta_{t,2} x_t
/// with x_t ~ U(2, 4), mean mu_t = exp(eta_t), gamma shape phi, and state
/// random walk with W = 0.01 I.
inline SimulatedPath simulate_gamma_regression(int T, double phi, Rng& rng) {
  if (T < 1) throw DomainError("simulation length must be >= 1");
  if (!(phi > 0.0)) throw DomainError("gamma shape must be positive");

  Eigen::MatrixXd x(T, 1);
  for (int t = 0; t < T; ++t) x(t, 0) = rng.uniform(2.0, 4.0);

  const Eigen::MatrixXd W = 0.01 * Eigen::MatrixXd::Identity(2, 2);
  ModelSpec spec = build_dynamic_regression(x, FixedEvolution{W, 0.0});

  Eigen::VectorXd theta0(2);
  theta0 << 1.0, 0.5;
  SimulatedPath path = detail::simulate_states(
      spec, W, theta0, T, rng, [phi](double eta, Rng& r) {
        // mean exp(eta), shape phi  =>  rate phi / mean
        return r.gamma(phi, phi / std::exp(eta));
      });
  path.data.covariates = x;
  path.data.covariate_names = {"x"};
  return path;
}

}  // namespace dqlm

#endif  // DQLM_SIMULATE_HPP
