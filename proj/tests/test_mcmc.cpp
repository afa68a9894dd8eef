#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "dqlm/mcmc.hpp"
#include "dqlm/model.hpp"
#include "dqlm/simulate.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using dqlm::QuantileSpec;
using dqlm::Rng;

namespace {

dqlm::TimeSeriesData make_series(const std::vector<double>& y) {
  dqlm::TimeSeriesData data;
  data.y = y;
  for (size_t i = 0; i < y.size(); ++i) {
    data.time_labels.push_back(std::to_string(i + 1));
  }
  return data;
}

// Plain-double Kalman filter for the scalar model y_t = theta_t + N(0, v),
// theta_t = theta_{t-1} + N(0, w); the independent oracle for the FFBS
// forward pass and the RTS smoother.
struct ScalarKalman {
  std::vector<double> m, c, a, r, s;
  void run(const std::vector<double>& y, double m0, double c0, double v,
           double w) {
    const int T = static_cast<int>(y.size());
    m.assign(T + 1, 0.0);
    c.assign(T + 1, 0.0);
    a.assign(T, 0.0);
    r.assign(T, 0.0);
    m[0] = m0;
    c[0] = c0;
    for (int t = 1; t <= T; ++t) {
      a[t - 1] = m[t - 1];
      r[t - 1] = c[t - 1] + w;
      const double q = r[t - 1] + v;
      const double gain = r[t - 1] / q;
      m[t] = a[t - 1] + gain * (y[t - 1] - a[t - 1]);
      c[t] = r[t - 1] - gain * r[t - 1];
    }
    s = m;
    for (int t = T - 1; t >= 0; --t) {
      const double b = c[t] / r[t];
      s[t] = m[t] + b * (s[t + 1] - a[t]);
    }
  }
};

}  // namespace

TEST_CASE("forward pass one-step hand calculation") {
  // W = 0, T = 1, p = 1, F = G = 1, tau = 0.25
  const double m0 = 2.0, c0 = 4.0, sigma = 2.0, u1 = 0.5, y1 = 5.0;
  const QuantileSpec q = QuantileSpec::from_tau(0.25);

  auto spec = dqlm::build_local_level(
      dqlm::FixedEvolution{MatrixXd::Zero(1, 1), 0.0});
  dqlm::PriorSpec prior;
  prior.m0 = VectorXd::Constant(1, m0);
  prior.C0 = MatrixXd::Constant(1, 1, c0);

  dqlm::detail::EvolutionContext ev;
  ev.kind = dqlm::detail::EvolutionContext::Kind::fixed;
  const MatrixXd w0 = MatrixXd::Zero(1, 1);
  ev.w_fixed = &w0;

  dqlm::ForwardPass pass;
  pass.run(make_series({y1}), spec, prior, q, VectorXd::Constant(1, u1),
           sigma, ev);

  // by hand: a1 = 2, R1 = 4, f1 = 2 + 0.5 a_tau, q1 = 4 + b_tau 0.5 sigma,
  // m1 = a1 + R1 (y1 - f1) / q1
  const double f1 = m0 + u1 * q.a_tau;
  const double q1 = c0 + q.b_tau * u1 * sigma;
  const double m1 = m0 + c0 * (y1 - f1) / q1;
  CHECK(pass.f[0] == Catch::Approx(f1).margin(1e-14));
  CHECK(pass.q[0] == Catch::Approx(q1).margin(1e-14));
  CHECK(pass.m[1](0) == Catch::Approx(m1).margin(1e-14));
  CHECK(pass.C[1](0, 0) ==
        Catch::Approx(c0 - c0 * c0 / q1).margin(1e-14));
}

TEST_CASE("huge latent weight disables the update") {
  const QuantileSpec q = QuantileSpec::from_tau(0.5);
  auto spec = dqlm::build_local_level(
      dqlm::FixedEvolution{MatrixXd::Identity(1, 1), 0.0});
  dqlm::PriorSpec prior;
  prior.m0 = VectorXd::Constant(1, 3.0);
  prior.C0 = MatrixXd::Identity(1, 1);

  dqlm::detail::EvolutionContext ev;
  ev.kind = dqlm::detail::EvolutionContext::Kind::fixed;
  const MatrixXd w = MatrixXd::Identity(1, 1);
  ev.w_fixed = &w;

  dqlm::ForwardPass pass;
  pass.run(make_series({50.0}), spec, prior, q,
           VectorXd::Constant(1, 1e14), 1.0, ev);
  CHECK(pass.m[1](0) == Catch::Approx(3.0).margin(1e-9));
}

TEST_CASE("median forward pass and smoother match a textbook Kalman filter") {
  // tau = 1/2 and U_t frozen at a constant give observation variance
  // b_tau * U * sigma
  Rng rng(314);
  std::vector<double> y(50);
  for (auto& v : y) v = rng.normal(1.0, 2.0);

  const QuantileSpec q = QuantileSpec::from_tau(0.5);
  const double sigma = 0.7, u_const = 1.3, w_scalar = 0.4;
  const double v_obs = q.b_tau * u_const * sigma;

  auto spec = dqlm::build_local_level(
      dqlm::FixedEvolution{MatrixXd::Constant(1, 1, w_scalar), 0.0});
  dqlm::PriorSpec prior;
  prior.m0 = VectorXd::Zero(1);
  prior.C0 = MatrixXd::Constant(1, 1, 5.0);

  dqlm::detail::EvolutionContext ev;
  ev.kind = dqlm::detail::EvolutionContext::Kind::fixed;
  const MatrixXd w = MatrixXd::Constant(1, 1, w_scalar);
  ev.w_fixed = &w;

  dqlm::ForwardPass pass;
  pass.run(make_series(y), spec, prior, q,
           VectorXd::Constant(50, u_const), sigma, ev);

  ScalarKalman oracle;
  oracle.run(y, 0.0, 5.0, v_obs, w_scalar);
  for (int t = 0; t <= 50; ++t) {
    CHECK(pass.m[t](0) == Catch::Approx(oracle.m[t]).margin(1e-8));
    CHECK(pass.C[t](0, 0) == Catch::Approx(oracle.c[t]).margin(1e-8));
  }
  auto smoothed = dqlm::smooth_means(pass, spec);
  for (int t = 0; t <= 50; ++t) {
    CHECK(smoothed[t](0) == Catch::Approx(oracle.s[t]).margin(1e-8));
  }
}

TEST_CASE("backward sampling matches the brute-force joint posterior") {
  // T = 2 scalar model with known weights: the conditional model is jointly
  // Gaussian, so the posterior of (theta_0, theta_1, theta_2) has a closed
  // form via the precision matrix.
  const QuantileSpec q = QuantileSpec::from_tau(0.3);
  const double sigma = 1.2, w_scalar = 0.8, m0 = 0.5, c0 = 2.0;
  const std::vector<double> y{1.0, -0.5};
  const VectorXd u = (VectorXd(2) << 0.9, 1.7).finished();

  auto spec = dqlm::build_local_level(
      dqlm::FixedEvolution{MatrixXd::Constant(1, 1, w_scalar), 0.0});
  dqlm::PriorSpec prior;
  prior.m0 = VectorXd::Constant(1, m0);
  prior.C0 = MatrixXd::Constant(1, 1, c0);

  // precision-matrix assembly oracle
  MatrixXd Q = MatrixXd::Zero(3, 3);
  VectorXd b = VectorXd::Zero(3);
  Q(0, 0) += 1.0 / c0;
  b(0) += m0 / c0;
  for (int t = 1; t <= 2; ++t) {
    Q(t, t) += 1.0 / w_scalar;
    Q(t - 1, t - 1) += 1.0 / w_scalar;
    Q(t, t - 1) -= 1.0 / w_scalar;
    Q(t - 1, t) -= 1.0 / w_scalar;
    const double v_t = q.b_tau * sigma * u[t - 1];
    Q(t, t) += 1.0 / v_t;
    b(t) += (y[t - 1] - q.a_tau * u[t - 1]) / v_t;
  }
  const MatrixXd cov = Q.inverse();
  const VectorXd mean = cov * b;

  dqlm::detail::EvolutionContext ev;
  ev.kind = dqlm::detail::EvolutionContext::Kind::fixed;
  const MatrixXd w = MatrixXd::Constant(1, 1, w_scalar);
  ev.w_fixed = &w;
  dqlm::ForwardPass pass;
  pass.run(make_series(y), spec, prior, q, u, sigma, ev);

  Rng rng(2718);
  const int n = 200'000;
  VectorXd sum = VectorXd::Zero(3);
  MatrixXd sum2 = MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const MatrixXd draw = dqlm::ffbs_sample(pass, spec, rng);
    const VectorXd x = draw.col(0);
    sum += x;
    sum2 += x * x.transpose();
  }
  const VectorXd mc_mean = sum / n;
  const MatrixXd mc_cov = sum2 / n - mc_mean * mc_mean.transpose();
  for (int i = 0; i < 3; ++i) {
    const double se = std::sqrt(cov(i, i) / n);
    CHECK(std::abs(mc_mean(i) - mean(i)) < 5.0 * se);
    CHECK(mc_cov(i, i) == Catch::Approx(cov(i, i)).epsilon(0.03));
  }
  CHECK(mc_cov(0, 2) == Catch::Approx(cov(0, 2)).margin(0.02));
}

TEST_CASE("scale sampler formula collapses") {
  Rng rng(5);
  SECTION("no data returns a prior draw") {
    const double n_phi = 6.0, s_phi = 4.0;
    double sum = 0.0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) {
      sum += dqlm::sample_phi(VectorXd(0), VectorXd(0),
                              QuantileSpec::from_tau(0.5), n_phi, s_phi, rng);
    }
    // IGa(3, 2) mean = 2 / (3 - 1) = 1
    CHECK(sum / n == Catch::Approx(1.0).epsilon(0.05));
  }
  SECTION("zero residuals at the median leave s* = s_phi + 2 sum U") {
    const double n_phi = 4.0, s_phi = 1.0;
    const VectorXd u = VectorXd::Constant(3, 0.5);
    const double s_star = s_phi + 2.0 * u.sum();
    const double n_star = n_phi + 9.0;
    double sum = 0.0;
    const int n = 200'000;
    for (int i = 0; i < n; ++i) {
      sum += dqlm::sample_phi(VectorXd::Zero(3), u,
                              QuantileSpec::from_tau(0.5), n_phi, s_phi, rng);
    }
    CHECK(sum / n ==
          Catch::Approx(0.5 * s_star / (0.5 * n_star - 1.0)).epsilon(0.02));
  }
}

TEST_CASE("latent weight sampler at zero residual") {
  // chi* = 0 reduces the full conditional to Ga(1/2, kappa*/2); at the
  // median kappa* = 2 / sigma so the mean is sigma / 2
  Rng rng(6);
  const double sigma = 1.6;
  double sum = 0.0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    sum += dqlm::sample_u(2.0, 2.0, sigma, QuantileSpec::from_tau(0.5), rng);
  }
  CHECK(sum / n == Catch::Approx(0.5 * sigma).epsilon(0.02));
}

TEST_CASE("evolution covariance sampler") {
  Rng rng(7);
  SECTION("zero innovation keeps S_w; scalar case is inverse gamma") {
    const double n_w = 6.0, s_w = 2.0;
    double sum = 0.0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) {
      sum += dqlm::sample_w(VectorXd::Zero(1), n_w,
                            MatrixXd::Constant(1, 1, s_w), rng)(0, 0);
    }
    // df = n_w + p + 1 = 8; IW(8, 2) for p = 1 is IGa(4, 1): mean 1/3
    CHECK(sum / n == Catch::Approx(s_w / (8.0 - 2.0)).epsilon(0.03));
  }
  SECTION("matrix draws are SPD and finite") {
    const MatrixXd s_w = 0.1 * MatrixXd::Identity(4, 4);
    const VectorXd innovation =
        (VectorXd(4) << 0.5, -0.2, 1.0, 0.1).finished();
    for (int i = 0; i < 50; ++i) {
      const MatrixXd w = dqlm::sample_w(innovation, 8.0, s_w, rng);
      CHECK(dqlm::is_spd(w));
    }
  }
}

TEST_CASE("student-t mixing weight at zero innovation") {
  Rng rng(8);
  const double nu = 2.5;
  double sum = 0.0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    sum += dqlm::sample_lambda(0.0, nu, 1, rng);
  }
  CHECK(sum / n == Catch::Approx((nu + 1.0) / nu).epsilon(0.02));
}

TEST_CASE("constant series concentrates the median linear predictor") {
  auto data = make_series(std::vector<double>(30, 5.0));
  auto spec = dqlm::build_local_level(dqlm::DiscountEvolution{0.95});
  dqlm::PriorSpec prior;
  prior.m0 = VectorXd::Constant(1, 5.0);
  prior.C0 = MatrixXd::Constant(1, 1, 1.0);
  prior.n_phi = 1.0;
  prior.s_phi = 0.1;

  dqlm::McmcConfig cfg;
  cfg.sweeps = 800;
  cfg.burn_in = 200;
  cfg.thin = 1;
  cfg.seed = 99;
  auto draws = dqlm::run_gibbs(data, spec, prior,
                               QuantileSpec::from_tau(0.5), cfg);
  REQUIRE(draws.size() == 600);
  const double post_mean = draws.linpred.mean();
  CHECK(post_mean == Catch::Approx(5.0).margin(0.05));
}

TEST_CASE("gibbs chain is reproducible by seed") {
  Rng sim_rng(100);
  auto path = dqlm::simulate_al_dlm(
      dqlm::build_local_level(dqlm::DiscountEvolution{}),
      0.01 * MatrixXd::Identity(1, 1), 1.0, 0.5, VectorXd::Zero(1), 40,
      sim_rng);

  auto spec = dqlm::build_local_level(dqlm::DiscountEvolution{0.95});
  auto prior = dqlm::PriorSpec::diffuse(1);
  dqlm::McmcConfig cfg;
  cfg.sweeps = 120;
  cfg.burn_in = 40;
  cfg.thin = 2;
  cfg.seed = 321;

  auto a = dqlm::run_gibbs(path.data, spec, prior,
                           QuantileSpec::from_tau(0.3), cfg);
  auto b = dqlm::run_gibbs(path.data, spec, prior,
                           QuantileSpec::from_tau(0.3), cfg);
  REQUIRE(a.size() == b.size());
  CHECK((a.linpred - b.linpred).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("posterior scale tracks the data-generating scale") {
  // local level AL data with known sigma; wide tolerance, seeded
  const double sigma_true = 2.0;
  Rng sim_rng(2024);
  auto path = dqlm::simulate_al_dlm(
      dqlm::build_local_level(dqlm::DiscountEvolution{}),
      0.0004 * MatrixXd::Identity(1, 1), sigma_true, 0.3, VectorXd::Zero(1),
      300, sim_rng);

  auto spec = dqlm::build_local_level(dqlm::DiscountEvolution{0.98});
  auto prior = dqlm::PriorSpec::diffuse(1);
  dqlm::McmcConfig cfg;
  cfg.sweeps = 1500;
  cfg.burn_in = 500;
  cfg.thin = 2;
  cfg.seed = 11;
  auto draws = dqlm::run_gibbs(path.data, spec, prior,
                               QuantileSpec::from_tau(0.3), cfg);
  CHECK(draws.sigma.mean() == Catch::Approx(sigma_true).epsilon(0.25));
}

TEST_CASE("student-t run completes with healthy MH acceptance") {
  Rng sim_rng(55);
  auto path = dqlm::simulate_dlm(
      dqlm::build_local_level(dqlm::DiscountEvolution{}),
      4.0 * MatrixXd::Identity(1, 1), 25.0, VectorXd::Zero(1), 60, sim_rng);

  auto spec = dqlm::build_local_level(dqlm::StudentTEvolution{2.5, 25.0, 1.0});
  auto prior = dqlm::PriorSpec::diffuse(1);
  dqlm::McmcConfig cfg;
  cfg.sweeps = 600;
  cfg.burn_in = 200;
  cfg.thin = 1;
  cfg.seed = 77;
  auto draws = dqlm::run_gibbs(path.data, spec, prior,
                               QuantileSpec::from_tau(0.5), cfg);
  REQUIRE(draws.size() == 400);
  CHECK(draws.lambda.allFinite());
  CHECK((draws.w_scalar.array() > 0.0).all());
  CHECK(draws.w_mh_acceptance > 0.1);
  CHECK(draws.w_mh_acceptance < 0.7);
}

TEST_CASE("config validation") {
  dqlm::McmcConfig bad;
  bad.sweeps = 100;
  bad.burn_in = 100;
  CHECK_THROWS_AS(bad.validate(), dqlm::DomainError);
  bad.burn_in = 10;
  bad.thin = 0;
  CHECK_THROWS_AS(bad.validate(), dqlm::DomainError);
}
