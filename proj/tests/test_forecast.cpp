#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "dqlm/forecast.hpp"
#include "dqlm/mcmc.hpp"
#include "dqlm/seqfilter.hpp"
#include "dqlm/simulate.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using dqlm::QuantileSpec;

namespace {

dqlm::PriorSpec seq_prior(int p, double c0 = 1.0) {
  auto prior = dqlm::PriorSpec::diffuse(p, c0);
  return prior;
}

}  // namespace

TEST_CASE("sequential k=1 forecast equals the filter's next-step predictive") {
  dqlm::Rng rng(31);
  auto path = dqlm::simulate_al_dlm(
      dqlm::build_local_level(dqlm::DiscountEvolution{}),
      0.01 * MatrixXd::Identity(1, 1), 1.0, 0.3, VectorXd::Zero(1), 30, rng);
  auto spec = dqlm::build_local_level(dqlm::DiscountEvolution{0.9});
  auto prior = seq_prior(1, 10.0);
  const QuantileSpec q = QuantileSpec::from_tau(0.3);
  const double phi = 2.0;

  // filter the first 29 points; the filter's own step 30 predictive is the
  // oracle for the k = 1 forecast from the 29-point state
  dqlm::TimeSeriesData head;
  head.y.assign(path.data.y.begin(), path.data.y.end() - 1);
  auto partial = dqlm::run_filter(head, spec, prior, q, phi);
  auto fc = dqlm::forecast_seq(partial.final_state, spec, q, phi, 1, 29);

  dqlm::SequentialFilter filter(spec, prior, q, phi);
  for (double y : head.y) filter.step(y);
  auto rec = filter.step(path.data.y.back());

  CHECK(fc.steps[0].pred_mean == Catch::Approx(rec.f).margin(1e-12));
  CHECK(fc.steps[0].pred_var == Catch::Approx(rec.q / phi).margin(1e-12));
}

TEST_CASE("frozen dynamics keep sequential forecasts constant") {
  auto spec = dqlm::build_local_level(
      dqlm::FixedEvolution{MatrixXd::Zero(1, 1), 0.0});
  dqlm::AugmentedState state =
      dqlm::AugmentedState::from_prior(seq_prior(1, 0.5), 1);
  auto fc = dqlm::forecast_seq(state, spec, QuantileSpec::from_tau(0.5), 1.0,
                               5, 0);
  for (const auto& s : fc.steps) {
    CHECK(s.pred_mean == Catch::Approx(fc.steps[0].pred_mean));
    CHECK(s.pred_var == Catch::Approx(fc.steps[0].pred_var));
  }
}

TEST_CASE("local-level forecast variance grows affinely") {
  // closed-form scalar recursion: R_k = C/delta + (k-1) W_frozen with
  // W_frozen = C (1-delta)/delta; q_k adds the constant weight terms
  const double delta = 0.9, phi = 1.5;
  auto spec = dqlm::build_local_level(dqlm::DiscountEvolution{delta});
  dqlm::AugmentedState state =
      dqlm::AugmentedState::from_prior(seq_prior(1, 2.0), 1);
  // pin the u block so the weight terms are constant across horizons
  state.C(1, 1) = 1e-9;

  auto fc = dqlm::forecast_seq(state, spec, QuantileSpec::from_tau(0.5), phi,
                               6, 0);
  const double c0 = 2.0;
  const double w_frozen = c0 * (1.0 - delta) / delta;
  const double weight_term = fc.steps[0].pred_var - (c0 / delta) / phi;
  for (int k = 1; k <= 6; ++k) {
    const double r_k = c0 / delta + (k - 1) * w_frozen;
    CHECK(fc.steps[k - 1].pred_var ==
          Catch::Approx(r_k / phi + weight_term).epsilon(1e-9));
  }
  // strictly increasing in the horizon
  for (int k = 1; k < 6; ++k) {
    CHECK(fc.steps[k].pred_var > fc.steps[k - 1].pred_var);
  }
}

TEST_CASE("mcmc forecast with frozen dynamics repeats the terminal draw") {
  dqlm::Rng rng(17);
  auto path = dqlm::simulate_al_dlm(
      dqlm::build_local_level(dqlm::DiscountEvolution{}),
      0.01 * MatrixXd::Identity(1, 1), 1.0, 0.5, VectorXd::Zero(1), 25, rng);
  auto spec = dqlm::build_local_level(
      dqlm::FixedEvolution{MatrixXd::Zero(1, 1), 0.0});
  auto prior = dqlm::PriorSpec::diffuse(1);
  dqlm::McmcConfig cfg;
  cfg.sweeps = 150;
  cfg.burn_in = 50;
  cfg.thin = 1;
  cfg.seed = 3;
  auto draws = dqlm::run_gibbs(path.data, spec, prior,
                               QuantileSpec::from_tau(0.5), cfg);

  dqlm::Rng fc_rng(5);
  auto fc = dqlm::forecast_mcmc(draws, spec, QuantileSpec::from_tau(0.5), 3,
                                25, fc_rng);
  for (int i = 0; i < draws.size(); ++i) {
    const double terminal = draws.theta[i](25, 0);
    for (int k = 0; k < 3; ++k) {
      CHECK(fc.linpred_draws(i, k) == Catch::Approx(terminal).margin(1e-12));
    }
  }
}

TEST_CASE("mcmc k=1 linear predictor mean is the propagated posterior mean") {
  dqlm::Rng rng(18);
  auto path = dqlm::simulate_al_dlm(
      dqlm::build_local_level(dqlm::DiscountEvolution{}),
      0.04 * MatrixXd::Identity(1, 1), 1.0, 0.5, VectorXd::Zero(1), 30, rng);
  auto spec = dqlm::build_local_level(dqlm::DiscountEvolution{0.9});
  auto prior = dqlm::PriorSpec::diffuse(1);
  dqlm::McmcConfig cfg;
  cfg.sweeps = 400;
  cfg.burn_in = 100;
  cfg.thin = 1;
  cfg.seed = 4;
  auto draws = dqlm::run_gibbs(path.data, spec, prior,
                               QuantileSpec::from_tau(0.5), cfg);

  dqlm::Rng fc_rng(6);
  auto fc = dqlm::forecast_mcmc(draws, spec, QuantileSpec::from_tau(0.5), 1,
                                30, fc_rng);
  double mean_gt = 0.0;
  for (int i = 0; i < draws.size(); ++i) mean_gt += draws.theta[i](30, 0);
  mean_gt /= draws.size();
  // evolution noise is mean zero; MC error from the added noise draws
  CHECK(fc.steps[0].linpred_mean == Catch::Approx(mean_gt).margin(0.05));
}

TEST_CASE("mcmc forecast is reproducible with a seeded rng") {
  dqlm::Rng rng(19);
  auto path = dqlm::simulate_al_dlm(
      dqlm::build_local_level(dqlm::DiscountEvolution{}),
      0.04 * MatrixXd::Identity(1, 1), 1.0, 0.5, VectorXd::Zero(1), 20, rng);
  auto spec = dqlm::build_local_level(dqlm::DiscountEvolution{0.9});
  auto prior = dqlm::PriorSpec::diffuse(1);
  dqlm::McmcConfig cfg;
  cfg.sweeps = 120;
  cfg.burn_in = 20;
  cfg.thin = 2;
  cfg.seed = 5;
  auto draws = dqlm::run_gibbs(path.data, spec, prior,
                               QuantileSpec::from_tau(0.5), cfg);
  dqlm::Rng r1(123), r2(123);
  auto a = dqlm::forecast_mcmc(draws, spec, QuantileSpec::from_tau(0.5), 4,
                               20, r1);
  auto b = dqlm::forecast_mcmc(draws, spec, QuantileSpec::from_tau(0.5), 4,
                               20, r2);
  CHECK((a.linpred_draws - b.linpred_draws).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("window aggregation and horizon validation") {
  CHECK_THROWS_AS(
      dqlm::forecast_seq(
          dqlm::AugmentedState::from_prior(seq_prior(1), 1),
          dqlm::build_local_level(dqlm::DiscountEvolution{0.9}),
          QuantileSpec::from_tau(0.5), 1.0, 0, 0),
      dqlm::DomainError);
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7};
  auto sums = dqlm::window_sum(v, 3);
  REQUIRE(sums.size() == 2);
  CHECK(sums[0] == 6.0);
  CHECK(sums[1] == 15.0);
}
