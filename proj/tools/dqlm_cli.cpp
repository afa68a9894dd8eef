// Command-line front end: simulate synthetic series, fit either engine over
// a quantile grid, forecast from fit artifacts, and run the replication
// presets. Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "dqlm/io/replicate.hpp"
#include "dqlm/io/runner.hpp"
#include "dqlm/simulate.hpp"
#include "dqlm/version.hpp"

namespace {

struct SimulateArgs {
  std::string preset = "trend-seasonal";
  int T = 100;
  std::uint64_t seed = 1;
  std::string out = "sim";
  double sigma = 7.0;
  double tau = 0.5;
  double w = 0.01;
  double phi = 50.0;
};

int cmd_simulate(const SimulateArgs& args) {
  std::filesystem::create_directories(args.out);
  dqlm::SimulatedPath path;
  if (args.preset == "trend-seasonal") {
    path = dqlm::simulate_trend_seasonal_study(args.T, args.seed);
  } else if (args.preset == "local-level-al") {
    dqlm::Rng rng(args.seed);
    path = dqlm::simulate_al_dlm(
        dqlm::build_local_level(),
        args.w * Eigen::MatrixXd::Identity(1, 1), args.sigma, args.tau,
        Eigen::VectorXd::Zero(1), args.T, rng);
  } else if (args.preset == "gamma-regression") {
    dqlm::Rng rng(args.seed);
    path = dqlm::simulate_gamma_regression(args.T, args.phi, rng);
  } else {
    throw dqlm::DomainError("unknown simulate preset: " + args.preset);
  }
  dqlm::write_simulation(args.out, path);
  if (path.data.covariates.cols() > 0) {
    // rewrite data.csv with the covariate column included
    dqlm::CsvTable data;
    data.header = {"t", "y", "x"};
    for (int t = 0; t < path.data.length(); ++t) {
      data.add_row({path.data.label(t), dqlm::format_double(path.data.y[t]),
                    dqlm::format_double(path.data.covariates(t, 0))});
    }
    dqlm::write_csv((std::filesystem::path(args.out) / "data.csv").string(),
                    data);
  }
  std::cout << "wrote " << args.out << "/data.csv and truth.csv ("
            << args.preset << ", T=" << args.T << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dqlm: dynamic quantile linear models"};
  app.set_version_flag("--version", dqlm::version_string);
  app.require_subcommand(0, 1);

  // --- simulate ---
  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate synthetic data");
  simulate->add_option("--preset", sim.preset,
                       "trend-seasonal | local-level-al | gamma-regression");
  simulate->add_option("--T", sim.T, "series length");
  simulate->add_option("--seed", sim.seed, "rng seed");
  simulate->add_option("--out", sim.out, "output directory");
  simulate->add_option("--sigma", sim.sigma, "AL scale (local-level-al)");
  simulate->add_option("--tau", sim.tau, "AL quantile (local-level-al)");
  simulate->add_option("--w", sim.w, "evolution variance (local-level-al)");
  simulate->add_option("--phi", sim.phi, "gamma shape (gamma-regression)");

  // --- fit ---
  std::string fit_config;
  dqlm::RunConfig overrides;
  std::vector<double> fit_taus;
  std::string covariates_csv;
  bool flag_log = false;
  auto* fit = app.add_subcommand("fit", "fit the model on a CSV series");
  fit->add_option("--config", fit_config, "JSON config file");
  fit->add_option("--input", overrides.input, "input CSV path");
  fit->add_option("--time-col", overrides.columns.time_column, "time column");
  fit->add_option("--y-col", overrides.columns.y_column, "response column");
  fit->add_option("--covariates", covariates_csv,
                  "comma-separated covariate columns");
  fit->add_option("--engine", overrides.engine, "mcmc | sequential");
  fit->add_option("--tau", fit_taus, "quantile grid")->delimiter(',');
  fit->add_option("--model", overrides.model_type,
                  "local-level | trend-seasonal | local-linear-quarterly | "
                  "dynamic-regression");
  fit->add_option("--period", overrides.period, "harmonic period");
  fit->add_option("--evolution", overrides.evolution_policy,
                  "discount | inverse-wishart | fixed | student-t");
  fit->add_option("--delta", overrides.delta, "discount factor");
  fit->add_option("--sweeps", overrides.mcmc.sweeps, "MCMC sweeps");
  fit->add_option("--burn-in", overrides.mcmc.burn_in, "MCMC burn-in");
  fit->add_option("--thin", overrides.mcmc.thin, "MCMC thinning");
  fit->add_option("--phi-init", overrides.phi_inv_init,
                  "initial phi^{-1} for the sequential engine");
  fit->add_option("--out-dir", overrides.output_dir, "output directory");
  fit->add_option("--seed", overrides.seed, "rng seed");
  fit->add_flag("--log", flag_log, "fit on the log scale");

  // --- forecast ---
  std::string fc_dir;
  int fc_horizon = 0;
  int fc_window = 0;
  std::uint64_t fc_seed = 7;
  auto* forecast = app.add_subcommand("forecast",
                                      "forecast from fit artifacts");
  forecast->add_option("--fit-dir", fc_dir, "directory of a previous fit")
      ->required();
  forecast->add_option("--horizon", fc_horizon, "steps ahead (>= 1)")
      ->required();
  forecast->add_option("--aggregate-window", fc_window,
                       "sum predictive means over windows of this size");
  forecast->add_option("--seed", fc_seed, "rng seed (mcmc propagation)");

  // --- replicate ---
  std::string preset;
  std::string rep_out = "replication";
  int rep_reps = 50;
  dqlm::McmcConfig rep_mcmc;
  std::uint64_t rep_seed = 20240115;
  auto* replicate = app.add_subcommand(
      "replicate", "run a study preset end to end");
  replicate->add_option("preset", preset, "trend-seasonal | gamma-coverage")
      ->required();
  replicate->add_option("--out-dir", rep_out, "output directory");
  replicate->add_option("--reps", rep_reps, "replications (gamma-coverage)");
  replicate->add_option("--sweeps", rep_mcmc.sweeps, "MCMC sweeps");
  replicate->add_option("--burn-in", rep_mcmc.burn_in, "MCMC burn-in");
  replicate->add_option("--thin", rep_mcmc.thin, "MCMC thinning");
  replicate->add_option("--seed", rep_seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);

    if (fit->parsed()) {
      dqlm::RunConfig config = fit_config.empty()
                                   ? dqlm::RunConfig{}
                                   : dqlm::RunConfig::from_file(fit_config);
      // flag overrides win over the config file
      for (const auto* opt : fit->parse_order()) {
        const std::string name = opt->get_name();
        if (name == "--input") config.input = overrides.input;
        if (name == "--time-col") {
          config.columns.time_column = overrides.columns.time_column;
        }
        if (name == "--y-col") {
          config.columns.y_column = overrides.columns.y_column;
        }
        if (name == "--covariates") {
          config.columns.covariate_columns.clear();
          std::istringstream in(covariates_csv);
          std::string part;
          while (std::getline(in, part, ',')) {
            config.columns.covariate_columns.push_back(part);
          }
        }
        if (name == "--engine") config.engine = overrides.engine;
        if (name == "--tau") config.quantiles = fit_taus;
        if (name == "--model") config.model_type = overrides.model_type;
        if (name == "--period") config.period = overrides.period;
        if (name == "--evolution") {
          config.evolution_policy = overrides.evolution_policy;
        }
        if (name == "--delta") config.delta = overrides.delta;
        if (name == "--sweeps") config.mcmc.sweeps = overrides.mcmc.sweeps;
        if (name == "--burn-in") config.mcmc.burn_in = overrides.mcmc.burn_in;
        if (name == "--thin") config.mcmc.thin = overrides.mcmc.thin;
        if (name == "--phi-init") config.phi_inv_init = overrides.phi_inv_init;
        if (name == "--out-dir") config.output_dir = overrides.output_dir;
        if (name == "--seed") config.seed = overrides.seed;
        if (name == "--log") config.log_transform = flag_log;
      }
      if (config.input.empty()) {
        throw dqlm::DomainError("no input file given (--input or config)");
      }
      const auto artifacts = dqlm::run_fit(config);
      std::cout << "fit complete: " << artifacts.files.size()
                << " files in " << artifacts.directory.string() << "\n";
      if (config.forecast_horizon > 0) {
        dqlm::run_forecast(artifacts.directory.string(),
                           config.forecast_horizon, 0, config.seed);
        std::cout << "forecast horizon " << config.forecast_horizon
                  << " written\n";
      }
      return 0;
    }

    if (forecast->parsed()) {
      const auto files =
          dqlm::run_forecast(fc_dir, fc_horizon, fc_window, fc_seed);
      std::cout << "wrote " << files.size() << " forecast tables in "
                << fc_dir << "\n";
      return 0;
    }

    if (replicate->parsed()) {
      if (preset == "trend-seasonal") {
        const auto rep =
            dqlm::replicate_trend_seasonal(rep_out, rep_mcmc, 100, rep_seed);
        std::cout << "trend-seasonal replication in " << rep_out
                  << ": median coverage " << rep.coverage_median << "\n";
      } else if (preset == "gamma-coverage") {
        const auto study = dqlm::replicate_gamma_coverage(
            rep_out, rep_reps, rep_mcmc, rep_seed);
        std::cout << "gamma coverage study in " << rep_out << ": log closer "
                  << study.log_closer_cells << " cells, raw closer "
                  << study.raw_closer_cells << "\n";
      } else {
        throw dqlm::DomainError("unknown preset: " + preset);
      }
      return 0;
    }

    std::cout << app.help();
    return 0;
  } catch (const dqlm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const dqlm::DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
