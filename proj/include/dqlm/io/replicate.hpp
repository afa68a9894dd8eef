#ifndef DQLM_IO_REPLICATE_HPP
#define DQLM_IO_REPLICATE_HPP

#include <boost/math/distributions/gamma.hpp>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dqlm/io/runner.hpp"
#include "dqlm/simulate.hpp"

namespace dqlm {

// Replication presets matching the synthetic studies: a trend+seasonal
// Gaussian series fitted by both engines across a quantile grid, and the
// static-model coverage study on gamma data at several skewness levels.

struct TrendSeasonalReplication {
  double coverage_median = 0.0;          // truth coverage at tau = 0.5
  std::vector<double> correlation;       // per tau, mcmc vs sequential means
  std::vector<double> containment;       // per tau, seq means in mcmc bands
  std::filesystem::path directory;
};

inline Eigen::MatrixXd trend_seasonal_truth_w() {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4, 4);
  W(0, 0) = 0.02;
  W(0, 1) = 0.01;
  W(1, 0) = 0.01;
  W(1, 1) = 0.01;
  W(2, 2) = 1.0;
  W(3, 3) = 1.0;
  return W;
}

inline SimulatedPath simulate_trend_seasonal_study(int T, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd theta0(4);
  theta0 << 20.0, 0.5, 5.0, 0.0;
  return simulate_dlm(build_trend_seasonal(12), trend_seasonal_truth_w(),
                      49.0, theta0, T, rng);
}

inline void write_simulation(const std::filesystem::path& dir,
                             const SimulatedPath& path) {
  CsvTable data;
  data.header = {"t", "y"};
  for (int t = 0; t < path.data.length(); ++t) {
    data.add_row({path.data.label(t), format_double(path.data.y[t])});
  }
  write_csv((dir / "data.csv").string(), data);

  CsvTable truth;
  truth.header = {"t", "linear_predictor"};
  for (int j = 0; j < path.states.cols(); ++j) {
    truth.header.push_back("theta" + std::to_string(j));
  }
  for (int t = 1; t <= path.data.length(); ++t) {
    std::vector<std::string> row{path.data.label(t - 1),
                                 format_double(path.linear_predictor[t - 1])};
    for (int j = 0; j < path.states.cols(); ++j) {
      row.push_back(format_double(path.states(t, j)));
    }
    truth.add_row(std::move(row));
  }
  write_csv((dir / "truth.csv").string(), truth);
}

inline TrendSeasonalReplication replicate_trend_seasonal(
    const std::string& out_dir, const McmcConfig& mcmc_config,
    int T = 100, std::uint64_t seed = 20240115) {
  TrendSeasonalReplication rep;
  rep.directory = out_dir;
  std::filesystem::create_directories(rep.directory);

  const SimulatedPath path = simulate_trend_seasonal_study(T, seed);
  write_simulation(rep.directory, path);

  RunConfig mcmc_cfg;
  mcmc_cfg.engine = "mcmc";
  mcmc_cfg.model_type = "trend-seasonal";
  mcmc_cfg.period = 12;
  mcmc_cfg.evolution_policy = "inverse-wishart";
  mcmc_cfg.n_w = 8.0;
  mcmc_cfg.s_w_scale = 0.1;
  mcmc_cfg.mcmc = mcmc_config;
  mcmc_cfg.output_dir = (rep.directory / "mcmc").string();
  mcmc_cfg.seed = seed + 1;
  run_fit(mcmc_cfg, path.data);

  RunConfig seq_cfg = mcmc_cfg;
  seq_cfg.engine = "sequential";
  seq_cfg.evolution_policy = "discount";
  seq_cfg.delta = 0.95;
  seq_cfg.output_dir = (rep.directory / "sequential").string();
  run_fit(seq_cfg, path.data);

  // comparison tables and the summary statistics
  Json summary;
  for (double tau : mcmc_cfg.quantiles) {
    const std::string tag = detail::tau_tag(tau);
    const CsvTable mc =
        read_csv((rep.directory / "mcmc" / ("fit_tau" + tag + ".csv"))
                     .string());
    const CsvTable sq =
        read_csv((rep.directory / "sequential" / ("fit_tau" + tag + ".csv"))
                     .string());
    CsvTable cmp;
    cmp.header = {"t", "truth", "mcmc_mean", "mcmc_lo", "mcmc_hi",
                  "seq_mean"};
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    int contained = 0, covered = 0;
    for (int t = 0; t < T; ++t) {
      const double truth = path.linear_predictor[t];
      const double mcmc_mean = std::stod(mc.rows[t][1]);
      const double mcmc_lo = std::stod(mc.rows[t][3]);
      const double mcmc_hi = std::stod(mc.rows[t][4]);
      const double seq_mean = std::stod(sq.rows[t][1]);
      cmp.add_row({path.data.label(t), format_double(truth),
                   format_double(mcmc_mean), format_double(mcmc_lo),
                   format_double(mcmc_hi), format_double(seq_mean)});
      sx += mcmc_mean;
      sy += seq_mean;
      sxx += mcmc_mean * mcmc_mean;
      syy += seq_mean * seq_mean;
      sxy += mcmc_mean * seq_mean;
      if (seq_mean >= mcmc_lo && seq_mean <= mcmc_hi) ++contained;
      if (truth >= mcmc_lo && truth <= mcmc_hi) ++covered;
    }
    write_csv((rep.directory / ("comparison_tau" + tag + ".csv")).string(),
              cmp);
    const double corr =
        (T * sxy - sx * sy) /
        std::sqrt((T * sxx - sx * sx) * (T * syy - sy * sy));
    rep.correlation.push_back(corr);
    rep.containment.push_back(static_cast<double>(contained) / T);
    if (tau == 0.5) rep.coverage_median = static_cast<double>(covered) / T;
    summary[tag] = {{"correlation", corr},
                    {"containment", static_cast<double>(contained) / T},
                    {"coverage_of_truth", static_cast<double>(covered) / T}};
  }
  {
    std::ofstream out((rep.directory / "summary.json").string());
    out << summary.dump(2) << "\n";
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct CoverageCell {
  double shape;
  int T;
  bool log_scale;
  double tau;
  double coverage;  // fraction of replications covering the true quantile
  double rmae;      // relative mean absolute error of the point estimate
};

struct CoverageStudy {
  std::vector<CoverageCell> cells;
  int log_closer_cells = 0;   // per (shape, T, tau): log coverage closer to 95
  int raw_closer_cells = 0;
  bool rmae_improves_with_t = true;  // in every log-scale cell
  std::filesystem::path directory;
};

/// Static-model coverage study: replicated gamma samples at three skewness
/// levels, fitted on the raw and the log scale, empirical coverage of the
/// 95% bands for the true quantiles plus the relative MAE of the point
/// estimates.
inline CoverageStudy replicate_gamma_coverage(
    const std::string& out_dir, int replications,
    const McmcConfig& mcmc_config, std::uint64_t seed = 20240116,
    const std::vector<double>& shapes = {2.0, 8.0, 32.0},
    const std::vector<int>& lengths = {100, 250},
    const std::vector<double>& taus = {0.1, 0.5, 0.9}) {
  if (replications < 2) throw DomainError("need at least 2 replications");
  CoverageStudy study;
  study.directory = out_dir;
  std::filesystem::create_directories(study.directory);

  const double mean_level = 10.0;
  auto spec = build_local_level(
      FixedEvolution{Eigen::MatrixXd::Zero(1, 1), 0.0});
  auto prior = PriorSpec::diffuse(1);

  for (double shape : shapes) {
    boost::math::gamma_distribution<double> law(shape, mean_level / shape);
    for (int T : lengths) {
      // accumulators: [log?][tau] -> (covered count, sum rel abs error)
      std::vector<std::vector<int>> covered(2,
                                            std::vector<int>(taus.size(), 0));
      std::vector<std::vector<double>> abs_err(
          2, std::vector<double>(taus.size(), 0.0));

      for (int rep = 0; rep < replications; ++rep) {
        Rng rng(seed + 7919 * rep + 31 * T + static_cast<int>(100 * shape));
        TimeSeriesData data;
        data.y.resize(T);
        for (int t = 0; t < T; ++t) {
          data.y[t] = rng.gamma(shape, shape / mean_level);
        }

        for (int log_scale = 0; log_scale < 2; ++log_scale) {
          TimeSeriesData fit_data = data;
          if (log_scale) {
            for (double& v : fit_data.y) v = std::log(v);
          }
          for (size_t qi = 0; qi < taus.size(); ++qi) {
            const double q_true = boost::math::quantile(law, taus[qi]);
            McmcConfig mc = mcmc_config;
            mc.seed = seed + 104729 * rep + 13 * qi + 2 * log_scale;
            const McmcDraws draws =
                run_gibbs(fit_data, spec, prior,
                          QuantileSpec::from_tau(taus[qi]), mc);
            // static model: summarize the terminal linear predictor
            const int n = draws.size();
            std::vector<double> col(n);
            Eigen::Map<Eigen::VectorXd>(col.data(), n) =
                draws.linpred.col(T - 1);
            double mean = draws.linpred.col(T - 1).mean();
            double lo = detail::percentile_of(col, 0.025);
            double hi = detail::percentile_of(col, 0.975);
            if (log_scale) {
              mean = std::exp(mean);
              lo = std::exp(lo);
              hi = std::exp(hi);
            }
            if (q_true >= lo && q_true <= hi) ++covered[log_scale][qi];
            abs_err[log_scale][qi] += std::abs(mean - q_true) / q_true;
          }
        }
      }

      for (int log_scale = 0; log_scale < 2; ++log_scale) {
        for (size_t qi = 0; qi < taus.size(); ++qi) {
          CoverageCell cell;
          cell.shape = shape;
          cell.T = T;
          cell.log_scale = log_scale == 1;
          cell.tau = taus[qi];
          cell.coverage =
              static_cast<double>(covered[log_scale][qi]) / replications;
          cell.rmae = abs_err[log_scale][qi] / replications;
          study.cells.push_back(cell);
        }
      }
    }
  }

  // cell-level comparisons
  const auto find_cell = [&](double shape, int T, bool log_scale,
                             double tau) -> const CoverageCell& {
    for (const auto& c : study.cells) {
      if (c.shape == shape && c.T == T && c.log_scale == log_scale &&
          c.tau == tau) {
        return c;
      }
    }
    throw NumericalError("coverage cell lookup failed");
  };
  for (double shape : shapes) {
    for (int T : lengths) {
      for (double tau : taus) {
        const double raw_gap =
            std::abs(find_cell(shape, T, false, tau).coverage - 0.95);
        const double log_gap =
            std::abs(find_cell(shape, T, true, tau).coverage - 0.95);
        if (log_gap < raw_gap) {
          ++study.log_closer_cells;
        } else if (raw_gap < log_gap) {
          ++study.raw_closer_cells;
        }
      }
    }
  }
  if (lengths.size() >= 2) {
    for (double shape : shapes) {
      for (double tau : taus) {
        const double rmae_short =
            find_cell(shape, lengths.front(), true, tau).rmae;
        const double rmae_long =
            find_cell(shape, lengths.back(), true, tau).rmae;
        if (!(rmae_long < rmae_short)) study.rmae_improves_with_t = false;
      }
    }
  }

  CsvTable table;
  table.header = {"shape", "skewness", "T", "scale", "tau", "coverage",
                  "rmae"};
  for (const auto& c : study.cells) {
    table.add_row({format_double(c.shape),
                   format_double(2.0 / std::sqrt(c.shape)),
                   std::to_string(c.T), c.log_scale ? "log" : "raw",
                   format_double(c.tau), format_double(c.coverage),
                   format_double(c.rmae)});
  }
  write_csv((study.directory / "coverage.csv").string(), table);

  Json summary;
  summary["replications"] = replications;
  summary["log_closer_cells"] = study.log_closer_cells;
  summary["raw_closer_cells"] = study.raw_closer_cells;
  summary["rmae_improves_with_t_log_scale"] = study.rmae_improves_with_t;
  {
    std::ofstream out((study.directory / "summary.json").string());
    out << summary.dump(2) << "\n";
  }
  return study;
}

}  // namespace dqlm

#endif  // DQLM_IO_REPLICATE_HPP
