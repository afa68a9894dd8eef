#ifndef DQLM_IO_RUNNER_HPP
#define DQLM_IO_RUNNER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "dqlm/forecast.hpp"
#include "dqlm/io/config.hpp"
#include "dqlm/io/csv.hpp"
#include "dqlm/mcmc.hpp"
#include "dqlm/model.hpp"
#include "dqlm/seqfilter.hpp"
#include "dqlm/version.hpp"

namespace dqlm {

namespace detail {

inline std::string tau_tag(double tau) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.3f", tau);
  return buf;
}

inline double percentile_of(std::vector<double> v, double prob) {
  const int idx = std::clamp(static_cast<int>(prob * v.size()), 0,
                             static_cast<int>(v.size()) - 1);
  std::nth_element(v.begin(), v.begin() + idx, v.end());
  return v[idx];
}

/// Effective sample size via the initial positive sequence of
/// autocorrelations.
inline double effective_sample_size(const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  if (n < 4) return n;
  const double mean = x.mean();
  const Eigen::ArrayXd centered = x.array() - mean;
  const double var = centered.square().sum() / n;
  if (var <= 0.0) return n;
  double acf_sum = 0.0;
  for (int lag = 1; lag < n - 1; lag += 2) {
    double rho1 = 0.0, rho2 = 0.0;
    for (int i = 0; i + lag < n; ++i) rho1 += centered[i] * centered[i + lag];
    for (int i = 0; i + lag + 1 < n; ++i) {
      rho2 += centered[i] * centered[i + lag + 1];
    }
    rho1 /= n * var;
    rho2 /= n * var;
    if (rho1 + rho2 <= 0.0) break;
    acf_sum += rho1 + rho2;
  }
  return n / (1.0 + 2.0 * acf_sum);
}

struct LinpredSummary {
  // per time point, in fitting scale
  std::vector<double> mean, sd, lo, hi;
};

inline double maybe_exp(double v, bool log_scale) {
  return log_scale ? std::exp(v) : v;
}

}  // namespace detail

struct FitArtifacts {
  std::filesystem::path directory;
  std::vector<std::string> files;
  std::vector<double> phi_inv;  // sequential engine, per tau
};

/// Fit every quantile in the grid with the configured engine and write the
/// declared artifact set: per-tau fitted tables, component tables, the
/// inter-quantile-range track, draw/state exports and a machine-readable
/// manifest that reproduces the run.
inline FitArtifacts run_fit(const RunConfig& config,
                            const TimeSeriesData& raw_data) {
  config.validate();
  raw_data.validate();

  TimeSeriesData data = raw_data;
  if (config.log_transform) {
    for (double& v : data.y) {
      if (!(v > 0.0)) {
        throw DomainError("log transform requires positive observations");
      }
      v = std::log(v);
    }
  }

  const ModelSpec spec = config.make_model(data);
  const PriorSpec prior = config.make_prior(spec.state_dim);
  const int T = data.length();
  const int p = spec.state_dim;
  const bool logs = config.log_transform;

  FitArtifacts artifacts;
  artifacts.directory = config.output_dir;
  std::filesystem::create_directories(artifacts.directory);
  const auto path_of = [&](const std::string& name) {
    artifacts.files.push_back(name);
    return (artifacts.directory / name).string();
  };

  Json manifest;
  manifest["config"] = config.to_json();
  manifest["version"] = version_string;
  manifest["series_length"] = T;
  manifest["state_dim"] = p;
  Json per_tau = Json::object();

  std::vector<detail::LinpredSummary> summaries;

  for (size_t qi = 0; qi < config.quantiles.size(); ++qi) {
    const double tau = config.quantiles[qi];
    const QuantileSpec q = QuantileSpec::from_tau(tau);
    const std::string tag = detail::tau_tag(tau);
    detail::LinpredSummary summary;
    summary.mean.resize(T);
    summary.sd.resize(T);
    summary.lo.resize(T);
    summary.hi.resize(T);
    Json tau_info;

    CsvTable components;
    components.header = {"time", "component", "mean", "lo025", "hi975"};

    if (config.engine == "mcmc") {
      McmcConfig mc = config.mcmc;
      mc.seed = config.seed + 1000 * qi;
      const McmcDraws draws = run_gibbs(data, spec, prior, q, mc);
      const int n = draws.size();

      std::vector<double> col(n);
      for (int t = 0; t < T; ++t) {
        Eigen::Map<Eigen::VectorXd>(col.data(), n) = draws.linpred.col(t);
        const double mean = draws.linpred.col(t).mean();
        summary.mean[t] = mean;
        summary.sd[t] = std::sqrt(
            (draws.linpred.col(t).array() - mean).square().sum() / n);
        summary.lo[t] = detail::percentile_of(col, 0.025);
        summary.hi[t] = detail::percentile_of(col, 0.975);
      }

      for (int t = 1; t <= T; ++t) {
        for (int j = 0; j < p; ++j) {
          for (int i = 0; i < n; ++i) col[i] = draws.theta[i](t, j);
          const double mean =
              std::accumulate(col.begin(), col.end(), 0.0) / n;
          components.add_row(
              {data.label(t - 1),
               j < static_cast<int>(spec.component_names.size())
                   ? spec.component_names[j]
                   : "state" + std::to_string(j),
               format_double(mean),
               format_double(detail::percentile_of(col, 0.025)),
               format_double(detail::percentile_of(col, 0.975))});
        }
      }

      // columnar draw export: one row per retained sweep
      CsvTable draw_table;
      draw_table.header = {"draw", "sigma"};
      for (int j = 0; j < p; ++j) {
        draw_table.header.push_back("theta_T_" + std::to_string(j));
      }
      draw_table.header.push_back("u_T");
      for (int i = 0; i < n; ++i) {
        std::vector<std::string> row{std::to_string(i),
                                     format_double(draws.sigma[i])};
        for (int j = 0; j < p; ++j) {
          row.push_back(format_double(draws.theta[i](T, j)));
        }
        row.push_back(format_double(draws.u(i, T - 1)));
        draw_table.add_row(std::move(row));
      }
      write_csv(path_of("draws_tau" + tag + ".csv"), draw_table);

      // forecastable state
      Json state;
      state["sigma"] = std::vector<double>(draws.sigma.data(),
                                           draws.sigma.data() + n);
      Json theta_rows = Json::array();
      Json c_rows = Json::array();
      Json w_rows = Json::array();
      for (int i = 0; i < n; ++i) {
        theta_rows.push_back(std::vector<double>(
            draws.theta[i].row(T).data(),
            draws.theta[i].row(T).data() + p));
        const Eigen::MatrixXd& cl = draws.c_last[i];
        c_rows.push_back(
            std::vector<double>(cl.data(), cl.data() + cl.size()));
        if (!draws.w_last.empty()) {
          const Eigen::MatrixXd& wl = draws.w_last[i];
          w_rows.push_back(
              std::vector<double>(wl.data(), wl.data() + wl.size()));
        }
      }
      state["theta_T"] = theta_rows;
      state["c_last"] = c_rows;
      if (!w_rows.empty()) state["w_last"] = w_rows;
      if (draws.w_scalar.size() > 0) {
        state["w_scalar"] = std::vector<double>(
            draws.w_scalar.data(), draws.w_scalar.data() + n);
      }
      {
        std::ofstream out(
            (artifacts.directory / ("mcmc_state_tau" + tag + ".json"))
                .string());
        out << state.dump();
        artifacts.files.push_back("mcmc_state_tau" + tag + ".json");
      }

      tau_info["ess_sigma"] = detail::effective_sample_size(draws.sigma);
      tau_info["ess_linpred_mid"] =
          detail::effective_sample_size(draws.linpred.col(T / 2));
      if (std::isfinite(draws.w_mh_acceptance)) {
        tau_info["w_mh_acceptance"] = draws.w_mh_acceptance;
      }
    } else {
      // sequential engine: plug-in MAP for phi, then one filter pass
      MapPhiOptions map_opt;
      map_opt.filter = config.make_seq_options();
      const PhiEstimate est = fit_map_phi(data, spec, prior, q,
                                          config.phi_inv_init, map_opt);
      artifacts.phi_inv.push_back(est.phi_inv);
      const double phi = 1.0 / est.phi_inv;
      const FilterResult result =
          run_filter(data, spec, prior, q, phi, map_opt.filter);

      CsvTable logpred;
      logpred.header = {"time", "f", "q", "log_predictive", "cumulative"};
      double cumulative = 0.0;
      for (int t = 0; t < T; ++t) {
        const StepRecord& rec = result.steps[t];
        const Eigen::VectorXd F = spec.design(t + 1);
        const double lin_mean = F.dot(rec.m.head(p));
        const double lin_sd = std::sqrt(
            std::max(0.0, rec.linpred_var / phi));
        summary.mean[t] = lin_mean;
        summary.sd[t] = lin_sd;
        summary.lo[t] = lin_mean - kZ975 * lin_sd;
        summary.hi[t] = lin_mean + kZ975 * lin_sd;
        cumulative += rec.log_pred;
        logpred.add_row({data.label(t), format_double(rec.f),
                         format_double(rec.q), format_double(rec.log_pred),
                         format_double(cumulative)});

        for (int j = 0; j < p; ++j) {
          const double sd = std::sqrt(std::max(0.0, rec.c_diag[j] / phi));
          components.add_row(
              {data.label(t),
               j < static_cast<int>(spec.component_names.size())
                   ? spec.component_names[j]
                   : "state" + std::to_string(j),
               format_double(rec.m[j]),
               format_double(rec.m[j] - kZ975 * sd),
               format_double(rec.m[j] + kZ975 * sd)});
        }
      }
      write_csv(path_of("logpred_tau" + tag + ".csv"), logpred);

      Json state;
      state["phi_inv"] = est.phi_inv;
      state["converged"] = est.converged;
      state["iterations"] = est.iterations;
      state["trace"] = est.trace;
      state["n_capped"] = result.n_capped;
      state["m"] = std::vector<double>(
          result.final_state.m.data(),
          result.final_state.m.data() + result.final_state.m.size());
      state["C"] = std::vector<double>(
          result.final_state.C.data(),
          result.final_state.C.data() + result.final_state.C.size());
      {
        std::ofstream out(
            (artifacts.directory / ("seq_state_tau" + tag + ".json"))
                .string());
        out << state.dump();
        artifacts.files.push_back("seq_state_tau" + tag + ".json");
      }
      tau_info["phi_inv"] = est.phi_inv;
      tau_info["map_converged"] = est.converged;
      tau_info["n_capped"] = result.n_capped;
    }

    CsvTable fit;
    fit.header = {"time", "mean", "sd", "lo025", "hi975"};
    for (int t = 0; t < T; ++t) {
      fit.add_row({data.label(t),
                   format_double(detail::maybe_exp(summary.mean[t], logs)),
                   format_double(summary.sd[t]),
                   format_double(detail::maybe_exp(summary.lo[t], logs)),
                   format_double(detail::maybe_exp(summary.hi[t], logs))});
    }
    write_csv(path_of("fit_tau" + tag + ".csv"), fit);
    write_csv(path_of("components_tau" + tag + ".csv"), components);
    per_tau[tag] = tau_info;
    summaries.push_back(std::move(summary));
  }

  // inter-quantile range between the outermost grid members
  if (config.quantiles.size() >= 2) {
    const auto& lo_band = summaries.front();
    const auto& hi_band = summaries.back();
    CsvTable iqr;
    iqr.header = {"time", "iqr_mean", "iqr_lo025", "iqr_hi975"};
    for (int t = 0; t < T; ++t) {
      const double gap = detail::maybe_exp(hi_band.mean[t], logs) -
                         detail::maybe_exp(lo_band.mean[t], logs);
      // fits are independent across tau levels
      const double sd_log = std::sqrt(hi_band.sd[t] * hi_band.sd[t] +
                                      lo_band.sd[t] * lo_band.sd[t]);
      double lo, hi;
      if (logs) {
        lo = std::exp(hi_band.mean[t] - kZ975 * sd_log) -
             std::exp(lo_band.mean[t] + kZ975 * sd_log);
        hi = std::exp(hi_band.mean[t] + kZ975 * sd_log) -
             std::exp(lo_band.mean[t] - kZ975 * sd_log);
      } else {
        lo = gap - kZ975 * sd_log;
        hi = gap + kZ975 * sd_log;
      }
      iqr.add_row({data.label(t), format_double(gap), format_double(lo),
                   format_double(hi)});
    }
    write_csv(path_of("iqr.csv"), iqr);
  }

  manifest["per_tau"] = per_tau;
  manifest["files"] = artifacts.files;
  {
    std::ofstream out((artifacts.directory / "manifest.json").string());
    out << manifest.dump(2) << "\n";
  }
  return artifacts;
}

inline FitArtifacts run_fit(const RunConfig& config) {
  return run_fit(config, ingest_csv(config.input, config.columns));
}

/// Forecast from the artifacts of a previous fit: reads the manifest and the
/// per-tau state files, writes one forecast table per tau (plus optional
/// window sums of the predictive mean).
inline std::vector<std::string> run_forecast(const std::string& fit_dir,
                                             int horizon,
                                             int aggregate_window = 0,
                                             std::uint64_t seed = 7) {
  if (horizon < 1) throw DomainError("forecast horizon must be >= 1");
  const std::filesystem::path dir(fit_dir);
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw DomainError("no manifest.json in " + fit_dir);
  Json manifest;
  mf >> manifest;
  const RunConfig config = RunConfig::from_json(manifest.at("config"));
  const int T = manifest.at("series_length").get<int>();
  const int p = manifest.at("state_dim").get<int>();
  const bool logs = config.log_transform;
  if (config.model_type == "dynamic-regression") {
    throw DomainError("forecasting a dynamic regression requires future "
                      "covariates, which fit artifacts do not carry");
  }

  TimeSeriesData empty;  // model builders below never touch the data
  const ModelSpec spec = config.make_model(empty);

  std::vector<std::string> written;
  for (double tau : config.quantiles) {
    const QuantileSpec q = QuantileSpec::from_tau(tau);
    const std::string tag = detail::tau_tag(tau);
    ForecastResult fc;

    if (config.engine == "mcmc") {
      std::ifstream sf(dir / ("mcmc_state_tau" + tag + ".json"));
      if (!sf) throw DomainError("missing mcmc state for tau " + tag);
      Json state;
      sf >> state;
      const auto sigma = state.at("sigma").get<std::vector<double>>();
      const int n = static_cast<int>(sigma.size());
      McmcDraws draws;
      draws.sigma = Eigen::Map<const Eigen::VectorXd>(sigma.data(), n);
      for (int i = 0; i < n; ++i) {
        const auto th = state.at("theta_T")[i].get<std::vector<double>>();
        Eigen::MatrixXd theta(1, p);
        theta.row(0) = Eigen::Map<const Eigen::VectorXd>(th.data(), p);
        draws.theta.push_back(theta);
        const auto cl = state.at("c_last")[i].get<std::vector<double>>();
        draws.c_last.push_back(
            Eigen::Map<const Eigen::MatrixXd>(cl.data(), p, p));
        if (state.contains("w_last")) {
          const auto wl = state.at("w_last")[i].get<std::vector<double>>();
          draws.w_last.push_back(
              Eigen::Map<const Eigen::MatrixXd>(wl.data(), p, p));
        }
      }
      if (state.contains("w_scalar")) {
        const auto ws = state.at("w_scalar").get<std::vector<double>>();
        draws.w_scalar = Eigen::Map<const Eigen::VectorXd>(ws.data(), n);
      }
      Rng rng(seed);
      fc = forecast_mcmc(draws, spec, q, horizon, T, rng);
    } else {
      std::ifstream sf(dir / ("seq_state_tau" + tag + ".json"));
      if (!sf) throw DomainError("missing sequential state for tau " + tag);
      Json state;
      sf >> state;
      AugmentedState final_state;
      const auto m = state.at("m").get<std::vector<double>>();
      const auto C = state.at("C").get<std::vector<double>>();
      final_state.m = Eigen::Map<const Eigen::VectorXd>(
          m.data(), static_cast<Eigen::Index>(m.size()));
      final_state.C = Eigen::Map<const Eigen::MatrixXd>(C.data(), p + 1,
                                                        p + 1);
      const double phi = 1.0 / state.at("phi_inv").get<double>();
      fc = forecast_seq(final_state, spec, q, phi, horizon, T,
                        config.make_seq_options());
    }

    CsvTable table;
    table.header = {"tau",       "horizon",     "pred_mean", "pred_var",
                    "pred_lo",   "pred_hi",     "linpred_mean",
                    "linpred_lo", "linpred_hi"};
    std::vector<double> means;
    for (const auto& s : fc.steps) {
      means.push_back(detail::maybe_exp(s.pred_mean, logs));
      table.add_row({format_double(tau), std::to_string(s.horizon),
                     format_double(detail::maybe_exp(s.pred_mean, logs)),
                     format_double(s.pred_var),
                     format_double(detail::maybe_exp(s.pred_lo, logs)),
                     format_double(detail::maybe_exp(s.pred_hi, logs)),
                     format_double(detail::maybe_exp(s.linpred_mean, logs)),
                     format_double(detail::maybe_exp(s.linpred_lo, logs)),
                     format_double(detail::maybe_exp(s.linpred_hi, logs))});
    }
    const std::string name = "forecast_tau" + tag + ".csv";
    write_csv((dir / name).string(), table);
    written.push_back(name);

    if (aggregate_window > 0) {
      CsvTable agg;
      agg.header = {"window", "pred_mean_sum"};
      const auto sums = window_sum(means, aggregate_window);
      for (size_t i = 0; i < sums.size(); ++i) {
        agg.add_row({std::to_string(i + 1), format_double(sums[i])});
      }
      const std::string agg_name = "forecast_aggregate_tau" + tag + ".csv";
      write_csv((dir / agg_name).string(), agg);
      written.push_back(agg_name);
    }
  }
  return written;
}

}  // namespace dqlm

#endif  // DQLM_IO_RUNNER_HPP
