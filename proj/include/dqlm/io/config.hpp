#ifndef DQLM_IO_CONFIG_HPP
#define DQLM_IO_CONFIG_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "dqlm/common.hpp"
#include "dqlm/io/csv.hpp"
#include "dqlm/mcmc.hpp"
#include "dqlm/model.hpp"
#include "dqlm/seqfilter.hpp"

namespace dqlm {

using Json = nlohmann::json;

/// Everything a fit run needs, mirroring the JSON config file one to one.
struct RunConfig {
  std::string input;
  ColumnMapping columns;
  bool log_transform = false;
  std::string engine = "mcmc";  // "mcmc" | "sequential"
  std::vector<double> quantiles = {0.1, 0.5, 0.9};

  // model section
  std::string model_type = "local-level";  // local-level | trend-seasonal |
                                           // local-linear-quarterly |
                                           // dynamic-regression
  int period = 12;
  std::string evolution_policy = "discount";  // discount | inverse-wishart |
                                              // fixed | student-t
  double delta = 0.95;
  double n_w = 8.0;
  double s_w_scale = 0.1;
  std::vector<double> w_diag;  // fixed policy
  double w_u = 0.0;
  double nu = 2.5;
  double half_cauchy_scale = 25.0;

  // prior section
  std::vector<double> m0;  // empty = zeros
  double c0_scale = 1e5;
  double n_phi = 0.001;
  double s_phi = 0.001;
  double n0 = 0.001;
  double d0 = 0.001;
  double m_u0 = 0.0;
  double c_u0 = 1.0;

  McmcConfig mcmc;
  double phi_inv_init = 1.0;
  std::string density_method = "cf-inversion";  // or "convolution"

  int forecast_horizon = 0;
  std::string output_dir = "out";
  std::uint64_t seed = 20240101;

  void validate() const {
    if (engine != "mcmc" && engine != "sequential") {
      throw DomainError("engine must be 'mcmc' or 'sequential'");
    }
    if (quantiles.empty()) throw DomainError("empty quantile grid");
    for (size_t i = 0; i < quantiles.size(); ++i) {
      if (!(quantiles[i] > 0.0) || !(quantiles[i] < 1.0)) {
        throw DomainError("quantiles must lie in (0, 1)");
      }
      if (i > 0 && !(quantiles[i] > quantiles[i - 1])) {
        throw DomainError("quantile grid must be strictly increasing");
      }
    }
    if (model_type != "local-level" && model_type != "trend-seasonal" &&
        model_type != "local-linear-quarterly" &&
        model_type != "dynamic-regression") {
      throw DomainError("unknown model type: " + model_type);
    }
    if (evolution_policy != "discount" &&
        evolution_policy != "inverse-wishart" && evolution_policy != "fixed" &&
        evolution_policy != "student-t") {
      throw DomainError("unknown evolution policy: " + evolution_policy);
    }
    if (engine == "sequential" && (evolution_policy == "inverse-wishart" ||
                                   evolution_policy == "student-t")) {
      throw DomainError("sequential engine requires discount or fixed "
                        "evolution");
    }
    if (density_method != "cf-inversion" && density_method != "convolution") {
      throw DomainError("unknown density method: " + density_method);
    }
    if (forecast_horizon < 0) throw DomainError("negative forecast horizon");
    mcmc.validate();
  }

  Json to_json() const {
    Json j;
    j["input"] = input;
    j["time_column"] = columns.time_column;
    j["y_column"] = columns.y_column;
    j["covariate_columns"] = columns.covariate_columns;
    j["log_transform"] = log_transform;
    j["engine"] = engine;
    j["quantiles"] = quantiles;
    j["model"] = {{"type", model_type},
                  {"period", period},
                  {"evolution",
                   {{"policy", evolution_policy},
                    {"delta", delta},
                    {"n_w", n_w},
                    {"s_w_scale", s_w_scale},
                    {"w_diag", w_diag},
                    {"w_u", w_u},
                    {"nu", nu},
                    {"half_cauchy_scale", half_cauchy_scale}}}};
    j["prior"] = {{"m0", m0},     {"c0_scale", c0_scale}, {"n_phi", n_phi},
                  {"s_phi", s_phi}, {"n0", n0},           {"d0", d0},
                  {"m_u0", m_u0},   {"c_u0", c_u0}};
    j["mcmc"] = {{"sweeps", mcmc.sweeps},
                 {"burn_in", mcmc.burn_in},
                 {"thin", mcmc.thin}};
    j["sequential"] = {{"phi_inv_init", phi_inv_init},
                       {"density_method", density_method}};
    j["forecast_horizon"] = forecast_horizon;
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    return j;
  }

  static RunConfig from_json(const Json& j) {
    RunConfig c;
    const auto get = [](const Json& src, const char* key, auto fallback) {
      using T = decltype(fallback);
      return src.contains(key) ? src.at(key).get<T>() : fallback;
    };
    c.input = get(j, "input", std::string{});
    c.columns.time_column = get(j, "time_column", std::string{"t"});
    c.columns.y_column = get(j, "y_column", std::string{"y"});
    c.columns.covariate_columns =
        get(j, "covariate_columns", std::vector<std::string>{});
    c.log_transform = get(j, "log_transform", false);
    c.engine = get(j, "engine", std::string{"mcmc"});
    c.quantiles = get(j, "quantiles", std::vector<double>{0.1, 0.5, 0.9});
    if (j.contains("model")) {
      const Json& m = j.at("model");
      c.model_type = get(m, "type", std::string{"local-level"});
      c.period = get(m, "period", 12);
      if (m.contains("evolution")) {
        const Json& e = m.at("evolution");
        c.evolution_policy = get(e, "policy", std::string{"discount"});
        c.delta = get(e, "delta", 0.95);
        c.n_w = get(e, "n_w", 8.0);
        c.s_w_scale = get(e, "s_w_scale", 0.1);
        c.w_diag = get(e, "w_diag", std::vector<double>{});
        c.w_u = get(e, "w_u", 0.0);
        c.nu = get(e, "nu", 2.5);
        c.half_cauchy_scale = get(e, "half_cauchy_scale", 25.0);
      }
    }
    if (j.contains("prior")) {
      const Json& p = j.at("prior");
      c.m0 = get(p, "m0", std::vector<double>{});
      c.c0_scale = get(p, "c0_scale", 1e5);
      c.n_phi = get(p, "n_phi", 0.001);
      c.s_phi = get(p, "s_phi", 0.001);
      c.n0 = get(p, "n0", 0.001);
      c.d0 = get(p, "d0", 0.001);
      c.m_u0 = get(p, "m_u0", 0.0);
      c.c_u0 = get(p, "c_u0", 1.0);
    }
    if (j.contains("mcmc")) {
      const Json& m = j.at("mcmc");
      c.mcmc.sweeps = get(m, "sweeps", 5000);
      c.mcmc.burn_in = get(m, "burn_in", 1000);
      c.mcmc.thin = get(m, "thin", 4);
    }
    if (j.contains("sequential")) {
      const Json& s = j.at("sequential");
      c.phi_inv_init = get(s, "phi_inv_init", 1.0);
      c.density_method = get(s, "density_method", std::string{"cf-inversion"});
    }
    c.forecast_horizon = get(j, "forecast_horizon", 0);
    c.output_dir = get(j, "output_dir", std::string{"out"});
    c.seed = get(j, "seed", static_cast<std::uint64_t>(20240101));
    return c;
  }

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file: " + path);
    Json j;
    try {
      in >> j;
    } catch (const Json::exception& e) {
      throw DomainError("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
  }

  EvolutionPolicy make_evolution(int p) const {
    if (evolution_policy == "discount") return DiscountEvolution{delta};
    if (evolution_policy == "inverse-wishart") {
      return InverseWishartEvolution{
          n_w, s_w_scale * Eigen::MatrixXd::Identity(p, p)};
    }
    if (evolution_policy == "student-t") {
      return StudentTEvolution{nu, half_cauchy_scale, 1.0};
    }
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(p, p);
    if (w_diag.size() == static_cast<size_t>(p)) {
      for (int i = 0; i < p; ++i) W(i, i) = w_diag[i];
    } else if (w_diag.size() == 1) {
      W.diagonal().setConstant(w_diag[0]);
    } else if (!w_diag.empty()) {
      throw DomainError("w_diag must have 1 or state_dim entries");
    }
    return FixedEvolution{W, w_u};
  }

  ModelSpec make_model(const TimeSeriesData& data) const {
    ModelSpec spec;
    if (model_type == "trend-seasonal") {
      spec = build_trend_seasonal(period, DiscountEvolution{});
    } else if (model_type == "local-linear-quarterly") {
      spec = build_local_linear_plus_quarterly(DiscountEvolution{});
    } else if (model_type == "dynamic-regression") {
      if (data.covariates.cols() == 0) {
        throw DomainError("dynamic-regression requires covariate columns");
      }
      spec = build_dynamic_regression(data.covariates, DiscountEvolution{});
    } else {
      spec = build_local_level(DiscountEvolution{});
    }
    spec.evolution = make_evolution(spec.state_dim);
    spec.quantiles.clear();
    for (double tau : quantiles) {
      spec.quantiles.push_back(QuantileSpec::from_tau(tau));
    }
    spec.validate();
    return spec;
  }

  PriorSpec make_prior(int p) const {
    PriorSpec prior = PriorSpec::diffuse(p, c0_scale);
    if (m0.size() == static_cast<size_t>(p)) {
      for (int i = 0; i < p; ++i) prior.m0[i] = m0[i];
    } else if (m0.size() == 1) {
      prior.m0.setConstant(m0[0]);
    } else if (!m0.empty()) {
      throw DomainError("m0 must have 1 or state_dim entries");
    }
    prior.n_phi = n_phi;
    prior.s_phi = s_phi;
    prior.n0 = n0;
    prior.d0 = d0;
    prior.m_u0 = m_u0;
    prior.c_u0 = c_u0;
    prior.validate(p);
    return prior;
  }

  SeqOptions make_seq_options() const {
    SeqOptions opt;
    opt.density_method = density_method == "convolution"
                             ? DensityMethod::convolution
                             : DensityMethod::cf_inversion;
    return opt;
  }
};

}  // namespace dqlm

#endif  // DQLM_IO_CONFIG_HPP
