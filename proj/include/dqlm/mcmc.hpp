#ifndef DQLM_MCMC_HPP
#define DQLM_MCMC_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dqlm/common.hpp"
#include "dqlm/distributions/gig.hpp"
#include "dqlm/linalg.hpp"
#include "dqlm/model.hpp"
#include "dqlm/quantile.hpp"
#include "dqlm/rng.hpp"

namespace dqlm {

struct McmcConfig {
  int sweeps = 5000;
  int burn_in = 1000;
  int thin = 4;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(sweeps > burn_in) || burn_in < 0 || thin < 1) {
      throw DomainError("McmcConfig requires sweeps > burn_in >= 0, thin >= 1");
    }
  }
  int retained() const { return (sweeps - burn_in + thin - 1) / thin; }
};

/// Retained Gibbs output. theta[i] holds the (T+1) x p state draw of sweep i
/// (row 0 is theta_0); linpred(i, t-1) = F_t' theta_t for that draw.
struct McmcDraws {
  std::vector<Eigen::MatrixXd> theta;
  Eigen::MatrixXd u;        // retained x T
  Eigen::VectorXd sigma;    // phi^{-1/2}
  Eigen::MatrixXd linpred;  // retained x T
  std::vector<Eigen::MatrixXd> w_diag;  // retained x (T x p); IW policy only
  std::vector<Eigen::MatrixXd> w_last;  // W_T draw per sweep; IW policy only
  Eigen::MatrixXd lambda;               // retained x T; Student-t policy only
  Eigen::VectorXd w_scalar;             // retained; Student-t policy only
  std::vector<Eigen::MatrixXd> c_last;  // forward-filter C_T per sweep
  double w_mh_acceptance = std::numeric_limits<double>::quiet_NaN();

  int size() const { return static_cast<int>(theta.size()); }
};

// ---------------------------------------------------------------------------
// Full-conditional samplers

/// Scale draw: sigma = phi^{-1/2} ~ IGa(n*/2, s*/2) with n* = n_phi + 3T and
/// s* = s_phi + sum (y_t - F_t'theta_t - a_tau U_t)^2 / (b_tau U_t)
///    + 2 sum U_t.
inline double sample_phi(const Eigen::VectorXd& residuals,
                         const Eigen::VectorXd& u, const QuantileSpec& q,
                         double n_phi, double s_phi, Rng& rng) {
  const int T = static_cast<int>(residuals.size());
  double s_star = s_phi;
  for (int t = 0; t < T; ++t) {
    if (!(u[t] > 0.0)) throw DomainError("sample_phi requires U_t > 0");
    s_star += residuals[t] * residuals[t] / (q.b_tau * u[t]) + 2.0 * u[t];
  }
  const double n_star = n_phi + 3.0 * T;
  return 1.0 / rng.gamma(0.5 * n_star, 0.5 * s_star);
}

/// Latent-weight draw U_t ~ GIG(chi*, kappa*, 1/2) with
/// chi* = (y_t - F_t'theta_t)^2 / (b_tau sigma) and
/// kappa* = a_tau^2 / (b_tau sigma) + 2 / sigma.
inline double sample_u(double y, double linpred, double sigma,
                       const QuantileSpec& q, Rng& rng) {
  if (!(sigma > 0.0)) throw DomainError("sample_u requires sigma > 0");
  const double resid = y - linpred;
  const double chi = resid * resid / (q.b_tau * sigma);
  const double kappa = q.a_tau * q.a_tau / (q.b_tau * sigma) + 2.0 / sigma;
  return gig_sample(GigParams::make(chi, kappa, 0.5), rng);
}

/// Inverse Wishart draw via the Bartlett construction:
/// X ~ Wishart(df, scale^{-1}), W = X^{-1}. Requires df > p - 1.
inline Eigen::MatrixXd sample_inverse_wishart(double df,
                                              const Eigen::MatrixXd& scale,
                                              Rng& rng) {
  const int p = static_cast<int>(scale.rows());
  if (!(df > p - 1)) {
    throw DomainError("inverse Wishart degrees of freedom too small");
  }
  const Eigen::MatrixXd scale_inv =
      robust_llt(scale).solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd L = robust_llt(scale_inv).matrixL();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(df - i));
    for (int j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  const Eigen::MatrixXd LA = L * A;
  const Eigen::MatrixXd X = LA * LA.transpose();
  return symmetrized(robust_llt(X).solve(Eigen::MatrixXd::Identity(p, p)));
}

/// Evolution-covariance draw W_t ~ IW(n_w + p + 1, S_w + e e') for the
/// innovation e = theta_t - G_t theta_{t-1}.
inline Eigen::MatrixXd sample_w(const Eigen::VectorXd& innovation, double n_w,
                                const Eigen::MatrixXd& s_w, Rng& rng) {
  const int p = static_cast<int>(innovation.size());
  return sample_inverse_wishart(
      n_w + p + 1, s_w + innovation * innovation.transpose(), rng);
}

/// Student-t mixing weight: lambda_t ~ Ga((nu + p)/2, (nu + qform)/2) where
/// qform = e' W^{-1} e for the innovation e.
inline double sample_lambda(double quad_form, double nu, int p, Rng& rng) {
  if (!(quad_form >= 0.0)) throw DomainError("negative quadratic form");
  return rng.gamma(0.5 * (nu + p), 0.5 * (nu + quad_form));
}

// ---------------------------------------------------------------------------
// Forward filtering / backward sampling

namespace detail {

/// Resolved evolution-variance inputs for one forward pass.
struct EvolutionContext {
  enum class Kind { fixed, per_time, discount, student_t } kind;
  const Eigen::MatrixXd* w_fixed = nullptr;
  const std::vector<Eigen::MatrixXd>* w_per_time = nullptr;
  double delta = 0.95;
  const Eigen::VectorXd* lambda = nullptr;
  double w_scalar = 1.0;
};

}  // namespace detail

/// Forward Kalman-style pass of the conditionally Gaussian model, given the
/// latent weights u and the scale sigma: f_t = F_t'a_t + a_tau U_t and
/// q_t = F_t'R_t F_t + b_tau U_t sigma.
struct ForwardPass {
  std::vector<Eigen::VectorXd> a;  // a[t-1] = a_t, t = 1..T
  std::vector<Eigen::MatrixXd> R;
  std::vector<Eigen::VectorXd> m;  // m[t], t = 0..T
  std::vector<Eigen::MatrixXd> C;
  Eigen::VectorXd f;  // one-step means
  Eigen::VectorXd q;  // one-step (unscaled) variances

  void run(const TimeSeriesData& data, const ModelSpec& spec,
           const PriorSpec& prior, const QuantileSpec& quantile,
           const Eigen::VectorXd& u, double sigma,
           const detail::EvolutionContext& ev) {
    const int T = data.length();
    const int p = spec.state_dim;
    a.assign(T, Eigen::VectorXd(p));
    R.assign(T, Eigen::MatrixXd(p, p));
    m.assign(T + 1, Eigen::VectorXd(p));
    C.assign(T + 1, Eigen::MatrixXd(p, p));
    f.resize(T);
    q.resize(T);
    m[0] = prior.m0;
    C[0] = prior.C0;

    for (int t = 1; t <= T; ++t) {
      const Eigen::MatrixXd G = spec.transition(t);
      const Eigen::VectorXd F = spec.design(t);
      a[t - 1] = G * m[t - 1];
      Eigen::MatrixXd propagated = G * C[t - 1] * G.transpose();
      switch (ev.kind) {
        case detail::EvolutionContext::Kind::fixed:
          R[t - 1] = propagated + *ev.w_fixed;
          break;
        case detail::EvolutionContext::Kind::per_time:
          R[t - 1] = propagated + (*ev.w_per_time)[t - 1];
          break;
        case detail::EvolutionContext::Kind::discount:
          R[t - 1] = propagated / ev.delta;
          break;
        case detail::EvolutionContext::Kind::student_t:
          R[t - 1] = propagated;
          R[t - 1].diagonal().array() += ev.w_scalar / (*ev.lambda)[t - 1];
          break;
      }
      R[t - 1] = symmetrized(R[t - 1]);

      const double ut = u[t - 1];
      f[t - 1] = F.dot(a[t - 1]) + ut * quantile.a_tau;
      const Eigen::VectorXd RF = R[t - 1] * F;
      q[t - 1] = F.dot(RF) + quantile.b_tau * ut * sigma;
      if (!(q[t - 1] > 0.0) || !std::isfinite(q[t - 1])) {
        throw NumericalError("forward filter produced invalid q_t at t = " +
                             std::to_string(t));
      }
      const double gain_scale = (data.y[t - 1] - f[t - 1]) / q[t - 1];
      m[t] = a[t - 1] + RF * gain_scale;
      C[t] = symmetrized(R[t - 1] - RF * RF.transpose() / q[t - 1]);
    }
  }
};

/// Joint backward draw of theta_{0:T} given a completed forward pass.
inline Eigen::MatrixXd ffbs_sample(const ForwardPass& pass,
                                   const ModelSpec& spec, Rng& rng) {
  const int T = static_cast<int>(pass.a.size());
  const int p = spec.state_dim;
  Eigen::MatrixXd draw(T + 1, p);
  Eigen::VectorXd theta = sample_mvn(pass.m[T], pass.C[T], rng);
  draw.row(T) = theta.transpose();
  for (int t = T - 1; t >= 0; --t) {
    const Eigen::MatrixXd G = spec.transition(t + 1);
    // B = C_t G' R_{t+1}^{-1}
    const Eigen::MatrixXd B =
        robust_llt(pass.R[t]).solve(G * pass.C[t]).transpose();
    const Eigen::VectorXd h = pass.m[t] + B * (theta - pass.a[t]);
    const Eigen::MatrixXd H = symmetrized(pass.C[t] - B * G * pass.C[t]);
    theta = sample_mvn(h, H, rng);
    draw.row(t) = theta.transpose();
  }
  return draw;
}

/// Deterministic smoothed means from a forward pass (Rauch-Tung-Striebel
/// recursion); used by oracle tests.
inline std::vector<Eigen::VectorXd> smooth_means(const ForwardPass& pass,
                                                 const ModelSpec& spec) {
  const int T = static_cast<int>(pass.a.size());
  std::vector<Eigen::VectorXd> s(T + 1);
  s[T] = pass.m[T];
  for (int t = T - 1; t >= 0; --t) {
    const Eigen::MatrixXd G = spec.transition(t + 1);
    const Eigen::MatrixXd B =
        robust_llt(pass.R[t]).solve(G * pass.C[t]).transpose();
    s[t] = pass.m[t] + B * (s[t + 1] - pass.a[t]);
  }
  return s;
}

// ---------------------------------------------------------------------------

/// Gibbs sampler for the dynamic quantile model: per sweep draws the scale,
/// the latent weights, the evolution variances (policy dependent), then the
/// full state path by FFBS. Aborts with a diagnostic naming sweep and block
/// if any draw goes non-finite.
class GibbsSampler {
 public:
  GibbsSampler(const TimeSeriesData& data, const ModelSpec& spec,
               const PriorSpec& prior, const QuantileSpec& quantile,
               const McmcConfig& config)
      : data_(data),
        spec_(spec),
        prior_(prior),
        quantile_(quantile),
        config_(config),
        rng_(config.seed) {
    spec_.validate();
    prior_.validate(spec_.state_dim);
    data_.validate();
    config_.validate();
    if (data_.length() < 1) throw DomainError("empty series");
  }

  McmcDraws run() {
    const int T = data_.length();
    const int p = spec_.state_dim;
    const bool iw = std::holds_alternative<InverseWishartEvolution>(
        spec_.evolution);
    const bool student = std::holds_alternative<StudentTEvolution>(
        spec_.evolution);

    initialize_state(T, p);

    McmcDraws draws;
    const int keep = config_.retained();
    draws.theta.reserve(keep);
    draws.u.resize(keep, T);
    draws.sigma.resize(keep);
    draws.linpred.resize(keep, T);
    draws.c_last.reserve(keep);
    if (iw) {
      draws.w_diag.reserve(keep);
      draws.w_last.reserve(keep);
    }
    if (student) {
      draws.lambda.resize(keep, T);
      draws.w_scalar.resize(keep);
    }

    int mh_accept = 0, mh_total = 0;
    double mh_step = 0.5;
    int kept = 0;
    for (int sweep = 0; sweep < config_.sweeps; ++sweep) {
      // (i) scale
      Eigen::VectorXd residuals(T);
      for (int t = 1; t <= T; ++t) {
        residuals[t - 1] = data_.y[t - 1] - linpred_[t - 1] -
                           quantile_.a_tau * u_[t - 1];
      }
      sigma_ = sample_phi(residuals, u_, quantile_, prior_.n_phi,
                          prior_.s_phi, rng_);
      check_finite(sigma_ > 0.0 && std::isfinite(sigma_), sweep, "phi");

      // (ii) latent weights
      for (int t = 0; t < T; ++t) {
        u_[t] = sample_u(data_.y[t], linpred_[t], sigma_, quantile_, rng_);
      }
      check_finite(u_.allFinite() && (u_.array() > 0.0).all(), sweep, "u");

      // (iii) evolution variances
      if (iw) {
        const auto& pol = std::get<InverseWishartEvolution>(spec_.evolution);
        for (int t = 1; t <= T; ++t) {
          const Eigen::VectorXd innovation =
              theta_.row(t).transpose() -
              spec_.transition(t) * theta_.row(t - 1).transpose();
          w_[t - 1] = sample_w(innovation, pol.df, pol.scale, rng_);
          check_finite(w_[t - 1].allFinite(), sweep, "W");
        }
      } else if (student) {
        const auto& pol = std::get<StudentTEvolution>(spec_.evolution);
        double weighted_ssq = 0.0;
        for (int t = 1; t <= T; ++t) {
          const Eigen::VectorXd innovation =
              theta_.row(t).transpose() -
              spec_.transition(t) * theta_.row(t - 1).transpose();
          const double ssq = innovation.squaredNorm();
          lambda_[t - 1] =
              sample_lambda(ssq / w_scalar_, pol.nu, p, rng_);
          weighted_ssq += lambda_[t - 1] * ssq;
        }
        check_finite(lambda_.allFinite() && (lambda_.array() > 0.0).all(),
                     sweep, "lambda");
        // half-Cauchy(scale) prior on sqrt(w); log random walk proposal
        const auto log_target = [&](double w) {
          return -(0.5 * T * p + 0.5) * std::log(w) -
                 0.5 * weighted_ssq / w -
                 std::log1p(w / (pol.half_cauchy_scale *
                                 pol.half_cauchy_scale));
        };
        const double proposal =
            w_scalar_ * std::exp(mh_step * rng_.normal());
        const double log_ratio = log_target(proposal) -
                                 log_target(w_scalar_) +
                                 std::log(proposal / w_scalar_);
        ++mh_total;
        if (std::log(rng_.uniform_pos()) < log_ratio) {
          w_scalar_ = proposal;
          ++mh_accept;
        }
        check_finite(w_scalar_ > 0.0 && std::isfinite(w_scalar_), sweep, "W");
        if (sweep < config_.burn_in && mh_total % 50 == 0) {
          const double rate = static_cast<double>(mh_accept) / mh_total;
          if (rate > 0.5) mh_step *= 1.3;
          if (rate < 0.2) mh_step *= 0.7;
        }
      }

      // (iv) states by FFBS
      pass_.run(data_, spec_, prior_, quantile_, u_, sigma_,
                evolution_context());
      theta_ = ffbs_sample(pass_, spec_, rng_);
      check_finite(theta_.allFinite(), sweep, "theta (FFBS)");
      for (int t = 1; t <= T; ++t) {
        linpred_[t - 1] = spec_.design(t).dot(theta_.row(t));
      }

      if (sweep >= config_.burn_in &&
          (sweep - config_.burn_in) % config_.thin == 0) {
        draws.theta.push_back(theta_);
        draws.u.row(kept) = u_.transpose();
        draws.sigma[kept] = sigma_;
        draws.linpred.row(kept) = linpred_.transpose();
        draws.c_last.push_back(pass_.C.back());
        if (iw) {
          Eigen::MatrixXd wd(T, p);
          for (int t = 0; t < T; ++t) wd.row(t) = w_[t].diagonal();
          draws.w_diag.push_back(std::move(wd));
          draws.w_last.push_back(w_.back());
        }
        if (student) {
          draws.lambda.row(kept) = lambda_.transpose();
          draws.w_scalar[kept] = w_scalar_;
        }
        ++kept;
      }
    }
    if (mh_total > 0) {
      draws.w_mh_acceptance = static_cast<double>(mh_accept) / mh_total;
    }
    return draws;
  }

 private:
  void initialize_state(int T, int p) {
    theta_ = prior_.m0.transpose().replicate(T + 1, 1);
    linpred_.resize(T);
    for (int t = 1; t <= T; ++t) {
      linpred_[t - 1] = spec_.design(t).dot(prior_.m0);
    }
    sigma_ = robust_scale();
    u_ = Eigen::VectorXd::Constant(T, sigma_);
    if (const auto* pol =
            std::get_if<InverseWishartEvolution>(&spec_.evolution)) {
      Eigen::MatrixXd w0 = pol->df > p + 1
                               ? (pol->scale / (pol->df - p - 1)).eval()
                               : pol->scale;
      w_.assign(T, w0);
    }
    if (const auto* pol = std::get_if<StudentTEvolution>(&spec_.evolution)) {
      lambda_ = Eigen::VectorXd::Ones(T);
      w_scalar_ = pol->w_init;
    }
  }

  double robust_scale() const {
    std::vector<double> v = data_.y;
    const auto mid = v.begin() + v.size() / 2;
    std::nth_element(v.begin(), mid, v.end());
    const double med = *mid;
    for (auto& x : v) x = std::abs(x - med);
    std::nth_element(v.begin(), mid, v.end());
    const double mad = *mid;
    return mad > 0.0 ? 1.4826 * mad : 1.0;
  }

  detail::EvolutionContext evolution_context() const {
    detail::EvolutionContext ev;
    if (const auto* fx = std::get_if<FixedEvolution>(&spec_.evolution)) {
      ev.kind = detail::EvolutionContext::Kind::fixed;
      ev.w_fixed = &fx->W;
    } else if (std::holds_alternative<InverseWishartEvolution>(
                   spec_.evolution)) {
      ev.kind = detail::EvolutionContext::Kind::per_time;
      ev.w_per_time = &w_;
    } else if (const auto* d =
                   std::get_if<DiscountEvolution>(&spec_.evolution)) {
      ev.kind = detail::EvolutionContext::Kind::discount;
      ev.delta = d->delta;
    } else {
      ev.kind = detail::EvolutionContext::Kind::student_t;
      ev.lambda = &lambda_;
      ev.w_scalar = w_scalar_;
    }
    return ev;
  }

  static void check_finite(bool ok, int sweep, const char* block) {
    if (!ok) {
      std::ostringstream msg;
      msg << "non-finite value in sweep " << sweep << ", block " << block;
      throw NumericalError(msg.str());
    }
  }

  TimeSeriesData data_;
  ModelSpec spec_;
  PriorSpec prior_;
  QuantileSpec quantile_;
  McmcConfig config_;
  Rng rng_;

  Eigen::MatrixXd theta_;
  Eigen::VectorXd linpred_;
  Eigen::VectorXd u_;
  double sigma_ = 1.0;
  std::vector<Eigen::MatrixXd> w_;
  Eigen::VectorXd lambda_;
  double w_scalar_ = 1.0;
  ForwardPass pass_;
};

inline McmcDraws run_gibbs(const TimeSeriesData& data, const ModelSpec& spec,
                           const PriorSpec& prior,
                           const QuantileSpec& quantile,
                           const McmcConfig& config) {
  return GibbsSampler(data, spec, prior, quantile, config).run();
}

}  // namespace dqlm

#endif  // DQLM_MCMC_HPP
