#ifndef DQLM_SEQFILTER_HPP
#define DQLM_SEQFILTER_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "dqlm/common.hpp"
#include "dqlm/distributions/gamma_lognormal.hpp"
#include "dqlm/distributions/ngal.hpp"
#include "dqlm/linalg.hpp"
#include "dqlm/model.hpp"
#include "dqlm/quantile.hpp"

namespace dqlm {

// The sequential engine works on the augmented state (theta_t, u_t) with the
// phi^{-1}-scaled covariance convention: every C, R, W and q below denotes a
// multiple of phi^{-1}. The latent weight of the exact mixture maps onto the
// log-weight block as U_t = phi^{-1/2} exp(u_t).

/// Augmented moments: m holds (theta, u), C the matching (p+1) blocks with
/// the state-u cross column. The last coordinate is always the u block.
struct AugmentedState {
  Eigen::VectorXd m;
  Eigen::MatrixXd C;

  int state_dim() const { return static_cast<int>(m.size()) - 1; }
  double u_mean() const { return m[state_dim()]; }
  double u_var() const { return C(state_dim(), state_dim()); }
  Eigen::VectorXd state_mean() const { return m.head(state_dim()); }
  Eigen::MatrixXd state_cov() const {
    return C.topLeftCorner(state_dim(), state_dim());
  }
  Eigen::VectorXd cross_cov() const {
    return C.topRightCorner(state_dim(), 1);
  }

  static AugmentedState from_prior(const PriorSpec& prior, int p) {
    prior.validate(p);
    AugmentedState st;
    st.m.resize(p + 1);
    st.m.head(p) = prior.m0;
    st.m[p] = prior.m_u0;
    st.C.resize(p + 1, p + 1);
    st.C.topLeftCorner(p, p) = prior.C0;
    st.C.topRightCorner(p, 1) = prior.cross_block(p);
    st.C.bottomLeftCorner(1, p) = prior.cross_block(p).transpose();
    st.C(p, p) = prior.c_u0;
    return st;
  }
};

/// Gamma marginal of the weight U_t implied by the log-weight prior moments:
/// alpha = phi / R_u, beta = exp(-a_u) alpha, so E(U) = exp(a_u). When the
/// implied log variance is >= 1 (alpha <= 1), alpha is floored at 1.0001 and
/// the step is flagged.
struct UGammaMarginal {
  double alpha;
  double beta;
  bool capped;
};

/// One-step-ahead forecast law: mean f, scaled variance q (actual variance is
/// phi^{-1} q), the NGAL predictive itself, and the weight-marginal
/// parameters that produced it.
struct OneStepPredictive {
  double f;
  double q;
  double alpha;
  double beta;
  bool capped;
  NgalParams ngal;
};

struct SeqOptions {
  DensityMethod density_method = DensityMethod::cf_inversion;
  QuadratureOptions quadrature = {};
  bool compute_log_predictive = true;
};

// ---------------------------------------------------------------------------
// Filter operations

/// Evolution a* = G* m, R* = G* C G*' + W* with G* = blockdiag(G_t, 1) and
/// W* = blockdiag(W_t, w_u); in discount mode the whole propagated matrix is
/// inflated by 1/delta instead.
inline AugmentedState evolve(const AugmentedState& state,
                             const ModelSpec& spec, int t) {
  const int p = spec.state_dim;
  Eigen::MatrixXd Gs = Eigen::MatrixXd::Zero(p + 1, p + 1);
  Gs.topLeftCorner(p, p) = spec.transition(t);
  Gs(p, p) = 1.0;

  AugmentedState out;
  out.m = Gs * state.m;
  Eigen::MatrixXd propagated = Gs * state.C * Gs.transpose();
  if (const auto* d = std::get_if<DiscountEvolution>(&spec.evolution)) {
    out.C = symmetrized(propagated / d->delta);
  } else if (const auto* fx = std::get_if<FixedEvolution>(&spec.evolution)) {
    propagated.topLeftCorner(p, p) += fx->W;
    propagated(p, p) += fx->w_u;
    out.C = symmetrized(propagated);
  } else {
    throw DomainError(
        "sequential engine supports discount or fixed evolution only");
  }
  return out;
}

inline UGammaMarginal u_marginal_gamma(const AugmentedState& prior_state,
                                       double phi) {
  if (!(phi > 0.0)) throw DomainError("phi must be positive");
  const double r_u = prior_state.u_var();
  if (!(r_u > 0.0)) throw DomainError("u-block variance must be positive");
  double alpha = phi / r_u;
  bool capped = false;
  if (alpha < 1.0001) {
    alpha = 1.0001;
    capped = true;
  }
  return UGammaMarginal{alpha, std::exp(-prior_state.u_mean()) * alpha,
                        capped};
}

/// NGAL one-step-ahead forecast: the GAL component carries the weight
/// mixture, the normal component the state uncertainty F'R F.
inline OneStepPredictive predictive(const AugmentedState& prior_state,
                                    const ModelSpec& spec,
                                    const QuantileSpec& quantile, double phi,
                                    int t) {
  const UGammaMarginal ug = u_marginal_gamma(prior_state, phi);
  const Eigen::VectorXd F = spec.design(t);
  const Eigen::VectorXd a = prior_state.state_mean();
  const Eigen::MatrixXd R = prior_state.state_cov();

  const double sigma = 1.0 / std::sqrt(phi);
  const double mean_u = ug.alpha / ug.beta;
  const double frf = F.dot(R * F);

  OneStepPredictive pred;
  pred.alpha = ug.alpha;
  pred.beta = ug.beta;
  pred.capped = ug.capped;
  pred.f = F.dot(a) + quantile.a_tau * sigma * mean_u;
  pred.q = frf + quantile.b_tau * mean_u +
           quantile.a_tau * quantile.a_tau * ug.alpha / (ug.beta * ug.beta);
  pred.ngal = NgalParams::make(
      GalParams::make(F.dot(a), quantile.a_tau * sigma / ug.beta,
                      quantile.b_tau / (phi * ug.beta), ug.alpha),
      frf / phi);
  return pred;
}

/// Bayes linear posterior: m* = a* + A (y - f), C* = R* - A q A' with the
/// gain assembled from the exp(u) linearization around a_u.
inline AugmentedState bayes_linear_update(const AugmentedState& prior_state,
                                          const OneStepPredictive& pred,
                                          double y, double phi,
                                          const ModelSpec& spec,
                                          const QuantileSpec& quantile,
                                          int t) {
  if (!(pred.q > 0.0)) throw NumericalError("predictive variance q <= 0");
  if (!std::isfinite(y)) throw DomainError("observation must be finite");
  const int p = spec.state_dim;
  const Eigen::VectorXd F = spec.design(t);
  const Eigen::MatrixXd R = prior_state.state_cov();
  const Eigen::VectorXd lambda = prior_state.cross_cov();
  const double r_u = prior_state.u_var();
  const double sigma = 1.0 / std::sqrt(phi);
  const double exp_au = pred.alpha / pred.beta;

  Eigen::VectorXd gain(p + 1);
  gain.head(p) = (R * F + sigma * quantile.a_tau * exp_au * lambda) / pred.q;
  gain[p] =
      (lambda.dot(F) + sigma * quantile.a_tau * exp_au * r_u) / pred.q;

  AugmentedState out;
  out.m = prior_state.m + gain * (y - pred.f);
  out.C = ensure_spd(prior_state.C -
                     pred.q * (gain * gain.transpose()));
  if (!out.m.allFinite()) {
    throw NumericalError("bayes linear update produced non-finite moments");
  }
  return out;
}

struct ConditionalStep {
  GaussianState state;
  double f;
  double q;
};

/// Exact conjugate update given the log-weight u_t (the oracle the Bayes
/// linear step is checked against): f(u) = F'a + a_tau phi^{-1/2} e^u,
/// q(u) = F'R F + b_tau e^u, all in the scaled convention.
inline ConditionalStep conditional_filter_step(const GaussianState& state,
                                               double y, double u, double phi,
                                               const ModelSpec& spec,
                                               const QuantileSpec& quantile,
                                               int t) {
  const Eigen::MatrixXd G = spec.transition(t);
  const Eigen::VectorXd F = spec.design(t);
  const Eigen::VectorXd a = G * state.m;
  Eigen::MatrixXd R = G * state.C * G.transpose();
  if (const auto* d = std::get_if<DiscountEvolution>(&spec.evolution)) {
    R /= d->delta;
  } else if (const auto* fx = std::get_if<FixedEvolution>(&spec.evolution)) {
    R += fx->W;
  } else {
    throw DomainError(
        "sequential engine supports discount or fixed evolution only");
  }
  R = symmetrized(R);

  const double expu = std::exp(u);
  ConditionalStep out;
  out.f = F.dot(a) + quantile.a_tau * expu / std::sqrt(phi);
  out.q = F.dot(R * F) + quantile.b_tau * expu;
  const Eigen::VectorXd RF = R * F;
  out.state.m = a + RF * ((y - out.f) / out.q);
  out.state.C = symmetrized(R - RF * RF.transpose() / out.q);
  return out;
}

/// log p(y | D_{t-1}, phi) under the NGAL one-step law. A density that
/// underflows to zero yields -inf.
inline double log_predictive(const OneStepPredictive& pred, double y,
                             const SeqOptions& opt = {}) {
  const double d = ngal_density(y, pred.ngal, opt.density_method,
                                opt.quadrature);
  return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Filter driver

struct StepRecord {
  int t;
  double f;
  double q;
  double alpha;
  double beta;
  bool capped;
  double log_pred;
  Eigen::VectorXd m;       // posterior augmented mean
  Eigen::VectorXd c_diag;  // posterior augmented covariance diagonal
  double linpred_var;      // F' C F of the posterior state block (scaled)
};

struct FilterResult {
  AugmentedState final_state;
  std::vector<StepRecord> steps;
  double total_log_pred = 0.0;
  int n_capped = 0;
};

/// Single-owner sequential filter; step() consumes one observation. Feeding
/// observations one at a time or in one loop is the same code path, so the
/// final state is bitwise identical either way.
class SequentialFilter {
 public:
  SequentialFilter(const ModelSpec& spec, const PriorSpec& prior,
                   const QuantileSpec& quantile, double phi,
                   SeqOptions options = {})
      : spec_(spec),
        quantile_(quantile),
        phi_(phi),
        options_(options),
        state_(AugmentedState::from_prior(prior, spec.state_dim)) {
    spec_.validate();
    if (!(phi > 0.0) || !std::isfinite(phi)) {
      throw DomainError("phi must be positive and finite");
    }
  }

  StepRecord step(double y) {
    ++t_;
    AugmentedState prior_state = evolve(state_, spec_, t_);
    // Moment-matching fallback for a too-diffuse log weight: shrink the
    // u block to the largest variance with a valid gamma mapping so the
    // marginal, the gain and q stay mutually consistent (keeps PSD via a
    // congruence scaling of the cross block).
    bool capped = false;
    const double r_u_max = phi_ / 1.0001;
    if (prior_state.u_var() > r_u_max) {
      capped = true;
      const int p = spec_.state_dim;
      const double shrink = std::sqrt(r_u_max / prior_state.u_var());
      prior_state.C.topRightCorner(p, 1) *= shrink;
      prior_state.C.bottomLeftCorner(1, p) *= shrink;
      prior_state.C(p, p) = r_u_max;
    }
    OneStepPredictive pred =
        predictive(prior_state, spec_, quantile_, phi_, t_);
    pred.capped = pred.capped || capped;
    StepRecord rec;
    rec.t = t_;
    rec.f = pred.f;
    rec.q = pred.q;
    rec.alpha = pred.alpha;
    rec.beta = pred.beta;
    rec.capped = pred.capped;
    rec.log_pred = options_.compute_log_predictive
                       ? log_predictive(pred, y, options_)
                       : std::numeric_limits<double>::quiet_NaN();
    if (options_.compute_log_predictive) total_log_pred_ += rec.log_pred;
    if (pred.capped) ++n_capped_;

    state_ = bayes_linear_update(prior_state, pred, y, phi_, spec_,
                                 quantile_, t_);
    rec.m = state_.m;
    rec.c_diag = state_.C.diagonal();
    const Eigen::VectorXd F = spec_.design(t_);
    rec.linpred_var = F.dot(state_.state_cov() * F);
    return rec;
  }

  const AugmentedState& state() const { return state_; }
  int time() const { return t_; }
  double total_log_pred() const { return total_log_pred_; }
  int n_capped() const { return n_capped_; }

 private:
  ModelSpec spec_;
  QuantileSpec quantile_;
  double phi_;
  SeqOptions options_;
  AugmentedState state_;
  int t_ = 0;
  double total_log_pred_ = 0.0;
  int n_capped_ = 0;
};

inline FilterResult run_filter(const TimeSeriesData& data,
                               const ModelSpec& spec, const PriorSpec& prior,
                               const QuantileSpec& quantile, double phi,
                               const SeqOptions& options = {}) {
  data.validate();
  SequentialFilter filter(spec, prior, quantile, phi, options);
  FilterResult out;
  out.steps.reserve(data.y.size());
  for (double y : data.y) out.steps.push_back(filter.step(y));
  out.final_state = filter.state();
  out.total_log_pred = filter.total_log_pred();
  out.n_capped = filter.n_capped();
  return out;
}

// ---------------------------------------------------------------------------
// Plug-in MAP estimation of phi

struct PhiEstimate {
  double phi_inv = 1.0;
  std::vector<double> trace;  // best objective after each accepted iteration
  bool converged = false;
  int iterations = 0;
  double cross_check_diff = 0.0;  // |log posterior| gap between density routes
};

struct MapPhiOptions {
  int max_iterations = 100;
  double tol_objective = 1e-8;
  double tol_rel_phi = 1e-6;
  SeqOptions filter = {};
};

/// Maximum a posteriori fit of the precision phi^{-1}: each objective
/// evaluation is one full filter pass accumulating the NGAL log predictive
/// plus the Ga(n0/2, d0/2) log prior; the scalar search runs on log phi^{-1}
/// (bracket expansion followed by golden section).
inline PhiEstimate fit_map_phi(const TimeSeriesData& data,
                               const ModelSpec& spec, const PriorSpec& prior,
                               const QuantileSpec& quantile,
                               double phi_inv_init,
                               const MapPhiOptions& opt = {}) {
  if (!(phi_inv_init > 0.0)) {
    throw DomainError("initial phi^{-1} must be positive");
  }
  PhiEstimate est;
  int evals = 0;
  double best_x = std::log(phi_inv_init);
  double best_obj = -std::numeric_limits<double>::infinity();

  const auto objective = [&](double x) {
    const double v = std::exp(x);
    double obj = -std::numeric_limits<double>::infinity();
    try {
      const FilterResult run =
          run_filter(data, spec, prior, quantile, 1.0 / v, opt.filter);
      const double a = 0.5 * prior.n0;
      const double b = 0.5 * prior.d0;
      const double log_prior =
          a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(v) - b * v;
      obj = run.total_log_pred + log_prior;
    } catch (const NumericalError&) {
      // candidate phi broke the quadrature or the filter; reject it
    }
    ++evals;
    if (obj > best_obj) {
      best_obj = obj;
      best_x = x;
      est.trace.push_back(obj);
    }
    return obj;
  };

  // bracket the maximum on the log scale
  double step = std::log(4.0);
  double xm = std::log(phi_inv_init);
  double fm = objective(xm);
  double xl = xm - step, xr = xm + step;
  double fl = objective(xl), fr = objective(xr);
  while ((fl > fm || fr > fm) && evals < opt.max_iterations) {
    if (fl > fr) {
      xr = xm;
      fr = fm;
      xm = xl;
      fm = fl;
      xl = xm - step;
      fl = objective(xl);
    } else {
      xl = xm;
      fl = fm;
      xm = xr;
      fm = fr;
      xr = xm + step;
      fr = objective(xr);
    }
    step *= 1.4;
  }

  // golden section inside [xl, xr]
  const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = xl, hi = xr;
  double p1 = hi - invphi * (hi - lo);
  double p2 = lo + invphi * (hi - lo);
  double f1 = objective(p1);
  double f2 = objective(p2);
  double prev_best = best_obj;
  int gss_iters = 0;
  while (evals < opt.max_iterations) {
    if (f1 < f2) {
      lo = p1;
      p1 = p2;
      f1 = f2;
      p2 = lo + invphi * (hi - lo);
      f2 = objective(p2);
    } else {
      hi = p2;
      p2 = p1;
      f2 = f1;
      p1 = hi - invphi * (hi - lo);
      f1 = objective(p1);
    }
    ++gss_iters;
    const double rel_width = std::abs(std::expm1(hi - lo));
    if (rel_width < opt.tol_rel_phi ||
        (rel_width < 1e-3 && std::abs(f1 - f2) < opt.tol_objective)) {
      est.converged = true;
      break;
    }
    prev_best = best_obj;
  }
  (void)prev_best;
  (void)gss_iters;

  est.phi_inv = std::exp(best_x);
  est.iterations = evals;

  // cross-check the optimum with the other density route
  SeqOptions alt = opt.filter;
  alt.density_method = alt.density_method == DensityMethod::cf_inversion
                           ? DensityMethod::convolution
                           : DensityMethod::cf_inversion;
  const double lp_main =
      run_filter(data, spec, prior, quantile, 1.0 / est.phi_inv, opt.filter)
          .total_log_pred;
  const double lp_alt =
      run_filter(data, spec, prior, quantile, 1.0 / est.phi_inv, alt)
          .total_log_pred;
  est.cross_check_diff = std::abs(lp_main - lp_alt);
  return est;
}

}  // namespace dqlm

#endif  // DQLM_SEQFILTER_HPP
