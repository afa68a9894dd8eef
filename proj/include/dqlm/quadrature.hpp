#ifndef DQLM_QUADRATURE_HPP
#define DQLM_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <utility>
#include <vector>

#include "dqlm/common.hpp"

namespace dqlm {

struct QuadratureOptions {
  double abs_tol = 1e-8;
  int max_subdivisions = 200;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate
  int subdivisions = 0;
  bool converged = false;
};

namespace detail {

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule
// (QUADPACK dqk15 constants). Gauss nodes are the odd-indexed abscissae.
inline constexpr double kGk15Nodes[8] = {
    0.9914553711208126392068547, 0.9491079123427585245261897,
    0.8648644233597690727897128, 0.7415311855993944398638648,
    0.5860872354676911302941448, 0.4058451513773971669066064,
    0.2077849550078984676006894, 0.0};
inline constexpr double kGk15KronrodW[8] = {
    0.0229353220105292249637320, 0.0630920926299785532907007,
    0.1047900103222501838398763, 0.1406532597155259187451896,
    0.1690047266392679028265834, 0.1903505780647854099132564,
    0.2044329400752988924141620, 0.2094821410847278280129992};
inline constexpr double kGk15GaussW[4] = {
    0.1294849661688696932706114, 0.2797053914892766679014678,
    0.3818300505051189449503698, 0.4179591836734693877551020};

struct Segment {
  double a, b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gk15_apply(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  double fv[15];
  const double fc = f(center);
  fv[7] = fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGk15Nodes[i];
    fv[i] = f(center - dx);
    fv[14 - i] = f(center + dx);
  }

  double resk = kGk15KronrodW[7] * fc;
  double resabs = std::abs(resk);
  for (int i = 0; i < 7; ++i) {
    resk += kGk15KronrodW[i] * (fv[i] + fv[14 - i]);
    resabs += kGk15KronrodW[i] * (std::abs(fv[i]) + std::abs(fv[14 - i]));
  }
  double resg = kGk15GaussW[3] * fc;
  for (int i = 0; i < 3; ++i) {
    resg += kGk15GaussW[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
  }

  const double mean = 0.5 * resk;
  double resasc = kGk15KronrodW[7] * std::abs(fc - mean);
  for (int i = 0; i < 7; ++i) {
    resasc += kGk15KronrodW[i] *
              (std::abs(fv[i] - mean) + std::abs(fv[14 - i] - mean));
  }
  resasc *= half;
  resabs *= half;

  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(err, 50.0 * eps * resabs);
  }
  return Segment{a, b, resk * half, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (G7,K15) integration of f over [a, b].
/// Splits the interval with the largest error estimate until the summed
/// estimate drops below abs_tol or the subdivision budget is exhausted.
template <class F>
QuadratureResult integrate(F&& f, double a, double b,
                           const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  if (!(std::isfinite(a) && std::isfinite(b))) {
    throw DomainError("integrate: endpoints must be finite");
  }
  if (a == b) {
    out.converged = true;
    return out;
  }

  std::priority_queue<detail::Segment> queue;
  detail::Segment whole = detail::gk15_apply(f, a, b);
  double total = whole.value;
  double total_err = whole.error;
  queue.push(whole);

  int splits = 0;
  while (total_err > opt.abs_tol && splits < opt.max_subdivisions) {
    detail::Segment worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // interval no longer splittable at double precision
      queue.push(worst);
      break;
    }
    detail::Segment left = detail::gk15_apply(f, worst.a, mid);
    detail::Segment right = detail::gk15_apply(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++splits;
  }

  out.value = total;
  out.error = total_err;
  out.subdivisions = splits;
  out.converged = total_err <= opt.abs_tol;
  return out;
}

/// Same as integrate() but a failure to reach abs_tol raises NumericalError
/// carrying the achieved error estimate.
template <class F>
double integrate_or_throw(F&& f, double a, double b,
                          const QuadratureOptions& opt = {}) {
  QuadratureResult r = integrate(std::forward<F>(f), a, b, opt);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "quadrature did not converge after " << r.subdivisions
        << " subdivisions; achieved error " << r.error << " > tolerance "
        << opt.abs_tol;
    throw NumericalError(msg.str(), r.error);
  }
  return r.value;
}

}  // namespace dqlm

#endif  // DQLM_QUADRATURE_HPP
