#ifndef DQLM_LINALG_HPP
#define DQLM_LINALG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "dqlm/common.hpp"
#include "dqlm/rng.hpp"

namespace dqlm {

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

/// Cholesky with an escalating jitter ladder: symmetrize, then try
/// factorizations with 0, 1e-10, 1e-9, ..., 1e-6 added to the diagonal.
/// Throws NumericalError once the ladder is exhausted.
inline Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd sym = symmetrized(m);
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt;
  const Eigen::MatrixXd eye =
      Eigen::MatrixXd::Identity(sym.rows(), sym.cols());
  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
    llt.compute(sym + jitter * eye);
    if (llt.info() == Eigen::Success) return llt;
  }
  std::ostringstream msg;
  msg << "matrix of dimension " << m.rows()
      << " not positive definite after jitter up to 1e-6";
  throw NumericalError(msg.str());
}

/// Symmetrize and, if needed, add the smallest jitter from the ladder that
/// makes the matrix factorizable. Throws past 1e-6.
inline Eigen::MatrixXd ensure_spd(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd sym = symmetrized(m);
  if (Eigen::LLT<Eigen::MatrixXd>(sym).info() == Eigen::Success) return sym;
  const Eigen::MatrixXd eye =
      Eigen::MatrixXd::Identity(sym.rows(), sym.cols());
  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
    Eigen::MatrixXd candidate = sym + jitter * eye;
    if (Eigen::LLT<Eigen::MatrixXd>(candidate).info() == Eigen::Success) {
      return candidate;
    }
  }
  throw NumericalError("matrix not positive definite after jitter up to 1e-6");
}

inline bool is_spd(const Eigen::MatrixXd& m, double asym_tol = 1e-8) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() >
      asym_tol * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(m));
  return llt.info() == Eigen::Success;
}

/// Draw from N(mean, cov). A zero covariance returns the mean exactly.
inline Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean,
                                  const Eigen::MatrixXd& cov, Rng& rng) {
  if (cov.isZero(0.0)) return mean;
  Eigen::LLT<Eigen::MatrixXd> llt = robust_llt(cov);
  return mean + llt.matrixL() * rng.standard_normal(mean.size());
}

}  // namespace dqlm

#endif  // DQLM_LINALG_HPP
