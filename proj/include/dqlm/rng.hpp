#ifndef DQLM_RNG_HPP
#define DQLM_RNG_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "dqlm/common.hpp"

namespace dqlm {

/// Seedable random source. Every sampler in the library takes one of these
/// explicitly; callers that run concurrently each own their instance.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return unif_(engine_); }

  /// Uniform on (0, 1), never exactly zero.
  double uniform_pos() {
    double u;
    do {
      u = unif_(engine_);
    } while (u <= 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(engine_); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma with shape/rate parameterization (mean = shape / rate).
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
      throw DomainError("Rng::gamma requires shape > 0 and rate > 0");
    }
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
  }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw DomainError("Rng::exponential requires rate > 0");
    std::exponential_distribution<double> dist(rate);
    return dist(engine_);
  }

  double chi_squared(double df) { return gamma(0.5 * df, 0.5); }

  Eigen::VectorXd standard_normal(Eigen::Index n) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dqlm

#endif  // DQLM_RNG_HPP
