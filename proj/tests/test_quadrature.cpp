#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "dqlm/quadrature.hpp"

using dqlm::integrate;
using dqlm::QuadratureOptions;

TEST_CASE("polynomial integrates exactly") {
  auto r = integrate([](double x) { return x * x; }, 0.0, 1.0);
  REQUIRE(r.converged);
  CHECK(r.value == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("standard normal density integrates to one") {
  auto pdf = [](double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  };
  auto r = integrate(pdf, -10.0, 10.0);
  REQUIRE(r.converged);
  CHECK(r.value == Catch::Approx(1.0).margin(1e-10));
  CHECK(r.error <= 1e-8);
}

TEST_CASE("oscillatory integrand") {
  // int_0^{20 pi} cos(x) dx = 0
  auto r = integrate([](double x) { return std::cos(x); }, 0.0,
                     20.0 * std::numbers::pi);
  REQUIRE(r.converged);
  CHECK(r.value == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("integrable endpoint singularity") {
  // int_0^1 x^{-1/2} dx = 2
  auto r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                     QuadratureOptions{1e-8, 200});
  CHECK(r.value == Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("budget exhaustion throws with achieved error") {
  QuadratureOptions tight{1e-16, 3};
  auto spike = [](double x) { return std::exp(-1e6 * (x - 0.3) * (x - 0.3)); };
  bool threw = false;
  try {
    dqlm::integrate_or_throw(spike, 0.0, 1.0, tight);
  } catch (const dqlm::NumericalError& e) {
    threw = true;
    CHECK(e.achieved_error > 1e-16);
  }
  CHECK(threw);
}

TEST_CASE("degenerate interval") {
  auto r = integrate([](double x) { return x; }, 2.0, 2.0);
  CHECK(r.value == 0.0);
  CHECK(r.converged);
}
