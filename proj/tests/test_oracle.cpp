#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "uslearn/conjugate_oracle.hpp"
#include "uslearn/loss.hpp"

using namespace uslearn;

TEST_CASE("numeric conjugate of x^2/2 is self-conjugate") {
  const GridSpec grid(-10.0, 10.0, 2001);
  const double v = numeric_conjugate([](double z) { return z * z / 2.0; }, grid, 3.0);
  CHECK(std::abs(v - 4.5) < 1e-8);
}

TEST_CASE("numeric conjugate reproduces closed forms") {
  const Loss tq = Loss::truncated_quadratic();
  const double v1 =
      numeric_conjugate([&](double z) { return tq.eval(z); }, GridSpec(-10, 10, 2001), 2.0);
  CHECK(std::abs(v1 - (-1.0)) < 1e-8);

  const Loss ex = Loss::exponential();
  const double v2 =
      numeric_conjugate([&](double z) { return ex.eval(z); }, GridSpec(-30, 5, 4001), 1.0);
  CHECK(std::abs(v2 - (-1.0)) < 1e-8);
}

TEST_CASE("boundary attainment is an error, not a value") {
  // conjugate of a linear function is finite only at its slope
  CHECK_THROWS_AS(
      numeric_conjugate([](double z) { return z; }, GridSpec(-5, 5, 101), 2.0),
      BoundaryAttainmentError);
  CHECK_THROWS_AS(GridSpec(1.0, 0.0, 100), ValidationError);
  CHECK_THROWS_AS(GridSpec(0.0, 1.0, 2), ValidationError);
}

TEST_CASE("biconjugate of a closed convex function is the function") {
  const Loss tq = Loss::truncated_quadratic();
  const double v = numeric_biconjugate([&](double z) { return tq.eval(z); },
                                       GridSpec(-50, 50, 4001), 0.0);
  CHECK(std::abs(v - 1.0) < 1e-6);

  const double vabs =
      numeric_biconjugate([](double z) { return std::abs(z); }, GridSpec(-10, 10, 2001), 0.3);
  CHECK(std::abs(vabs - 0.3) < 1e-6);

  const Loss ee = Loss::estimation_error(1.0, 1.0);
  const double vee = numeric_biconjugate([&](double z) { return ee.eval(z); },
                                         GridSpec(-50, 50, 4001), 1.0);
  CHECK(std::abs(vee - 4.0) < 1e-6);
}

TEST_CASE("biconjugate equals each shipped loss pointwise") {
  for (const Loss& l : {Loss::hinge(0.5), Loss::truncated_quadratic(),
                        Loss::exponential(), Loss::estimation_error(1.0, 1.0)}) {
    const GridSpec grid = default_grid(l);
    BiconjugateOracle oracle([&](double z) { return l.eval(z); }, grid);
    const double z_hi = l.kind() == LossKind::kExponential ? 4.0 : 10.0;
    double worst = 0.0;
    for (int i = 0; i <= 60; ++i) {
      const double z = -10.0 + (z_hi + 10.0) * i / 60.0;
      worst = std::max(worst, std::abs(oracle.eval(z) - l.eval(z)));
    }
    INFO("loss " << l.name());
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("numeric conjugate is convex in alpha") {
  const Loss tq = Loss::truncated_quadratic();
  auto f = [&](double z) { return tq.eval(z); };
  const GridSpec grid(-50, 50, 4001);
  for (double a : {0.5, 1.0, 3.0, 7.0}) {
    for (double step : {0.25, 1.0, 2.0}) {
      const double left = numeric_conjugate(f, grid, a);
      const double mid = numeric_conjugate(f, grid, a + step);
      const double right = numeric_conjugate(f, grid, a + 2 * step);
      CHECK(mid <= 0.5 * (left + right) + 1e-9);
    }
  }
}
