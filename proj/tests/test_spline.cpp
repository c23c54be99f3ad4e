#include <cmath>

#include "doctest.h"

#include "adiabatic/spline.hpp"

using namespace adiabatic;

TEST_CASE("not-a-knot spline reproduces cubics exactly") {
  const int n = 11;
  const double h = 0.3;
  Eigen::MatrixXd y(n, 1);
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + i * h;
    y(i, 0) = 2 * x * x * x - x * x + 0.5 * x - 3;
  }
  RealSpline s(-1.0, h, y);
  for (double x : {-1.0, -0.77, 0.0, 0.41, 1.9, 2.0}) {
    CHECK(s(x) == doctest::Approx(2 * x * x * x - x * x + 0.5 * x - 3).epsilon(1e-12));
    CHECK(s.derivative(x) == doctest::Approx(6 * x * x - 2 * x + 0.5).epsilon(1e-11));
  }
  CHECK(s.contains(2.0));
  CHECK_FALSE(s.contains(2.1));
}

TEST_CASE("complex spline converges at fourth order") {
  auto err_for = [](int n) {
    const double h = 2.0 / (n - 1);
    Eigen::MatrixXcd y(n, 2);
    for (int i = 0; i < n; ++i) {
      const double x = i * h;
      y(i, 0) = std::exp(cplx(0, 1) * x);
      y(i, 1) = std::sin(3 * x);
    }
    ComplexSpline s(0.0, h, y);
    double e = 0;
    for (int k = 0; k <= 200; ++k) {
      const double x = 2.0 * k / 200;
      cplx out[2];
      s.eval(x, out);
      e = std::max(e, std::abs(out[0] - std::exp(cplx(0, 1) * x)));
      e = std::max(e, std::abs(out[1] - std::sin(3 * x)));
    }
    return e;
  };
  const double e1 = err_for(41);
  const double e2 = err_for(81);
  CHECK(e2 < 1e-5);
  CHECK(std::log2(e1 / e2) > 3.5);
}

TEST_CASE("spline rejects too few samples") {
  CHECK_THROWS_AS(RealSpline(0.0, 1.0, Eigen::MatrixXd::Zero(3, 1)), ConfigError);
}
