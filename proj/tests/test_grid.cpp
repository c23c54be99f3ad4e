#include <cmath>
#include <numbers>

#include "doctest.h"

#include "adiabatic/grid.hpp"

using namespace adiabatic;

namespace {

ScalarField sample(const SpatialGrid& g, double eps, auto f) {
  ScalarField s{g, ComplexArray(static_cast<Eigen::Index>(g.n())), eps, 0.0};
  for (std::size_t i = 0; i < g.n(); ++i) s.values[static_cast<Eigen::Index>(i)] = f(g.x(i));
  return s;
}

}  // namespace

TEST_CASE("make_grid spacing and wavenumbers") {
  const auto g = make_grid(-10, 10, 8);
  CHECK(g.spacing() == doctest::Approx(2.5));
  CHECK(g.x(0) == -10.0);
  CHECK(g.x(7) == doctest::Approx(7.5));

  const auto p = make_grid(0, 2 * std::numbers::pi, 16);
  CHECK(p.frequencies()[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.frequencies()[8] == doctest::Approx(-8.0));
  CHECK(p.frequencies()[15] == doctest::Approx(-1.0));
}

TEST_CASE("make_grid rejects bad input") {
  CHECK_THROWS_WITH_AS(make_grid(-10, 10, 7), "n must be a power of two", ConfigError);
  CHECK_THROWS_AS(make_grid(1, 1, 8), ConfigError);
  CHECK_THROWS_AS(make_grid(2, 1, 8), ConfigError);
  CHECK_THROWS_AS(make_grid(0, 1, 4), ConfigError);
}

TEST_CASE("copies share storage") {
  const auto g = make_grid(0, 1, 64);
  const SpatialGrid h = g;
  CHECK(&g.points() == &h.points());
  CHECK(g.same_as(h));
}

TEST_CASE("spectral derivative of band-limited and decaying data") {
  const auto g = make_grid(0, 2 * std::numbers::pi, 64);
  auto one = sample(g, 1.0, [](double) { return cplx(1.0); });
  CHECK(spectral_derivative(one, 1).values.abs().maxCoeff() < 1e-14);

  auto s = sample(g, 1.0, [](double x) { return cplx(std::sin(x)); });
  auto ds = spectral_derivative(s, 1);
  double err = 0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    err = std::max(err, std::abs(ds.values[static_cast<Eigen::Index>(i)] - std::cos(g.x(i))));
  }
  CHECK(err <= 1e-12);

  const auto gg = make_grid(-16, 16, 2048);
  auto gauss = sample(gg, 1.0, [](double x) { return cplx(std::exp(-x * x)); });
  auto dg = spectral_derivative(gauss, 1);
  err = 0;
  for (std::size_t i = 0; i < gg.n(); ++i) {
    const double x = gg.x(i);
    err = std::max(err, std::abs(dg.values[static_cast<Eigen::Index>(i)] + 2 * x * std::exp(-x * x)));
  }
  CHECK(err <= 1e-10);

  auto twice = spectral_derivative(dg, 1);
  auto second = spectral_derivative(gauss, 2);
  CHECK((twice.values - second.values).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("Parseval and sigma norms") {
  const double eps = 0.01;
  const auto g = make_grid(-4, 4, 4096);
  const double norm = std::pow(std::numbers::pi, -0.25);
  auto f = sample(g, eps, [&](double x) {
    const double y = x / std::sqrt(eps);
    return cplx(std::pow(eps, -0.25) * norm * std::exp(-y * y / 2));
  });
  const double l2 = l2_norm(f);
  CHECK(l2 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(l2_norm_fourier(g, f.values) - l2) <= 1e-12 * l2);

  const auto r0 = sigma_norm(f, 0);
  CHECK(r0.value == doctest::Approx(l2).epsilon(1e-15));

  const auto r1 = sigma_norm(f, 1);
  CHECK(r1.component(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  // |x| f: substituting x = sqrt(eps) y gives sqrt(eps) * ||y a|| = sqrt(eps / 2);
  // cross-check against a fine midpoint quadrature.
  double q = 0;
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    const double x = -4 + 8.0 * (i + 0.5) / m;
    const double y = x / std::sqrt(eps);
    const double fx = std::pow(eps, -0.25) * norm * std::exp(-y * y / 2);
    q += x * x * fx * fx * 8.0 / m;
  }
  CHECK(r1.component(1, 0) == doctest::Approx(std::sqrt(q)).epsilon(1e-9));
  CHECK(r1.component(1, 0) == doctest::Approx(std::sqrt(eps / 2)).epsilon(1e-10));
  CHECK(r1.component(0, 1) == doctest::Approx(std::sqrt(eps) / std::sqrt(2.0)).epsilon(1e-10));
  CHECK(r1.value == doctest::Approx(1.0).epsilon(1e-6));

  auto scaled = f;
  scaled.values *= cplx(-3.0, 4.0);
  const auto r2 = sigma_norm(f, 2);
  CHECK(std::abs(sigma_norm(scaled, 2).value - 5.0 * r2.value) <= 1e-12 * 5.0 * r2.value);
  CHECK(r2.components.size() == 6);

  CHECK_THROWS_AS(sigma_norm(f, 3), ConfigError);
}

TEST_CASE("vector field norms use the pointwise Hermitian norm") {
  const auto g = make_grid(-8, 8, 256);
  VectorField v{g, Eigen::MatrixXcd::Zero(256, 2), 0.1, 0.0};
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double e = std::exp(-g.x(i) * g.x(i));
    v.values(static_cast<Eigen::Index>(i), 0) = 3.0 * e;
    v.values(static_cast<Eigen::Index>(i), 1) = cplx(0, 4.0) * e;
  }
  ComplexArray scalar(256);
  for (Eigen::Index i = 0; i < 256; ++i) scalar[i] = 5.0 * std::exp(-g.x(i) * g.x(i));
  CHECK(l2_norm(v) == doctest::Approx(l2_norm(g, scalar)).epsilon(1e-14));
  CHECK(boundary_magnitude(v.values) < 1e-20);
}
