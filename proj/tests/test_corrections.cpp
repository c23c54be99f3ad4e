#include <cmath>
#include <numbers>

#include "doctest.h"

#include "adiabatic/corrections.hpp"

using namespace adiabatic;

namespace {

ComplexArray sample(const SpatialGrid& g, auto f) {
  ComplexArray v(static_cast<Eigen::Index>(g.n()));
  for (std::size_t i = 0; i < g.n(); ++i) v[static_cast<Eigen::Index>(i)] = f(g.x(i));
  return v;
}

ComplexArray free_evolve(const SpatialGrid& g, ComplexArray v, double eps, double t) {
  fft_forward(v.data(), g.n());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double k = g.frequencies()[i];
    v[i] *= std::polar(1.0, -eps * k * k * t / 2);
  }
  fft_backward(v.data(), g.n());
  return v;
}

}  // namespace

TEST_CASE("free plane wave and isometry") {
  const auto g = make_grid(0, 2 * std::numbers::pi, 64);
  const double eps = 0.3;
  const RealArray zero = RealArray::Zero(64);
  ScalarField f{g, sample(g, [](double x) { return std::exp(cplx(0, 5 * x)); }), eps, 0.0};
  for (int i = 0; i < 100; ++i) f = scalar_step(f, zero, 1e-2);
  const ComplexArray exact = sample(g, [&](double x) {
    return std::exp(cplx(0, 5 * x)) * std::polar(1.0, -eps * 25 * 1.0 / 2);
  });
  CHECK((f.values - exact).abs().maxCoeff() <= 1e-12);

  const RealArray lam = g.points().cos() + g.points().square() * 0.1;
  ScalarField h{g, sample(g, [](double x) { return cplx(std::exp(-std::pow(x - 3, 2)), 0); }), eps, 0};
  const double n0 = l2_norm(h);
  for (int i = 0; i < 50; ++i) {
    h = scalar_step(h, lam, 1e-2);
    CHECK(std::abs(l2_norm(h) - n0) <= 1e-12);
  }
}

TEST_CASE("midpoint Duhamel matches a fine quadrature") {
  const auto g = make_grid(-10, 10, 256);
  const double eps = 0.1, T = 0.1;
  const RealArray zero = RealArray::Zero(256);
  const ComplexArray src = sample(g, [](double x) { return cplx(std::exp(-x * x), 0.3 * x * std::exp(-x * x)); });
  const auto run = solve_correction(g, zero, [&](double, ComplexArray& out) { out = src; }, eps, T, 1e-3);

  const int m = 1000;
  const double dtf = T / m;
  ComplexArray oracle = ComplexArray::Zero(256);
  for (int i = 0; i < m; ++i) {
    const double s = (i + 0.5) * dtf;
    oracle += free_evolve(g, src, eps, T - s) * (dtf / (kI * eps));
  }
  CHECK(l2_norm(g, run.final.values - oracle) <= 1e-6 * l2_norm(g, oracle));
  CHECK(run.times.size() == 101);
  CHECK(run.sigma0.front() == 0.0);
}

TEST_CASE("zero source, linearity and second-order convergence") {
  const auto g = make_grid(-8, 8, 256);
  const double eps = 0.05;
  const RealArray lam = 0.5 * g.points().square();
  auto s1 = [&](double t, ComplexArray& out) {
    out = sample(g, [&](double x) { return std::exp(-x * x) * std::polar(1.0, -t / eps); });
  };
  auto s2 = [&](double t, ComplexArray& out) {
    out = sample(g, [&](double x) { return cplx(0, x) * std::exp(-x * x) * std::cos(t); });
  };
  auto sum = [&](double t, ComplexArray& out) {
    ComplexArray a(256), b(256);
    s1(t, a);
    s2(t, b);
    out = a + b;
  };
  const auto zero = solve_correction(g, lam, [](double, ComplexArray&) {}, eps, 0.2, 1e-3, 50);
  CHECK(zero.final.values.abs().maxCoeff() == 0.0);

  const auto r1 = solve_correction(g, lam, s1, eps, 0.2, 1e-3, 200);
  const auto r2 = solve_correction(g, lam, s2, eps, 0.2, 1e-3, 200);
  const auto r12 = solve_correction(g, lam, sum, eps, 0.2, 1e-3, 200);
  CHECK(l2_norm(g, r12.final.values - r1.final.values - r2.final.values) <= 1e-10);

  const auto a = solve_correction(g, lam, sum, eps, 0.2, 4e-3, 200);
  const auto b = solve_correction(g, lam, sum, eps, 0.2, 2e-3, 200);
  const auto c = solve_correction(g, lam, sum, eps, 0.2, 1e-3, 200);
  const double ratio = l2_norm(g, a.final.values - b.final.values) / l2_norm(g, b.final.values - c.final.values);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("assembly with orthonormal frames") {
  const auto g = make_grid(-8, 8, 128);
  ScalarField g1{g, sample(g, [](double x) { return cplx(std::exp(-x * x), 0); }), 0.1, 0.5};
  ScalarField g2{g, sample(g, [](double x) { return cplx(0, x * std::exp(-x * x)); }), 0.1, 0.5};
  Eigen::MatrixXcd e1(128, 2), e2(128, 2);
  for (Eigen::Index i = 0; i < 128; ++i) {
    const double th = 0.3 * g.x(static_cast<std::size_t>(i));
    e1.row(i) << std::cos(th), std::sin(th);
    e2.row(i) << -std::sin(th), std::cos(th);
  }
  const cplx c(0.6, -0.8);
  const VectorField one = assemble_correction({g1}, {c * e2});
  CHECK(l2_norm(one) == doctest::Approx(std::abs(c) * l2_norm(g1)).epsilon(1e-12));
  const VectorField two = assemble_correction({g1, g2}, {e1, e2});
  const double py = std::sqrt(std::pow(l2_norm(g1), 2) + std::pow(l2_norm(g2), 2));
  CHECK(std::abs(l2_norm(two) - py) <= 1e-8 * py);
  ScalarField late = g2;
  late.time = 0.6;
  CHECK_THROWS_AS(assemble_correction({g1, late}, {e1, e2}), ConfigError);
}

TEST_CASE("averaging probe") {
  const auto g = make_grid(-10, 10, 256);
  ScalarField f{g, sample(g, [](double x) { return cplx(std::exp(-x * x / 2), 0); }), 0.1, 0.0};
  const RealArray lam = 0.5 * g.points().square();
  const double nf = l2_norm(f);
  CHECK(averaging_probe(lam, lam, f, 0.1, 0.5, 1e-3) == doctest::Approx(5.0 * nf).epsilon(1e-12));

  const RealArray zero = RealArray::Zero(256);
  const RealArray one = RealArray::Ones(256);
  const double t = 0.1 * std::numbers::pi;
  CHECK(std::abs(averaging_probe(zero, one, f, 0.1, t, t / 2000) - 2 * nf) <= 1e-6);

  std::vector<double> same;
  for (double eps : {0.04, 0.02, 0.01}) {
    f.epsilon = eps;
    same.push_back(averaging_probe(zero, zero, f, eps, 1.0, 1e-3));
    // Distinct branches stay bounded by 2||f|| instead of growing like 1/eps.
    const double diff = averaging_probe(zero, one, f, eps, 1.0, 1e-3);
    CHECK(std::abs(diff - std::abs(std::polar(1.0, 1.0 / eps) - 1.0) * nf) <= 1e-3 * nf);
  }
  CHECK(std::log(same[2] / same[0]) / std::log(0.25) == doctest::Approx(-1.0).epsilon(0.01));
}
