#include <cmath>
#include <numbers>

#include "doctest.h"

#include "adiabatic/envelope.hpp"

using namespace adiabatic;

namespace {

ComplexArray gaussian(const SpatialGrid& g, cplx A, cplx c) {
  ComplexArray u(static_cast<Eigen::Index>(g.n()));
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double y = g.x(i);
    u[static_cast<Eigen::Index>(i)] = c * std::exp(kI * A * y * y / 2.0);
  }
  return u;
}

// Strang splitting maps Gaussians c exp(i A y^2/2) to Gaussians exactly.
void gaussian_map(cplx& A, cplx& c, double kappa, double dt) {
  A -= kappa * dt / 2;
  const cplx q = 1.0 + A * dt;
  c /= std::sqrt(q);
  A /= q;
  A -= kappa * dt / 2;
}

}  // namespace

TEST_CASE("free Gaussian spreading") {
  const auto g = default_envelope_grid();
  EnvelopeStepper s(g, gaussian(g, kI, std::pow(std::numbers::pi, -0.25)), 0.0,
                    [](double) { return 0.0; });
  const double d0 = envelope_moments(s.state(), 0, 1);
  for (int i = 0; i < 1000; ++i) s.step(1e-3);
  const double center = std::norm(s.state().values[1024]);
  CHECK(std::abs(center - 1 / std::sqrt(2 * std::numbers::pi)) < 1e-6);
  CHECK(std::abs(envelope_moments(s.state(), 0, 1) - d0) < 1e-8);
}

TEST_CASE("harmonic envelope follows the Gaussian-parameter map") {
  const auto g = default_envelope_grid();
  const cplx A0 = 0.5 * kI;
  const cplx c0 = std::pow(2 * std::numbers::pi, -0.25);
  EnvelopeStepper s(g, gaussian(g, A0, c0), 0.0, [](double) { return 1.0; });
  const double dt = 1e-3;
  cplx A = A0, c = c0;
  for (int i = 0; i < 1000; ++i) {
    s.step(dt);
    gaussian_map(A, c, 1.0, dt);
  }
  const ComplexArray ref = gaussian(g, A, c);
  CHECK((s.state().values - ref).abs().maxCoeff() < 1e-8);

  // Closed-form Riccati solution A' = -(A^2 + 1).
  const cplx phase = std::atan(A0);
  const cplx exact = std::tan(phase - 1.0);
  CHECK(std::abs(A - exact) < 1e-6);
}

TEST_CASE("mass conservation and second-order self-convergence") {
  const auto g = default_envelope_grid();
  const ComplexArray a = gaussian(g, kI, std::pow(std::numbers::pi, -0.25)) * 1.5;
  auto curv = [](double t) { return 1.0 + 0.5 * std::sin(t); };
  auto run = [&](double dt) {
    EnvelopeStepper s(g, a, 1.0, curv);
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < n; ++i) s.step(dt);
    CHECK(s.max_mass_drift() < 1e-10);
    return s.state().values;
  };
  const ComplexArray u1 = run(1e-2);
  const ComplexArray u2 = run(5e-3);
  const ComplexArray u3 = run(2.5e-3);
  const double e12 = l2_norm(g, u1 - u2);
  const double e23 = l2_norm(g, u2 - u3);
  CHECK(e12 / e23 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("moments of the Gaussian") {
  const auto g = default_envelope_grid();
  EnvelopeState st{g, gaussian(g, kI, std::pow(std::numbers::pi, -0.25)), 0.0, 0.0, 1.0};
  CHECK(envelope_moments(st, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(envelope_moments(st, 1, 0) - std::sqrt(1.5)) < 1e-6);
  CHECK_THROWS_AS(envelope_moments(st, 3, 2), ConfigError);
}

TEST_CASE("solve_envelope along a trajectory and the mass guard") {
  const auto b = BranchFunction::from_expr(parse_expr("x^2/2"));
  const auto tr = integrate_trajectory(b, 1.0, 0.0, 1.0, 5e-3);
  const auto g = default_envelope_grid();
  const auto series = solve_envelope(gaussian(g, kI, std::pow(std::numbers::pi, -0.25)), tr, b,
                                     0.0, g, 1e-2, 10);
  CHECK(series.states.size() == 11);
  CHECK(series.states.back().time == doctest::Approx(1.0));
  cplx A = kI, c = std::pow(std::numbers::pi, -0.25);
  for (int i = 0; i < 100; ++i) gaussian_map(A, c, 1.0, 1e-2);
  CHECK((series.states.back().values - gaussian(g, A, c)).abs().maxCoeff() < 1e-10);
  // The continuous ground state is stationary; Strang keeps it to O(dt^2).
  CHECK(std::abs(std::abs(series.states.back().values[1024]) - std::pow(std::numbers::pi, -0.25)) < 1e-5);
  CHECK(series.max_boundary < 1e-10);

  EnvelopeStepper bad(g, gaussian(g, kI, 1.0), 0.0, [](double) { return std::nan(""); });
  CHECK_THROWS_AS(bad.step(1e-3), InvariantError);
}
