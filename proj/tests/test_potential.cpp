#include <cmath>

#include "doctest.h"

#include "adiabatic/potential.hpp"

using namespace adiabatic;

namespace {

MatrixPotentialSpec rotating() {
  return MatrixPotentialSpec::from_strings(
      2, {"x^2/2", "x^2/2"},
      {"jb(x)^(-1)*cos(x)", "jb(x)^(-1)*sin(x)", "-(jb(x)^(-1)*cos(x))"});
}

MatrixPotentialSpec example_family() {
  return MatrixPotentialSpec::from_strings(2, {"x^2/2", "x^2/2"},
                                           {"(1+x^2)^(-1/2)", "(1+x^2)^(-1/2)", "-((1+x^2)^(-1/2))"});
}

MatrixPotentialSpec diagonal01() { return MatrixPotentialSpec::from_strings(2, {"0", "1"}, {"0", "0", "0"}); }

MatrixPotentialSpec twisted() {
  return MatrixPotentialSpec::from_strings(
      2, {"x^2/2", "x^2/2"},
      {"jb(x)^(-1)*cos(x + sin(x)/2)", "jb(x)^(-1)*sin(x + sin(x)/2)",
       "-(jb(x)^(-1)*cos(x + sin(x)/2))"});
}

double lambda_minus(double x) { return x * x / 2 - 1 / std::sqrt(1 + x * x); }
double lambda_plus(double x) { return x * x / 2 + 1 / std::sqrt(1 + x * x); }

}  // namespace

TEST_CASE("evaluate_potential") {
  const Eigen::MatrixXd v = evaluate_potential(example_family(), 0.0);
  CHECK(v(0, 0) == doctest::Approx(1.0));
  CHECK(v(0, 1) == doctest::Approx(1.0));
  CHECK(v(1, 0) == doctest::Approx(1.0));
  CHECK(v(1, 1) == doctest::Approx(-1.0));
  CHECK(evaluate_potential(MatrixPotentialSpec::scalar("x^2/2"), 2.0)(0, 0) == doctest::Approx(2.0));
  for (double x : {-3.3, 0.1, 7.0}) {
    const Eigen::MatrixXd m = evaluate_potential(rotating(), x);
    CHECK((m - m.transpose()).norm() == 0.0);
  }
  CHECK_THROWS_AS(MatrixPotentialSpec::from_strings(2, {"x"}, {"0", "0", "0"}), ConfigError);
  CHECK_THROWS_AS(MatrixPotentialSpec::from_strings(2, {"x", "x"}, {"0", "0"}), ConfigError);
  CHECK_THROWS_AS(evaluate_potential(MatrixPotentialSpec::scalar("sqrt(x)"), -1.0), DomainError);
}

TEST_CASE("decompose the rotating family") {
  const auto grid = make_grid(-20, 20, 4096);
  const SpectralData d = decompose(rotating(), grid);
  REQUIRE(d.branches() == 2);
  double max_val = 0, max_vec = 0, max_sum = 0, max_idem = 0, max_res = 0, max_orth = 0;
  double min_adjacent = 1;
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double x = grid.x(i);
    max_val = std::max(max_val, std::abs(d.eigenvalue(0, i) - lambda_minus(x)));
    max_val = std::max(max_val, std::abs(d.eigenvalue(1, i) - lambda_plus(x)));
    const Eigen::Vector2d plus(std::cos(x / 2), std::sin(x / 2));
    max_vec = std::max(max_vec, 1 - std::abs(d.frame(1, i).col(0).dot(plus)));
    const Eigen::MatrixXd p0 = d.projector(0, i);
    const Eigen::MatrixXd p1 = d.projector(1, i);
    max_sum = std::max(max_sum, (p0 + p1 - Eigen::MatrixXd::Identity(2, 2)).norm());
    max_idem = std::max(max_idem, (p0 * p0 - p0).norm());
    max_orth = std::max(max_orth, (p0 * p1).norm());
    const Eigen::MatrixXd v = evaluate_potential(rotating(), x);
    max_res = std::max(max_res, (v * p1 - d.eigenvalue(1, i) * p1).norm());
    if (i > 0) {
      min_adjacent = std::min(min_adjacent, d.frame(0, i).col(0).dot(d.frame(0, i - 1).col(0)));
    }
  }
  CHECK(max_val < 1e-10);
  CHECK(max_vec < 1e-12);
  CHECK(max_sum < 1e-12);
  CHECK(max_idem < 1e-12);
  CHECK(max_orth < 1e-11);
  CHECK(max_res < 1e-10);
  CHECK(min_adjacent > 0.99);

  // Off-grid queries and marching beyond the edge.
  for (double x : {0.123, -19.99, 25.0}) {
    const LocalSpectrum s = d.local(x);
    CHECK(s.values[0] == doctest::Approx(lambda_minus(x)).epsilon(1e-12));
    const Eigen::Vector2d plus(std::cos(x / 2), std::sin(x / 2));
    CHECK(std::abs(s.frames[1].col(0).dot(plus)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("decompose example and diagonal families") {
  const auto grid = make_grid(-5, 5, 256);
  const SpectralData e = decompose(example_family(), grid);
  for (std::size_t i = 0; i < grid.n(); i += 17) {
    const double x = grid.x(i);
    CHECK(e.eigenvalue(1, i) == doctest::Approx(x * x / 2 + std::sqrt(2.0) / std::sqrt(1 + x * x)));
    CHECK(e.eigenvalue(0, i) == doctest::Approx(x * x / 2 - std::sqrt(2.0) / std::sqrt(1 + x * x)));
  }
  const SpectralData d = decompose(diagonal01(), grid);
  for (std::size_t i = 0; i < grid.n(); i += 31) {
    CHECK(d.eigenvalue(0, i) == 0.0);
    CHECK(d.eigenvalue(1, i) == 1.0);
    CHECK(d.frame(0, i)(0, 0) == doctest::Approx(1.0));
    CHECK(d.frame(1, i)(1, 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("crossing branches are renumbered smoothly") {
  // lambda = +-x cross at 0; the frame is constant, so overlap keeps the
  // branch starting lowest on the line lambda = x.
  const auto spec = MatrixPotentialSpec::from_strings(2, {"x", "-x"}, {"0", "0", "0"});
  const auto grid = make_grid(-1, 1, 64);
  const SpectralData d = decompose(spec, grid);
  for (std::size_t i = 0; i < grid.n(); ++i) {
    CHECK(d.eigenvalue(0, i) == doctest::Approx(grid.x(i)));
    CHECK(d.frame(0, i)(0, 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("declared multiplicities") {
  auto spec = MatrixPotentialSpec::from_strings(3, {"x^2/2", "x^2/2", "x^2/2"},
                                                {"0.5", "0.5", "0", "0.5", "0", "0"});
  const auto grid = make_grid(-2, 2, 64);
  CHECK_THROWS_AS(decompose(spec, grid), ConfigError);
  spec.multiplicities = {2, 1};
  const SpectralData d = decompose(spec, grid);
  CHECK(d.branches() == 2);
  CHECK(d.multiplicity(0) == 2);
  CHECK(d.projector(0, 10).trace() == doctest::Approx(2.0));
  CHECK(d.eigenvalue(1, 10) - d.eigenvalue(0, 10) == doctest::Approx(1.0));
  spec.multiplicities = {1, 2};
  CHECK_THROWS_AS(decompose(spec, grid), ConfigError);
}

TEST_CASE("gap report and gamma") {
  const SpectralData r = decompose(rotating(), make_grid(-20, 20, 4096));
  const GapReport g = gap_report(r, 0, 1);
  CHECK(g.fitted_n0 == doctest::Approx(1.0).epsilon(0.05));
  CHECK(g.fitted_c0 == doctest::Approx(2.0).epsilon(0.05));
  CHECK_FALSE(g.violated);
  CHECK_THROWS_AS(gap_report(r, 1, 1), ConfigError);

  const SpectralData d = decompose(diagonal01(), make_grid(-20, 20, 256));
  const GapReport gd = gap_report(d, 0, 1);
  CHECK(gd.min_gap == 1.0);
  CHECK(gd.fitted_n0 == doctest::Approx(0.0));

  const SpectralData e = decompose(example_family(), make_grid(-20, 20, 4096));
  CHECK(gap_report(e, 0, 1).fitted_c0 == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(0.02));

  CHECK(gamma(d, 0, 1, 5) == 1.0);
  CHECK(gamma(r, 0, 1, 2048) == doctest::Approx(0.5));
  CHECK(gamma(r, 0, 1, 77) == -gamma(r, 1, 0, 77));
}

TEST_CASE("projector identities") {
  const auto cd = projector_identity_residuals(example_family(), 0.7, 1e-2);
  for (double v : cd.max) CHECK(v <= 1e-12);
  const auto dg = projector_identity_residuals(diagonal01(), 0.7, 1e-2);
  for (double v : dg.max) CHECK(v <= 1e-12);

  const auto r1 = projector_identity_residuals(rotating(), 0.3, 1e-2);
  const auto r2 = projector_identity_residuals(rotating(), 0.3, 5e-3);
  for (int q = 3; q < 5; ++q) {
    CHECK(r1.max[q] > 1e-8);
    CHECK(r1.max[q] / r2.max[q] == doctest::Approx(4.0).epsilon(0.05));
  }
  const auto t1 = projector_identity_residuals(twisted(), 0.3, 1e-2);
  const auto t2 = projector_identity_residuals(twisted(), 0.3, 5e-3);
  for (int q = 0; q < 5; ++q) {
    CHECK(t1.max[q] > 1e-8);
    CHECK(t1.max[q] / t2.max[q] == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("growth scans") {
  const SpectralData r = decompose(rotating(), make_grid(-20, 20, 4096));
  std::vector<double> xs;
  for (int i = -20; i <= 20; ++i) xs.push_back(i);
  const auto s0 = growth_scan(r, 0, 1, 0, xs, 1.0);
  CHECK(s0.max_gamma_ratio == doctest::Approx(0.5));
  const auto s1 = growth_scan(r, 0, 1, 1, xs, 1.0);
  CHECK(s1.max_projector_ratio == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(s1.argmax_projector == 0.0);

  const SpectralData d = decompose(diagonal01(), make_grid(-20, 20, 256));
  const auto sd = growth_scan(d, 0, 1, 2, xs, 0.0);
  CHECK(sd.max_gamma_ratio == 0.0);
  CHECK(sd.max_projector_ratio == 0.0);
}

TEST_CASE("branch functions") {
  const SpectralData r = decompose(rotating(), make_grid(-4, 4, 512));
  const BranchFunction b = BranchFunction::from_spectral(r, 0);
  for (double x : {-1.1, 0.0, 0.5, 3.2}) {
    const double q = 1 + x * x;
    CHECK(b.value(x) == doctest::Approx(lambda_minus(x)).epsilon(1e-12));
    CHECK(b.d1(x) == doctest::Approx(x + x * std::pow(q, -1.5)).epsilon(1e-10));
    CHECK(b.d2(x) == doctest::Approx(1 + std::pow(q, -1.5) - 3 * x * x * std::pow(q, -2.5)).epsilon(1e-9));
  }
  const SpectralData h = decompose(MatrixPotentialSpec::scalar("x^2/2 + 0.1*cos(x)"), make_grid(-4, 4, 64));
  const BranchFunction s = BranchFunction::from_spectral(h, 0);
  CHECK(s.d2(0.3) == doctest::Approx(1 - 0.1 * std::cos(0.3)));
}
