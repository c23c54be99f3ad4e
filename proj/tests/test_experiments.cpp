#include <cmath>

#include "doctest.h"

#include "adiabatic/experiments.hpp"

using namespace adiabatic;

namespace {

MatrixPotentialSpec rotating() {
  return MatrixPotentialSpec::from_strings(
      2, {"x^2/2", "x^2/2"},
      {"jb(x)^(-1)*cos(x)", "jb(x)^(-1)*sin(x)", "-(jb(x)^(-1)*cos(x))"});
}

cplx gaussian(double y) { return std::pow(M_PI, -0.25) * std::exp(-y * y / 2); }

PacketSpec packet(std::size_t branch, double x0, double xi0) {
  PacketSpec p;
  p.branch = branch;
  p.x0 = x0;
  p.xi0 = xi0;
  p.profile = gaussian;
  return p;
}

RunSettings settings(double eps, double T, double lambda = 0.0) {
  RunSettings s;
  s.epsilon = eps;
  s.T = T;
  s.lambda_coupling = lambda;
  s.observe_every = 0.05;
  s.y_grid = make_grid(-20, 20, 1024);
  return s;
}

}  // namespace

TEST_CASE("order fit") {
  const OrderFit f = fit_order({0.04, 0.02, 0.01}, {0.1, 0.05, 0.025});
  REQUIRE(f.defined);
  CHECK(f.order == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.residual_rms < 1e-14);
  CHECK_FALSE(fit_order({0.04, 0.02, 0.01}, {0.0, 0.0, 0.0}).defined);
  CHECK(strictly_decreasing({3, 2, 1}));
  CHECK_FALSE(strictly_decreasing({3, 3, 1}));
  CHECK_FALSE(strictly_decreasing({1.0, std::nan("")}));
}

TEST_CASE("ansatz at t = 0 reproduces the initial data") {
  const double eps = 0.05;
  const SpectralData d(rotating(), make_grid(-2.5, 2.5, 2048));
  const RunSettings s = settings(eps, 0.2, 1.0);
  const AnsatzBundle b = build_ansatz(d, packet(0, 0.5, 0.3), s);
  const VectorField a0 = assemble_ansatz(b, 0.0, d.grid());
  const FieldState psi0 = build_initial_data(gaussian, 0.5, 0.3, static_frame(d, 0), d.grid(), eps, 1.0);
  VectorField diff = a0;
  diff.values -= psi0.field.values;
  CHECK(l2_norm(diff) <= 1e-6);
  const ErrorNorms e = error_report(FieldState{a0, 1.0}, a0, nullptr, 1);
  CHECK(e.w.value == 0.0);
  for (const auto& st : b.envelope.states) {
    const double phi = l2_norm(d.grid(), ansatz_scalar(b, st.time, d.grid()));
    CHECK(phi == doctest::Approx(l2_norm(st.y_grid, st.values)).epsilon(1e-6));
  }
}

TEST_CASE("peak amplitude scales like eps^(-1/4)") {
  const SpectralData d(rotating(), make_grid(-2.5, 2.5, 4096));
  const AnsatzBundle b1 = build_ansatz(d, packet(0, 0.5, 0.0), settings(0.04, 0.2));
  const AnsatzBundle b2 = build_ansatz(d, packet(0, 0.5, 0.0), settings(0.01, 0.2));
  const double r = ansatz_scalar(b2, 0.2, d.grid()).abs().maxCoeff() /
                   ansatz_scalar(b1, 0.2, d.grid()).abs().maxCoeff();
  CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(0.1));
}

TEST_CASE("Taylor remainder") {
  const SpectralData harmonic(MatrixPotentialSpec::scalar("x^2/2"), make_grid(-3, 3, 2048));
  const AnsatzBundle h = build_ansatz(harmonic, packet(0, 0.5, 0.5), settings(0.02, 0.5, 1.0));
  CHECK(taylor_residual(h, 0.5) <= 1e-10);

  std::vector<double> eps{0.02, 0.01, 0.005, 0.0025}, res;
  const SpectralData d(rotating(), make_grid(-2.5, 2.5, 8192));
  for (double e : eps) {
    const AnsatzBundle b = build_ansatz(d, packet(0, 0.5, 0.0), settings(e, 0.2));
    res.push_back(taylor_residual(b, 0.2));
  }
  const OrderFit f = fit_order(eps, res);
  CHECK(f.order == doctest::Approx(1.5).epsilon(0.1));
}

TEST_CASE("Gamma and the interaction window") {
  const SpectralData harmonic(MatrixPotentialSpec::scalar("x^2/2"), make_grid(-3, 3, 512));
  CHECK(gamma_constant(harmonic, 0, 0, 0.3).gamma == doctest::Approx(0.3));
  const SpectralData diag(
      MatrixPotentialSpec::from_strings(2, {"x^2/2", "x^2/2 + 0.7"}, {"0", "0", "0"}),
      make_grid(-3, 3, 512));
  const GammaReport g = gamma_constant(diag, 1, 0, 0.2);
  CHECK(std::abs(g.gamma - 0.5) <= 1e-12);
  CHECK(g.edge_ok);
  CHECK(gamma_constant(diag, 1, 0, 0.7).vanishes);

  const BranchFunction free = BranchFunction::from_expr(parse_expr("0"));
  const auto a = integrate_trajectory(free, -1, 1, 2, 1e-3);
  const auto b = integrate_trajectory(free, 1, -1, 2, 1e-3);
  // |x1 - x2| = |2 - 2t| <= 0.2 on [0.9, 1.1]
  CHECK(interaction_window(a, b, 0.2) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("single pipeline on the rotating family") {
  const double eps = 1.0 / 32;
  const SpectralData coarse(rotating(), make_grid(-2, 2, 512));
  RunSettings s = settings(eps, 0.3, 1.0);
  const PacketSpec p = packet(0, 0.5, 0.5);
  const SpatialGrid lab = lab_grid_for(coarse, {p}, -2, 2, s);
  const SpectralData d(rotating(), lab);
  const SingleRun r = run_single(d, p, s);
  CHECK(r.sigma1_w.front() <= 1e-6);
  CHECK(r.sup_sigma1_w > 0.0);
  CHECK(r.sup_sigma1_w < 0.2);
  CHECK(r.max_mass_drift <= 1e-10);
  CHECK(r.leakage > 0.0);
  CHECK(r.leakage < 0.05);
  REQUIRE(r.correction_sigma1.count({1, 0}) == 1);
  CHECK(r.correction_sigma1.at({1, 0}) > 0.0);
  for (const auto& pops : r.populations) {
    CHECK(pops[0] + pops[1] == doctest::Approx(r.mass.front()).epsilon(1e-10));
  }

  PacketSpec zero = p;
  zero.profile = [](double) { return cplx(0.0); };
  const SingleRun z = run_single(d, zero, s);
  for (double v : z.sigma1_w) CHECK(v == 0.0);
}
