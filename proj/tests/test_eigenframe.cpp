#include <cmath>

#include "doctest.h"

#include "adiabatic/eigenframe.hpp"

using namespace adiabatic;

namespace {

MatrixPotentialSpec rotating() {
  return MatrixPotentialSpec::from_strings(
      2, {"x^2/2", "x^2/2"},
      {"jb(x)^(-1)*cos(x)", "jb(x)^(-1)*sin(x)", "-(jb(x)^(-1)*cos(x))"});
}

MatrixPotentialSpec constant_direction() {
  return MatrixPotentialSpec::from_strings(2, {"x^2/2", "x^2/2"},
                                           {"jb(x)^(-1)", "jb(x)^(-1)", "-(jb(x)^(-1))"});
}

struct Setup {
  SpectralData data;
  BranchFunction branch;
  ClassicalTrajectory traj;
  SpatialGrid z;
  EigenFrame frame;
};

Setup make_setup(const MatrixPotentialSpec& spec, std::size_t j, double T = 1.0) {
  const auto lab = make_grid(-2, 2, 256);
  SpectralData data = decompose(spec, lab);
  BranchFunction b = BranchFunction::from_spectral(data, j);
  ClassicalTrajectory tr = integrate_trajectory(b, 0.5, 0.3, T, 5e-4, j);
  SpatialGrid z = comoving_grid(lab, tr);
  EigenFrame f = transport_frame(data, j, tr, z, 1e-3, 10);
  return {std::move(data), std::move(b), std::move(tr), std::move(z), std::move(f)};
}

}  // namespace

TEST_CASE("K matrix") {
  const SpectralData r = decompose(rotating(), make_grid(-5, 5, 256));
  for (std::size_t j = 0; j < 2; ++j) {
    for (double x : {-2.0, 0.0, 0.7, 3.1}) {
      const Eigen::MatrixXcd k = k_matrix(r, j, x);
      CHECK(std::abs(k(0, 0)) < 1e-8);
      CHECK(std::abs(k(1, 1)) < 1e-8);
      CHECK(std::abs(k(0, 1) - cplx(0, -0.5)) < 1e-8);
      CHECK(std::abs(k(1, 0) - cplx(0, 0.5)) < 1e-8);
      CHECK((k - k.adjoint()).norm() <= 1e-12);
    }
  }
  const SpectralData c = decompose(constant_direction(), make_grid(-5, 5, 256));
  CHECK(k_matrix(c, 0, 0.4).norm() < 1e-10);

  const KField field(r, 1, -3, 3);
  CHECK((field(0.123) - k_matrix(r, 1, 0.123)).norm() < 1e-10);
}

TEST_CASE("rotating family transport equals the static eigenvector") {
  const Setup s = make_setup(rotating(), 1);
  CHECK(s.frame.slices.size() == 101);
  CHECK(s.frame.max_gram_drift <= 1e-8);
  CHECK(s.frame.max_eigen_residual <= 1e-6);
  double dev = 0;
  for (const auto& sl : s.frame.slices) {
    for (std::size_t i = 0; i < s.z.n(); i += 7) {
      const double z = s.z.x(i);
      const Eigen::Vector2d ref(std::cos((z + sl.x_center) / 2), std::sin((z + sl.x_center) / 2));
      Eigen::VectorXcd y(2);
      sl.spline->eval(z, y.data());
      dev = std::max(dev, std::min((y - ref.cast<cplx>()).norm(), (y + ref.cast<cplx>()).norm()));
    }
  }
  CHECK(dev <= 1e-7);

  const auto lab = s.data.grid();
  const Eigen::MatrixXcd chi = frame_at(s.frame.slices[50], lab);
  double lab_dev = 0, res = 0;
  for (std::size_t i = 0; i < lab.n(); ++i) {
    const double x = lab.x(i);
    const Eigen::Vector2cd ref(std::cos(x / 2), std::sin(x / 2));
    const Eigen::Vector2cd v = chi.row(static_cast<Eigen::Index>(i)).transpose();
    lab_dev = std::max(lab_dev, std::min((v - ref).norm(), (v + ref).norm()));
    const Eigen::MatrixXcd m = evaluate_potential(rotating(), x).cast<cplx>();
    res = std::max(res, (m * v - s.data.eigenvalue(1, i) * v).norm());
  }
  CHECK(lab_dev <= 1e-6);
  CHECK(res <= 1e-6);
}

TEST_CASE("couplings and parallel residual on the rotating family") {
  const Setup s = make_setup(rotating(), 0);
  for (std::size_t m : {10, 50, 90}) {
    const ComplexArray r = coupling_coefficients(s.frame, s.data, 1, 0, m);
    const double half_xi = std::abs(s.frame.slices[m].xi) / 2;
    CHECK((r.abs() - half_xi).abs().maxCoeff() <= 2e-3);
    CHECK(std::abs(parallel_residual(s.frame, 0, 0, m, 0.3)) <= 1e-6);
  }
  // Midpoint form used by the correction solver.
  const auto& a = s.frame.slices[40];
  const auto& b = s.frame.slices[41];
  const double xi_mid = s.traj.momentum_at(0.5 * (a.time + b.time));
  const Eigen::MatrixXcd d = transport_derivative(a, b, xi_mid, s.data.grid());
  const ComplexArray r = coupling_coefficients(d, static_frame(s.data, 1));
  CHECK((r.abs() - std::abs(xi_mid) / 2).abs().maxCoeff() <= 2e-3);
  const ComplexArray own = coupling_coefficients(d, frame_at(a, s.data.grid()));
  CHECK(own.abs().maxCoeff() <= 1e-6);
}

TEST_CASE("constant-direction potential: frozen frame and zero coupling") {
  const Setup s = make_setup(constant_direction(), 0);
  const auto& first = *s.frame.slices.front().spline;
  const auto& last = *s.frame.slices.back().spline;
  for (double z : {-1.0, 0.0, 1.5}) CHECK(std::abs(first(z, 0) - last(z, 0)) < 1e-12);
  const ComplexArray r = coupling_coefficients(s.frame, s.data, 1, 0, 50);
  CHECK(r.abs().maxCoeff() < 1e-10);
  CHECK(std::abs(parallel_residual(s.frame, 0, 0, 50, 0.1)) < 1e-10);
}

TEST_CASE("frame queries outside the comoving domain abort") {
  const Setup s = make_setup(rotating(), 0, 0.1);
  CHECK_THROWS_AS(frame_at(s.frame.slices[0], 50.0), RuntimeAbort);
  CHECK_THROWS_AS(FrameTransporter(s.data, 0, s.traj, s.z, 7.5e-4), ConfigError);
}
