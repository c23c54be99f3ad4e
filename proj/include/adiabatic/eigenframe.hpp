#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "adiabatic/classical.hpp"
#include "adiabatic/potential.hpp"
#include "adiabatic/spline.hpp"

namespace adiabatic {

/// K_j(x) = -i [Pi_j, d_x Pi_j] with a central difference at step h.
Eigen::MatrixXcd k_matrix(const SpectralData& data, std::size_t j, double x, double h = 1e-4);

/// K_j tabulated on a fine x-grid and interpolated by cubic splines.
class KField {
 public:
  KField(const SpectralData& data, std::size_t j, double x_lo, double x_hi, double spacing = 2e-3,
         double h = 1e-4);
  /// Writes the N x N matrix at x into out (column-major).
  void eval(double x, cplx* out) const;
  Eigen::MatrixXcd operator()(double x) const;
  double lower() const { return spline_.lower(); }
  double upper() const { return spline_.upper(); }
  std::size_t levels() const { return n_; }

 private:
  std::size_t n_;
  ComplexSpline spline_;
};

/// Frame Y(t, .) on the comoving grid at one time. Columns of `values` hold the
/// N x d block of each z-node flattened column-major.
struct FrameSlice {
  double time = 0.0;
  double x_center = 0.0;  // x_j(t)
  double xi = 0.0;
  std::size_t levels = 1;
  int multiplicity = 1;
  std::shared_ptr<const ComplexSpline> spline;

  double z_lower() const { return spline->lower(); }
  double z_upper() const { return spline->upper(); }
};

struct EigenFrame {
  std::size_t branch = 0;
  int multiplicity = 1;
  std::size_t levels = 1;
  SpatialGrid z_grid{0.0, 1.0, 8};
  double slice_dt = 0.0;
  std::vector<FrameSlice> slices;
  double max_gram_drift = 0.0;
  double max_eigen_residual = 0.0;
  std::size_t reorthonormalizations = 0;
};

/// Per-node RK4 integration of i dY/dt = xi(t) K_j(z + x(t)) Y. Stage times
/// must fall on the trajectory lattice, so the step is an even multiple of the
/// trajectory step. `traj` must outlive the transporter.
class FrameTransporter {
 public:
  FrameTransporter(const SpectralData& data, std::size_t j, const ClassicalTrajectory& traj,
                   SpatialGrid z_grid, double dt);

  void step();
  double time() const { return time_; }
  FrameSlice slice() const;
  const Eigen::MatrixXcd& values() const { return y_; }
  const SpatialGrid& z_grid() const { return z_grid_; }

  double max_gram_drift() const { return max_gram_drift_; }
  double max_eigen_residual() const { return max_eigen_residual_; }
  std::size_t reorthonormalizations() const { return reorth_; }
  /// Gram deviation and eigen-residual of the current state (no repair).
  double gram_deviation() const;
  double eigen_residual() const;

  static constexpr std::size_t kReorthCadence = 100;
  static constexpr double kResidualAbort = 1e-6;

 private:
  void rhs(double xc, double xi, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& out) const;
  void reorthonormalize();

  const SpectralData* data_;
  std::size_t j_;
  const ClassicalTrajectory* traj_;
  SpatialGrid z_grid_;
  double dt_;
  std::size_t sub_;  // trajectory samples per step
  std::size_t nl_;
  int d_;
  std::unique_ptr<KField> k_;
  Eigen::MatrixXcd y_;  // (N*d) x nz
  double time_ = 0.0;
  std::size_t steps_ = 0;
  double max_gram_drift_ = 0.0;
  double max_eigen_residual_ = 0.0;
  std::size_t reorth_ = 0;
};

/// Comoving grid covering lab - x(t) for every t of the trajectory with spacing
/// at most `target_spacing`.
SpatialGrid comoving_grid(const SpatialGrid& lab, const ClassicalTrajectory& traj,
                          double target_spacing = 0.01);

EigenFrame transport_frame(const SpectralData& data, std::size_t j,
                           const ClassicalTrajectory& traj, const SpatialGrid& z_grid, double dt,
                           std::size_t store_every = 1);

/// chi_j(t, x) = Y(t, x - x_j(t)) on the lab grid: n x (N*d), column c*N + i
/// is component i of column c. Renormalized per point.
Eigen::MatrixXcd frame_at(const FrameSlice& slice, const SpatialGrid& lab);
/// d_x chi_j from the spline derivative (no renormalization).
Eigen::MatrixXcd frame_derivative_at(const FrameSlice& slice, const SpatialGrid& lab);
Eigen::VectorXcd frame_at(const FrameSlice& slice, double x, Eigen::Index column = 0);

/// (d_t chi + xi d_x chi) at the midpoint of two slices: centered difference in
/// t, averaged spline derivative in x.
Eigen::MatrixXcd transport_derivative(const FrameSlice& before, const FrameSlice& after,
                                      double xi_mid, const SpatialGrid& lab,
                                      Eigen::Index column = 0);

/// r(x) = -i (D(x), target(x)) with (a, b) = sum a_i conj(b_i); D from
/// transport_derivative, target an n x N field (one eigenvector per point).
ComplexArray coupling_coefficients(const Eigen::MatrixXcd& transport_deriv,
                                   const Eigen::MatrixXcd& target);
/// Convenience: r_{j,l} around stored slice m of `frame` against the static
/// frame column `l` of branch j.
ComplexArray coupling_coefficients(const EigenFrame& frame, const SpectralData& lab_data,
                                   std::size_t j, Eigen::Index l, std::size_t m);

/// Static frame column l of branch j on the lab grid as an n x N field.
Eigen::MatrixXcd static_frame(const SpectralData& data, std::size_t j, Eigen::Index l = 0);

/// (chi^m, d_t chi^l + xi d_x chi^l) at (slice index s, x) with centered
/// stencils: neighbouring slices in t and +-dx in x.
cplx parallel_residual(const EigenFrame& frame, Eigen::Index m, Eigen::Index l, std::size_t s,
                       double x, double dx = 1e-3);

}  // namespace adiabatic
