#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "adiabatic/classical.hpp"
#include "adiabatic/grid.hpp"

namespace adiabatic {

struct EnvelopeState {
  SpatialGrid y_grid;
  ComplexArray values;
  double time = 0.0;
  double lambda_coupling = 0.0;
  double mass0 = 0.0;
};

/// Strang stepper for i u_t + u_yy/2 = lambda''(x(t)) y^2 u/2 + Lambda |u|^2 u.
/// The potential-plus-nonlinear substep is an exact pointwise phase.
class EnvelopeStepper {
 public:
  /// `curvature(t)` returns lambda''(x(t)).
  EnvelopeStepper(const SpatialGrid& y_grid, ComplexArray initial, double lambda_coupling,
                  std::function<double(double)> curvature);
  /// Curvature taken from the trajectory (stored samples at step midpoints
  /// when they fall on its lattice, Hermite-interpolated position otherwise).
  /// `traj` must outlive the stepper.
  EnvelopeStepper(const SpatialGrid& y_grid, ComplexArray initial, double lambda_coupling,
                  const ClassicalTrajectory& traj, const BranchFunction& branch);

  void step(double dt);
  const EnvelopeState& state() const { return state_; }
  double mass() const;
  double max_mass_drift() const { return max_drift_; }
  double max_boundary() const { return max_boundary_; }

  /// Relative mass drift above this aborts with InvariantError.
  static constexpr double kMassTolerance = 1e-8;

 private:
  void phase(double dt, double kappa);

  EnvelopeState state_;
  std::function<double(double)> curvature_;
  RealArray y2_;
  ComplexArray work_;
  double max_drift_ = 0.0;
  double max_boundary_ = 0.0;
};

struct EnvelopeSeries {
  std::vector<EnvelopeState> states;  // every `store_every` steps, plus the last
  double max_mass_drift = 0.0;
  double max_boundary = 0.0;
};

EnvelopeSeries solve_envelope(const ComplexArray& a, const ClassicalTrajectory& traj,
                              const BranchFunction& branch, double lambda_coupling,
                              const SpatialGrid& y_grid, double dt, std::size_t store_every = 1);

/// || <y>^k d_y^p u ||_{L2}, k + p <= 4.
double envelope_moments(const EnvelopeState& state, int k, int p);

/// Default y-domain.
SpatialGrid default_envelope_grid();

}  // namespace adiabatic
