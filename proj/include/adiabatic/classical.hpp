#pragma once

#include <cstddef>
#include <vector>

#include "adiabatic/potential.hpp"

namespace adiabatic {

/// Fixed-step samples of x' = xi, xi' = -lambda'(x) together with the action
/// S' = xi^2/2 - lambda(x).
struct ClassicalTrajectory {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> xi;
  std::vector<double> action;
  std::vector<double> curvature;  // lambda''(x(t))
  std::vector<double> force;      // -lambda'(x(t))
  std::vector<double> potential;  // lambda(x(t))
  std::size_t branch = 0;
  double energy0 = 0.0;
  double dt = 0.0;

  std::size_t size() const { return times.size(); }
  double final_time() const { return times.back(); }

  /// Cubic Hermite interpolants between samples (fourth-order accurate).
  double position_at(double t) const;
  double momentum_at(double t) const;
  double action_at(double t) const;
  /// Nearest sample index when t lies on the sample lattice, else -1.
  long sample_index(double t) const;
};

/// Classic RK4 with n = T/dt steps. dt must divide T.
ClassicalTrajectory integrate_trajectory(const BranchFunction& branch, double x0, double xi0,
                                         double T, double dt, std::size_t branch_id = 0);

std::vector<double> action_of(const ClassicalTrajectory& traj);
double energy_of(const ClassicalTrajectory& traj, std::size_t index);
double max_energy_drift(const ClassicalTrajectory& traj);

/// Smallest affine bound log(1 + |x| + |xi|) <= log A + C t over the samples,
/// with C from a least-squares fit.
struct GrowthEnvelope {
  double A = 0.0;
  double C = 0.0;
};
GrowthEnvelope growth_envelope(const ClassicalTrajectory& traj);

/// Number of steps n with n * dt == T, or ConfigError.
std::size_t steps_for(double T, double dt);

}  // namespace adiabatic
