#include "adiabatic/envelope.hpp"

#include <cmath>
#include <sstream>

namespace adiabatic {

SpatialGrid default_envelope_grid() { return make_grid(-40.0, 40.0, 2048); }

EnvelopeStepper::EnvelopeStepper(const SpatialGrid& y_grid, ComplexArray initial,
                                 double lambda_coupling, std::function<double(double)> curvature)
    : state_{y_grid, std::move(initial), 0.0, lambda_coupling, 0.0},
      curvature_(std::move(curvature)) {
  if (static_cast<std::size_t>(state_.values.size()) != y_grid.n()) {
    throw ConfigError("initial profile length does not match the y grid");
  }
  state_.mass0 = l2_norm(y_grid, state_.values);
  y2_ = y_grid.points().square();
  max_boundary_ = boundary_magnitude(state_.values);
}

EnvelopeStepper::EnvelopeStepper(const SpatialGrid& y_grid, ComplexArray initial,
                                 double lambda_coupling, const ClassicalTrajectory& traj,
                                 const BranchFunction& branch)
    : EnvelopeStepper(y_grid, std::move(initial), lambda_coupling,
                      [&traj, branch](double t) {
                        const long i = traj.sample_index(t);
                        if (i >= 0) return traj.curvature[static_cast<std::size_t>(i)];
                        return branch.d2(traj.position_at(t));
                      }) {}

void EnvelopeStepper::phase(double dt, double kappa) {
  const double lam = state_.lambda_coupling;
  for (Eigen::Index i = 0; i < state_.values.size(); ++i) {
    const double v = 0.5 * kappa * y2_[i] + lam * std::norm(state_.values[i]);
    state_.values[i] *= std::polar(1.0, -dt * v);
  }
}

void EnvelopeStepper::step(double dt) {
  const double kappa = curvature_(state_.time + 0.5 * dt);
  phase(0.5 * dt, kappa);
  const std::size_t n = state_.y_grid.n();
  fft_forward(state_.values.data(), n);
  const auto& k = state_.y_grid.frequencies();
  for (Eigen::Index i = 0; i < state_.values.size(); ++i) {
    state_.values[i] *= std::polar(1.0, -0.5 * dt * k[i] * k[i]);
  }
  fft_backward(state_.values.data(), n);
  phase(0.5 * dt, kappa);
  state_.time += dt;

  const double drift = std::abs(mass() - state_.mass0) / std::max(state_.mass0, 1e-300);
  max_drift_ = std::max(max_drift_, drift);
  max_boundary_ = std::max(max_boundary_, boundary_magnitude(state_.values));
  if (!(drift <= kMassTolerance)) {
    std::ostringstream msg;
    msg << "envelope mass drift " << drift << " at t = " << state_.time
        << " exceeds tolerance; refine the y grid or the time step";
    throw InvariantError(msg.str());
  }
}

double EnvelopeStepper::mass() const { return l2_norm(state_.y_grid, state_.values); }

EnvelopeSeries solve_envelope(const ComplexArray& a, const ClassicalTrajectory& traj,
                              const BranchFunction& branch, double lambda_coupling,
                              const SpatialGrid& y_grid, double dt, std::size_t store_every) {
  if (store_every == 0) throw ConfigError("store_every must be positive");
  const std::size_t n = steps_for(traj.final_time(), dt);
  EnvelopeStepper stepper(y_grid, a, lambda_coupling, traj, branch);
  EnvelopeSeries out;
  out.states.push_back(stepper.state());
  for (std::size_t s = 1; s <= n; ++s) {
    stepper.step(dt);
    if (s % store_every == 0 || s == n) out.states.push_back(stepper.state());
  }
  out.max_mass_drift = stepper.max_mass_drift();
  out.max_boundary = stepper.max_boundary();
  return out;
}

double envelope_moments(const EnvelopeState& state, int k, int p) {
  if (k < 0 || p < 0 || k + p > 4) throw ConfigError("moments need k, p >= 0 and k + p <= 4");
  ComplexArray f = p == 0 ? state.values : spectral_derivative(state.y_grid, state.values, p);
  const RealArray w = (1.0 + state.y_grid.points().square()).pow(0.5 * k);
  return l2_norm(state.y_grid, f * w);
}

}  // namespace adiabatic
