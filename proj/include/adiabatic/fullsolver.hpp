#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "adiabatic/grid.hpp"
#include "adiabatic/potential.hpp"

namespace adiabatic {

using Profile = std::function<cplx(double)>;

struct FieldState {
  VectorField field;
  double lambda_coupling = 0.0;

  double time() const { return field.time; }
  double epsilon() const { return field.epsilon; }
};

/// Extra eps^kappa term in the initial data: a coherent-state copy of
/// `profile` along the constant unit vector `direction`.
struct InitialPerturbation {
  double kappa = 1.0;
  Profile profile;
  Eigen::VectorXcd direction;
};

/// eps^{-1/4} e^{i xi0 (x - x0)/eps} a((x - x0)/sqrt(eps)) chi(x) (+ perturbation).
/// chi is n x N, one unit vector per grid point.
FieldState build_initial_data(const Profile& a, double x0, double xi0,
                              const Eigen::MatrixXcd& chi, const SpatialGrid& grid, double epsilon,
                              double lambda_coupling,
                              const std::optional<InitialPerturbation>& r0 = std::nullopt);

/// Coherent-state sample eps^{-1/4} e^{i xi0 (x - x0)/eps} a((x - x0)/sqrt(eps)).
ComplexArray coherent_state(const Profile& a, double x0, double xi0, const SpatialGrid& grid,
                            double epsilon);

/// Strang stepper for i eps psi_t + eps^2/2 psi'' = V psi + Lambda eps^{2 beta} |psi|^2 psi.
/// The potential-plus-nonlinear substep is exact per point through the
/// precomputed exp(-i V dt / (2 eps)).
class NlsSolver {
 public:
  NlsSolver(const SpectralData& data, double epsilon, double lambda_coupling, double dt,
            double beta = 0.75);

  void step(FieldState& state) const;
  double dt() const { return dt_; }
  double epsilon() const { return epsilon_; }
  double nonlinear_rate() const { return rate_; }

  static constexpr double kStepMassTolerance = 1e-9;

 private:
  void potential_half(Eigen::MatrixXcd& psi) const;

  SpatialGrid grid_;
  std::size_t n_levels_;
  double epsilon_;
  double dt_;
  double rate_;        // Lambda eps^{2 beta - 1}
  ComplexArray expv_;  // n * N * N, row-major per point
  ComplexArray kinetic_;
};

using Observer = std::function<void(const FieldState&, std::size_t step)>;

/// Runs T/dt steps, calling `observer` at step 0, every `cadence` steps and at T.
FieldState solve_nls(FieldState state, const SpectralData& data, double T, double dt,
                     const Observer& observer = nullptr, std::size_t cadence = 1,
                     double beta = 0.75);

/// ||Pi_j psi||^2 per branch.
std::vector<double> mode_populations(const FieldState& state, const SpectralData& data);

double mass(const FieldState& state);

/// Default step min(1e-3, eps/4), shrunk so that it divides T.
double default_time_step(double epsilon, double T);

/// Smallest power-of-two point count with spacing <= eps / (8 (|xi|_max + 1)).
std::size_t required_points(double x_min, double x_max, double epsilon, double xi_max);
void check_grid_adequacy(const SpatialGrid& grid, double epsilon, double xi_max);

}  // namespace adiabatic
