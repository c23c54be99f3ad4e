#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "adiabatic/grid.hpp"

namespace adiabatic {

/// Strang propagator U(dt) for i eps g_t + eps^2/2 g'' - lambda(x) g = 0 on a
/// periodic grid, with the scalar branch lambda sampled on that grid.
class ScalarPropagator {
 public:
  ScalarPropagator(const SpatialGrid& grid, const RealArray& lambda, double epsilon, double dt);

  /// g <- U(dt) g.
  void step(ComplexArray& g) const;
  /// g <- U(dt/2) g (Strang with half the step).
  void half_step(ComplexArray& g) const;
  /// g <- U(dt) g + dt/(i eps) U(dt/2) source_mid.
  void driven_step(ComplexArray& g, const ComplexArray& source_mid) const;

  const SpatialGrid& grid() const { return grid_; }
  double epsilon() const { return epsilon_; }
  double dt() const { return dt_; }

 private:
  void apply(ComplexArray& g, const ComplexArray& phase, const ComplexArray& kinetic) const;

  SpatialGrid grid_;
  double epsilon_;
  double dt_;
  ComplexArray phase_half_;     // exp(-i lambda dt / (2 eps))
  ComplexArray phase_quarter_;  // exp(-i lambda dt / (4 eps))
  ComplexArray kinetic_full_;   // exp(-i eps k^2 dt / 2)
  ComplexArray kinetic_half_;   // exp(-i eps k^2 dt / 4)
};

/// One step of the correction equation; `source` sampled at the step midpoint.
ScalarField scalar_step(const ScalarField& field, const RealArray& lambda, double dt,
                        const ComplexArray* source = nullptr);

/// g_{j,l} with zero initial data driven by a midpoint source. Aborts when
/// ||g|| exceeds kNormGuard.
class CorrectionStepper {
 public:
  CorrectionStepper(const SpatialGrid& grid, const RealArray& lambda, double epsilon, double dt);

  void step(const ComplexArray& source_mid);
  const ComplexArray& values() const { return g_; }
  double time() const { return time_; }
  ScalarField field() const { return {prop_.grid(), g_, prop_.epsilon(), time_}; }

  static constexpr double kNormGuard = 1e6;

 private:
  ScalarPropagator prop_;
  ComplexArray g_;
  double time_ = 0.0;
};

struct CorrectionRun {
  std::vector<double> times;
  std::vector<double> sigma0;
  std::vector<double> sigma1;
  ScalarField final{SpatialGrid(0.0, 1.0, 8), ComplexArray(), 1.0, 0.0};
};

/// Integrates over [0, T]; `source(t_mid, out)` fills the midpoint source.
/// Sigma norms (p = 0, 1) are logged every `log_every` steps and at T.
CorrectionRun solve_correction(const SpatialGrid& grid, const RealArray& lambda,
                               const std::function<void(double, ComplexArray&)>& source,
                               double epsilon, double T, double dt, std::size_t log_every = 1);

/// Components g_{j,l} keyed by (branch, column) with their lab-frame vectors.
struct CorrectionState {
  std::map<std::pair<std::size_t, int>, ScalarField> components;
  VectorField assembled{SpatialGrid(0.0, 1.0, 8), Eigen::MatrixXcd(), 1.0, 0.0};
  double epsilon = 1.0;
};

/// g = sum g_{j,l} chi_j^l; frames[k] is the n x N field paired with components[k].
VectorField assemble_correction(const std::vector<ScalarField>& components,
                                const std::vector<Eigen::MatrixXcd>& frames);

/// || (1/(i eps)) int_0^t U_k(-s) U_j(s) f ds || by the midpoint rule with
/// step dt (t a multiple of dt), accumulated in O(t/dt) propagator steps.
double averaging_probe(const RealArray& lambda_j, const RealArray& lambda_k, const ScalarField& f,
                       double epsilon, double t, double dt);

}  // namespace adiabatic
