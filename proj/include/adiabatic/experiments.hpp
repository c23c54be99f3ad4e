#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adiabatic/classical.hpp"
#include "adiabatic/corrections.hpp"
#include "adiabatic/eigenframe.hpp"
#include "adiabatic/envelope.hpp"
#include "adiabatic/fullsolver.hpp"

namespace adiabatic {

struct PacketSpec {
  std::size_t branch = 0;
  double x0 = 0.0;
  double xi0 = 0.0;
  Profile profile;
  std::optional<InitialPerturbation> perturbation;
};

struct RunSettings {
  double epsilon = 0.1;
  double lambda_coupling = 0.0;
  double beta = 0.75;
  double T = 1.0;
  double dt = 0.0;  // 0: default_time_step
  double observe_every = 0.01;
  bool corrections = true;
  SpatialGrid y_grid = default_envelope_grid();

  double step() const { return dt > 0.0 ? dt : default_time_step(epsilon, T); }
  /// Coefficient of |u|^2 u in the profile equation: Lambda eps^{2 beta - 3/2}.
  double envelope_coupling() const;
};

/// eps^{-1/4} u((x - xc)/sqrt(eps)) e^{i(S + xi (x - xc))/eps} on `lab`, u a
/// cubic spline of `u` over `y_grid`. Lab points whose y falls outside the
/// y-domain are zero when the envelope has decayed there (edge < 1e-10);
/// otherwise RuntimeAbort.
ComplexArray coherent_from_envelope(const ComplexArray& u, const SpatialGrid& y_grid, double xc,
                                    double xi, double action, double epsilon,
                                    const SpatialGrid& lab);

inline constexpr double kEnvelopeEdgeTolerance = 1e-10;

/// Classical path, profile equation and transported frame of one packet,
/// advanced together with step dt (trajectory step dt/2).
class PacketTracker {
 public:
  PacketTracker(const SpectralData& data, const PacketSpec& packet, const RunSettings& settings);

  void advance();

  std::size_t steps() const { return steps_; }
  double time() const { return static_cast<double>(steps_) * dt_; }
  double dt() const { return dt_; }
  const ClassicalTrajectory& trajectory() const { return *traj_; }
  const BranchFunction& branch_function() const { return fn_; }
  const EnvelopeStepper& envelope() const { return *envelope_; }
  const FrameTransporter& transporter() const { return *frame_; }
  const FrameSlice& slice() const { return slice_; }
  const FrameSlice& previous_slice() const { return prev_slice_; }
  const ComplexArray& previous_envelope() const { return prev_u_; }

  /// phi^eps at the current time (scalar, lab grid).
  ComplexArray phi() const;
  /// phi^eps at the midpoint of the last step, u averaged over its ends.
  ComplexArray phi_midpoint() const;
  /// phi^eps chi^1 at the current time.
  VectorField ansatz() const;
  VectorField ansatz(const ComplexArray& phi) const;
  /// (d_t + xi d_x) chi^1 at the midpoint of the last step.
  Eigen::MatrixXcd transport_derivative_midpoint() const;

 private:
  const SpectralData* data_;
  PacketSpec packet_;
  double epsilon_;
  double dt_;
  SpatialGrid lab_;
  SpatialGrid y_grid_;
  BranchFunction fn_;
  std::unique_ptr<ClassicalTrajectory> traj_;
  std::unique_ptr<EnvelopeStepper> envelope_;
  std::unique_ptr<FrameTransporter> frame_;
  FrameSlice slice_;
  FrameSlice prev_slice_;
  ComplexArray prev_u_;
  std::size_t steps_ = 0;
};

/// Stored pieces of the ansatz at observer times.
struct AnsatzBundle {
  const SpectralData* data = nullptr;
  std::size_t branch = 0;
  double epsilon = 0.0;
  ClassicalTrajectory traj;
  BranchFunction branch_fn;
  EnvelopeSeries envelope;
  EigenFrame frame;
};

AnsatzBundle build_ansatz(const SpectralData& data, const PacketSpec& packet,
                          const RunSettings& settings);

/// phi^eps chi^1 at a stored time t.
VectorField assemble_ansatz(const AnsatzBundle& bundle, double t, const SpatialGrid& lab);
ComplexArray ansatz_scalar(const AnsatzBundle& bundle, double t, const SpatialGrid& lab);

/// || (lambda(x) - T_eps(t, x)) phi^eps ||_{L2} with T_eps the second-order
/// Taylor polynomial of lambda at x(t).
double taylor_residual(const AnsatzBundle& bundle, double t);
/// Same with lambda sampled on `lab` and the Taylor data taken from `branch`.
double taylor_residual(const ComplexArray& phi, const SpatialGrid& lab, const RealArray& lambda,
                       const BranchFunction& branch, double xc);

struct ErrorNorms {
  SigmaNormReport w;
  SigmaNormReport theta;
};

/// w = psi - phi chi^1, theta = w + eps g.
ErrorNorms error_report(const FieldState& psi, const VectorField& ansatz,
                        const VectorField* correction, int p);

struct OrderFit {
  bool defined = false;
  double order = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::vector<double> residuals;
};

/// Least squares of log(error) on log(eps). Undefined for fewer than two
/// positive finite points.
OrderFit fit_order(const std::vector<double>& epsilons, const std::vector<double>& errors);

bool strictly_decreasing(const std::vector<double>& values);

struct SingleRun {
  double epsilon = 0.0;
  std::size_t points = 0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> sigma1_w;
  std::vector<double> sigma1_theta;
  std::vector<double> mass;
  std::vector<std::vector<double>> populations;
  std::vector<double> taylor;
  double sup_sigma1_w = 0.0;
  double terminal_sigma1_w = 0.0;
  double sup_sigma1_theta = 0.0;
  double leakage = 0.0;
  double max_mass_drift = 0.0;
  double envelope_mass_drift = 0.0;
  double frame_gram_drift = 0.0;
  double frame_eigen_residual = 0.0;
  std::map<std::pair<std::size_t, int>, double> correction_sigma1;  // at T
  std::map<std::pair<std::size_t, int>, double> correction_sigma0;
  FieldState final_state{{SpatialGrid(0.0, 1.0, 8), Eigen::MatrixXcd(), 1.0, 0.0}, 0.0};
};

/// Lab grid for one eps: domain [x_min, x_max], smallest power of two that
/// satisfies the adequacy rule for the packet's trajectory (or `points` if
/// nonzero, which is then checked).
SpatialGrid lab_grid_for(const SpectralData& coarse, const std::vector<PacketSpec>& packets,
                         double x_min, double x_max, const RunSettings& settings,
                         std::size_t points = 0);

/// Full NLS run from polarized coherent data alongside the ansatz and the
/// correction terms; observers every `observe_every` time units.
SingleRun run_single(const SpectralData& data, const PacketSpec& packet,
                     const RunSettings& settings);

struct ConvergenceReport {
  std::vector<double> epsilons;
  std::vector<double> sup_sigma1_w;
  std::vector<double> terminal_sigma1_w;
  std::vector<double> leakage;
  std::vector<std::string> failures;  // empty string on success
  std::vector<int> failure_codes;     // 0 on success, else an exit code
  OrderFit fit;
  OrderFit leakage_fit;
  bool monotone = false;
  bool leakage_monotone = false;
  std::vector<SingleRun> runs;
};

struct StudyInput {
  MatrixPotentialSpec potential;
  PacketSpec packet;
  RunSettings base;
  std::vector<double> epsilons;
  double x_min = -2.0;
  double x_max = 2.0;
  std::size_t points = 0;
  std::size_t jobs = 1;
};

ConvergenceReport convergence_study(const StudyInput& input);

struct GammaReport {
  double gamma = 0.0;
  double argmin = 0.0;
  bool edge_ok = true;  // objective non-decreasing toward both edges
  bool vanishes = false;
};

/// inf_x |lambda_1(x) - lambda_2(x) - (E_1 - E_2)| over the grid.
GammaReport gamma_constant(const SpectralData& data, std::size_t branch1, std::size_t branch2,
                           double energy_difference);

/// Measure of {t in [0, T] : |x1(t) - x2(t)| <= delta} with linear
/// interpolation between common samples.
double interaction_window(const ClassicalTrajectory& a, const ClassicalTrajectory& b,
                          double delta);

struct SuperpositionRun {
  double epsilon = 0.0;
  std::size_t points = 0;
  std::vector<double> times;
  std::vector<double> sigma1_w;
  double sup_sigma1_w = 0.0;
  double terminal_sigma1_w = 0.0;
  double window = 0.0;
  double interaction_integral = 0.0;
  double max_mass_drift = 0.0;
  std::string failure;
  int failure_code = 0;
};

struct SuperpositionReport {
  GammaReport gamma;
  double gamma_exponent = 0.3;
  std::vector<SuperpositionRun> runs;
  OrderFit error_fit;
  OrderFit window_fit;
  bool error_decreasing = false;
  std::vector<std::string> warnings;
};

struct SuperpositionInput {
  MatrixPotentialSpec potential;
  PacketSpec first;
  PacketSpec second;
  RunSettings base;
  std::vector<double> epsilons;
  double gamma_exponent = 0.3;
  double x_min = -3.0;
  double x_max = 3.0;
  std::size_t points = 0;
  std::size_t jobs = 1;
};

SuperpositionRun run_superposition(const SpectralData& data, const PacketSpec& first,
                                   const PacketSpec& second, const RunSettings& settings,
                                   double gamma_exponent);

SuperpositionReport superposition_experiment(const SuperpositionInput& input);

}  // namespace adiabatic
