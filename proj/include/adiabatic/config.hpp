#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adiabatic/experiments.hpp"

namespace adiabatic {

/// Named envelope profile a(y).
///   gaussian: amplitude * pi^{-1/4} width^{-1/2} exp(-(y - center)^2 / (2 width^2)) e^{i slope y}
///   hermite:  amplitude * normalized Hermite function of `order`
///   random:   gaussian * (1 + sum_{k=1..terms} c_k y^k / k!), c_k uniform in
///             [-scale, scale] from `seed`
///   zero
struct ProfileSpec {
  std::string name = "gaussian";
  double amplitude = 1.0;
  double width = 1.0;
  double center = 0.0;
  double slope = 0.0;
  int order = 0;
  int terms = 3;
  double scale = 0.1;
  std::uint64_t seed = 0;
};

Profile make_profile(const ProfileSpec& spec);

struct PerturbationConfig {
  double kappa = 1.0;
  ProfileSpec profile;
  std::vector<double> direction;
};

struct PacketConfig {
  std::size_t branch = 0;
  double x0 = 0.0;
  double xi0 = 0.0;
  ProfileSpec profile;
  std::optional<PerturbationConfig> perturbation;
};

struct IdentityConfig {
  std::vector<double> points{-1.3, -0.4, 0.3, 1.1};
  std::vector<double> steps{1e-2, 5e-3, 2.5e-3};
  double scan_min = -20.0;
  double scan_max = 20.0;
  std::size_t scan_points = 81;
  std::vector<int> derivative_orders{0, 1, 2};
  std::optional<double> n0;  // default: fitted from the gap
};

struct DerivedGrid {
  double epsilon = 0.0;
  std::size_t points = 0;
  double dt = 0.0;
  double xi_max = 0.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string source_text;
  std::vector<std::string> potential_diagonal;
  std::vector<std::string> potential_symmetric;
  MatrixPotentialSpec potential;
  std::vector<PacketConfig> packets;
  std::vector<double> epsilons;
  double lambda_coupling = 0.0;
  double beta = 0.75;
  double T = 1.0;
  double dt = 0.0;  // 0: automatic
  double x_min = -2.0;
  double x_max = 2.0;
  std::size_t points = 0;  // 0: automatic per eps
  double y_min = -40.0;
  double y_max = 40.0;
  std::size_t y_points = 2048;
  double observe_every = 0.01;
  bool corrections = true;
  double gamma_exponent = 0.3;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::string output = "out";
  IdentityConfig identities;
  std::vector<DerivedGrid> derived;
};

/// Parses and validates; every schema violation is collected and reported in
/// a single ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Replaces the epsilon list and recomputes the derived grids.
void override_epsilons(ExperimentConfig& cfg, const std::vector<double>& epsilons);

/// Per-eps lab grid sizes and steps (adequacy rule applied).
std::vector<DerivedGrid> derive_grids(const ExperimentConfig& cfg);

RunSettings run_settings(const ExperimentConfig& cfg, double epsilon);
PacketSpec packet_spec(const ExperimentConfig& cfg, std::size_t index);
StudyInput study_input(const ExperimentConfig& cfg);
SuperpositionInput superposition_input(const ExperimentConfig& cfg);

}  // namespace adiabatic
