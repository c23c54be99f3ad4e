#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adiabatic/expr.hpp"
#include "adiabatic/grid.hpp"

namespace adiabatic {

struct GapDeclaration {
  double c0 = 0.0;
  double n0 = 0.0;
};

/// V(x) = D(x) + W(x): N diagonal entries and the N(N+1)/2 upper-triangular
/// entries (row-major) of the bounded symmetric part.
struct MatrixPotentialSpec {
  std::size_t n_levels = 1;
  std::vector<Expr> diag_entries;
  std::vector<Expr> sym_entries;
  /// Declared d_j per branch, ordered by ascending eigenvalue at the left
  /// edge of the decomposition grid. Empty means N simple branches.
  std::vector<int> multiplicities;
  std::optional<GapDeclaration> gap;

  static MatrixPotentialSpec from_strings(std::size_t n_levels,
                                          const std::vector<std::string>& diag,
                                          const std::vector<std::string>& sym);
  /// N = 1 convenience: V = expr.
  static MatrixPotentialSpec scalar(const std::string& expr);

  void validate() const;
  std::vector<int> branch_multiplicities() const;
  bool is_diagonal() const;
  /// Symbolic derivative of every entry, order in {0, 1, 2}.
  Eigen::MatrixXd evaluate(double x, int derivative_order = 0) const;
};

Eigen::MatrixXd evaluate_potential(const MatrixPotentialSpec& spec, double x);

/// Decomposition at a single point with branch-aligned frames.
struct LocalSpectrum {
  double x = 0.0;
  std::vector<double> values;             // lambda_j per branch
  std::vector<Eigen::MatrixXd> frames;    // N x d_j orthonormal columns per branch

  Eigen::MatrixXd projector(std::size_t j) const { return frames[j] * frames[j].transpose(); }
};

/// Ascending decomposition at x grouped by the declared multiplicities.
LocalSpectrum local_spectrum(const MatrixPotentialSpec& spec, double x);
/// Decomposition at x with branches and frame signs matched to `reference`.
LocalSpectrum align_spectrum(const MatrixPotentialSpec& spec, const LocalSpectrum& reference,
                             double x);

class SpectralData {
 public:
  SpectralData(MatrixPotentialSpec spec, SpatialGrid grid);

  const MatrixPotentialSpec& spec() const { return spec_; }
  const SpatialGrid& grid() const { return grid_; }
  std::size_t levels() const { return spec_.n_levels; }
  std::size_t branches() const { return mult_.size(); }
  int multiplicity(std::size_t j) const { return mult_[j]; }
  const std::vector<int>& multiplicities() const { return mult_; }

  const RealArray& eigenvalues(std::size_t j) const { return values_[j]; }
  double eigenvalue(std::size_t j, std::size_t i) const {
    return values_[j][static_cast<Eigen::Index>(i)];
  }
  /// N x d_j orthonormal frame of branch j at grid point i.
  Eigen::MatrixXd frame(std::size_t j, std::size_t i) const;
  Eigen::MatrixXd projector(std::size_t j, std::size_t i) const;
  LocalSpectrum at_grid_point(std::size_t i) const;

  /// Decomposition at an arbitrary x, branch-aligned with the grid sweep.
  /// Points outside the grid are reached by marching from the nearest edge.
  LocalSpectrum local(double x) const;

 private:
  MatrixPotentialSpec spec_;
  SpatialGrid grid_;
  std::vector<int> mult_;
  std::vector<RealArray> values_;
  std::vector<Eigen::MatrixXd> frames_;       // (N*d_j) x n, column-major N x d_j blocks
  std::vector<Eigen::MatrixXd> projectors_;   // (N*N) x n
};

/// Per-point dense decomposition followed by a sequential branch-tracking sweep.
SpectralData decompose(const MatrixPotentialSpec& spec, const SpatialGrid& grid);

struct GapReport {
  double min_gap = 0.0;
  double min_gap_x = 0.0;
  double fitted_c0 = 0.0;
  double fitted_n0 = 0.0;
  bool violated = false;
};

GapReport gap_report(const SpectralData& data, std::size_t j, std::size_t k);

/// gamma_{j,k} = 1 / (lambda_k - lambda_j) at grid point i.
double gamma(const SpectralData& data, std::size_t j, std::size_t k, std::size_t i);

/// Scalar evaluator of one eigenvalue branch with its first two derivatives.
struct BranchFunction {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;

  static BranchFunction from_expr(const Expr& e);
  /// Closed-form symbolic derivatives for diagonal potentials; otherwise
  /// Hellmann-Feynman and second-order perturbation formulas on the local
  /// decomposition (simple branches) or central differences (d_j > 1).
  static BranchFunction from_spectral(const SpectralData& data, std::size_t j);
};

/// Residual norms of the projector identities for each branch j:
///   [0] Pi (dPi) Pi
///   [1] dPi - (dPi) Pi - Pi (dPi)
///   [2] dPi - sum_k (Pi_k (dPi) Pi + Pi (dPi) Pi_k)
///   [3] max_k |(l_j - l_k)(dPi) Pi_k - Pi (dV - dl_j) Pi_k|
///   [4] max_k |(l_j - l_k) Pi_k (dPi) - Pi_k (dV - dl_j) Pi|
/// All x-derivatives are central differences at step h of aligned
/// decompositions; norms are spectral (largest singular value).
struct IdentityResiduals {
  double x = 0.0;
  double h = 0.0;
  std::vector<std::array<double, 5>> per_branch;
  std::array<double, 5> max{};
};

IdentityResiduals projector_identity_residuals(const MatrixPotentialSpec& spec, double x,
                                               double h);

struct GrowthScan {
  int beta = 0;
  double n0 = 0.0;
  std::vector<double> x;
  std::vector<double> gamma_ratio;       // |d^beta gamma| / <x>^{n0 + beta(1+n0)}
  std::vector<double> projector_ratio;   // |d^beta Pi_j| / <x>^{beta(1+n0)}
  double max_gamma_ratio = 0.0;
  double max_projector_ratio = 0.0;
  double argmax_gamma = 0.0;
  double argmax_projector = 0.0;
};

GrowthScan growth_scan(const SpectralData& data, std::size_t j, std::size_t k, int beta,
                       const std::vector<double>& x_samples, double n0, double h = 1e-3);

double matrix_norm(const Eigen::MatrixXd& m);

}  // namespace adiabatic
