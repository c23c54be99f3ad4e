#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <utility>

#include <Eigen/Core>

#include "adiabatic/types.hpp"

namespace adiabatic {

/// Uniform periodic grid on [x_min, x_max) with n points, n a power of two.
/// Copies share the point and wavenumber arrays.
class SpatialGrid {
 public:
  SpatialGrid(double x_min, double x_max, std::size_t n);

  double x_min() const { return data_->x_min; }
  double x_max() const { return data_->x_max; }
  std::size_t n() const { return data_->n; }
  double spacing() const { return data_->spacing; }
  double length() const { return data_->x_max - data_->x_min; }
  double x(std::size_t i) const { return data_->points[static_cast<Eigen::Index>(i)]; }
  const RealArray& points() const { return data_->points; }
  /// Discrete wavenumbers in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1 times 2*pi/L.
  const RealArray& frequencies() const { return data_->frequencies; }

  bool same_as(const SpatialGrid& other) const;

 private:
  struct Data {
    double x_min;
    double x_max;
    std::size_t n;
    double spacing;
    RealArray points;
    RealArray frequencies;
  };
  std::shared_ptr<const Data> data_;
};

SpatialGrid make_grid(double x_min, double x_max, std::size_t n);

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

struct ScalarField {
  SpatialGrid grid;
  ComplexArray values;
  double epsilon = 1.0;
  double time = 0.0;
};

/// C^N-valued field: values is n x N, one column per component.
struct VectorField {
  SpatialGrid grid;
  Eigen::MatrixXcd values;
  double epsilon = 1.0;
  double time = 0.0;

  std::size_t components() const { return static_cast<std::size_t>(values.cols()); }
};

// In-place transforms through a per-size cached FFTW plan. The backward
// transform is normalized so that backward(forward(f)) == f.
void fft_forward(cplx* data, std::size_t n);
void fft_backward(cplx* data, std::size_t n);

ComplexArray spectral_derivative(const SpatialGrid& grid, const ComplexArray& values, int order);
ScalarField spectral_derivative(const ScalarField& f, int order);
VectorField spectral_derivative(const VectorField& f, int order);

/// Trapezoidal L2 norm on the periodic grid.
double l2_norm(const SpatialGrid& grid, const ComplexArray& values);
double l2_norm(const ScalarField& f);
double l2_norm(const VectorField& f);
/// L2 norm computed from the discrete Fourier coefficients.
double l2_norm_fourier(const SpatialGrid& grid, const ComplexArray& values);

/// Components of sup_{a+b<=p} || |x|^a eps^b d^b f ||_{L2}; vector fields use
/// the pointwise Hermitian norm.
struct SigmaNormReport {
  int p = 0;
  std::map<std::pair<int, int>, double> components;
  double value = 0.0;

  double component(int alpha, int beta) const { return components.at({alpha, beta}); }
};

SigmaNormReport sigma_norm(const ScalarField& f, int p);
SigmaNormReport sigma_norm(const VectorField& f, int p);

/// Max modulus over the first and last `width` grid points.
double boundary_magnitude(const ComplexArray& values, std::size_t width = 4);
double boundary_magnitude(const Eigen::MatrixXcd& values, std::size_t width = 4);

}  // namespace adiabatic
