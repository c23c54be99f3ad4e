#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "adiabatic/types.hpp"

namespace adiabatic {

/// Cubic spline through uniformly spaced samples with not-a-knot end
/// conditions. Each column of `values` is an independent channel.
template <typename T>
class UniformCubicSpline {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Row = Eigen::Matrix<T, 1, Eigen::Dynamic>;

  UniformCubicSpline() = default;

  UniformCubicSpline(double x0, double h, Matrix values)
      : x0_(x0), h_(h), y_(std::move(values)) {
    if (y_.rows() < 4) throw ConfigError("spline needs at least 4 samples");
    if (!(h_ > 0.0)) throw ConfigError("spline spacing must be positive");
    solve_second_derivatives();
  }

  double lower() const { return x0_; }
  double upper() const { return x0_ + h_ * static_cast<double>(y_.rows() - 1); }
  bool contains(double x) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(upper()));
    return x >= lower() - tol && x <= upper() + tol;
  }
  Eigen::Index channels() const { return y_.cols(); }
  Eigen::Index samples() const { return y_.rows(); }

  /// Value of all channels at x (caller guarantees contains(x)).
  void eval(double x, T* out) const {
    const auto [i, t] = locate(x);
    const double u = 1.0 - t;
    const double cm = h_ * h_ / 6.0 * (u * u * u - u);
    const double cp = h_ * h_ / 6.0 * (t * t * t - t);
    for (Eigen::Index c = 0; c < y_.cols(); ++c) {
      out[c] = u * y_(i, c) + t * y_(i + 1, c) + cm * m_(i, c) + cp * m_(i + 1, c);
    }
  }

  void eval_derivative(double x, T* out) const {
    const auto [i, t] = locate(x);
    const double u = 1.0 - t;
    const double cm = -h_ / 6.0 * (3.0 * u * u - 1.0);
    const double cp = h_ / 6.0 * (3.0 * t * t - 1.0);
    for (Eigen::Index c = 0; c < y_.cols(); ++c) {
      out[c] = (y_(i + 1, c) - y_(i, c)) / h_ + cm * m_(i, c) + cp * m_(i + 1, c);
    }
  }

  T operator()(double x, Eigen::Index channel = 0) const {
    Row r(y_.cols());
    eval(x, r.data());
    return r[channel];
  }

  T derivative(double x, Eigen::Index channel = 0) const {
    Row r(y_.cols());
    eval_derivative(x, r.data());
    return r[channel];
  }

 private:
  std::pair<Eigen::Index, double> locate(double x) const {
    const double s = (x - x0_) / h_;
    auto i = static_cast<Eigen::Index>(std::floor(s));
    i = std::clamp<Eigen::Index>(i, 0, y_.rows() - 2);
    return {i, s - static_cast<double>(i)};
  }

  // Interior rows M_{i-1} + 4 M_i + M_{i+1} = 6 (second difference) / h^2.
  // Not-a-knot on a uniform grid means M_0 = 2 M_1 - M_2, which turns the
  // first interior row into 6 M_1 = rhs_1 (and symmetrically at the end).
  void solve_second_derivatives() {
    const Eigen::Index n = y_.rows();
    const Eigen::Index cols = y_.cols();
    m_ = Matrix::Zero(n, cols);
    const Eigen::Index k = n - 2;  // unknowns M_1..M_{n-2}
    Eigen::VectorXd diag(k), upper(k), lower(k);
    Matrix rhs(k, cols);
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Index i = r + 1;
      diag[r] = 4.0;
      upper[r] = 1.0;
      lower[r] = 1.0;
      rhs.row(r) = 6.0 * (y_.row(i - 1) - 2.0 * y_.row(i) + y_.row(i + 1)) / (h_ * h_);
    }
    if (k == 1) {
      m_.row(1) = rhs.row(0) / 6.0;
    } else {
      diag[0] = 6.0;
      upper[0] = 0.0;
      diag[k - 1] = 6.0;
      lower[k - 1] = 0.0;
      // Thomas algorithm.
      for (Eigen::Index r = 1; r < k; ++r) {
        const double w = lower[r] / diag[r - 1];
        diag[r] -= w * upper[r - 1];
        rhs.row(r) -= w * rhs.row(r - 1);
      }
      m_.row(k) = rhs.row(k - 1) / diag[k - 1];
      for (Eigen::Index r = k - 2; r >= 0; --r) {
        m_.row(r + 1) = (rhs.row(r) - upper[r] * m_.row(r + 2)) / diag[r];
      }
    }
    m_.row(0) = 2.0 * m_.row(1) - m_.row(2);
    m_.row(n - 1) = 2.0 * m_.row(n - 2) - m_.row(n - 3);
  }

  double x0_ = 0.0;
  double h_ = 1.0;
  Matrix y_;
  Matrix m_;
};

using RealSpline = UniformCubicSpline<double>;
using ComplexSpline = UniformCubicSpline<cplx>;

}  // namespace adiabatic
