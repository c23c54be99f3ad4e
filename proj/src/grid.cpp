#include "adiabatic/grid.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>
#include <unordered_map>
#include <vector>

#include <fftw3.h>

namespace adiabatic {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

SpatialGrid::SpatialGrid(double x_min, double x_max, std::size_t n) {
  if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw ConfigError("degenerate interval: x_min must be < x_max");
  }
  if (!is_power_of_two(n)) throw ConfigError("n must be a power of two");
  if (n < 8) throw ConfigError("n must be at least 8");

  Data d;
  d.x_min = x_min;
  d.x_max = x_max;
  d.n = n;
  d.spacing = (x_max - x_min) / static_cast<double>(n);
  const auto ni = static_cast<Eigen::Index>(n);
  d.points.resize(ni);
  d.frequencies.resize(ni);
  const double dk = 2.0 * std::numbers::pi / (x_max - x_min);
  for (Eigen::Index i = 0; i < ni; ++i) {
    d.points[i] = x_min + static_cast<double>(i) * d.spacing;
    const Eigen::Index m = i < ni / 2 ? i : i - ni;
    d.frequencies[i] = dk * static_cast<double>(m);
  }
  data_ = std::make_shared<const Data>(std::move(d));
}

bool SpatialGrid::same_as(const SpatialGrid& other) const {
  return data_ == other.data_ ||
         (n() == other.n() && x_min() == other.x_min() && x_max() == other.x_max());
}

SpatialGrid make_grid(double x_min, double x_max, std::size_t n) {
  return SpatialGrid(x_min, x_max, n);
}

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// Planning is not thread-safe in FFTW; execution on new arrays is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    const int ni = static_cast<int>(n);
    // FFTW_ESTIMATE keeps the algorithm choice, and hence roundoff, reproducible.
    PlanPair p;
    p.forward = fftw_plan_dft_1d(ni, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.backward = fftw_plan_dft_1d(ni, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(n, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

 private:
  std::mutex mutex_;
  std::unordered_map<std::size_t, PlanPair> plans_;
};

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void fft_forward(cplx* data, std::size_t n) {
  const auto plans = PlanCache::instance().get(n);
  fftw_execute_dft(plans.forward, as_fftw(data), as_fftw(data));
}

void fft_backward(cplx* data, std::size_t n) {
  const auto plans = PlanCache::instance().get(n);
  fftw_execute_dft(plans.backward, as_fftw(data), as_fftw(data));
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) data[i] *= scale;
}

ComplexArray spectral_derivative(const SpatialGrid& grid, const ComplexArray& values, int order) {
  if (order < 1) throw ConfigError("derivative order must be >= 1");
  const std::size_t n = grid.n();
  if (static_cast<std::size_t>(values.size()) != n) {
    throw ConfigError("field length does not match grid");
  }
  ComplexArray work = values;
  fft_forward(work.data(), n);
  const auto& k = grid.frequencies();
  const auto half = static_cast<Eigen::Index>(n / 2);
  static constexpr cplx kPowersOfI[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
  const cplx factor_unit = kPowersOfI[order % 4];
  for (Eigen::Index i = 0; i < work.size(); ++i) {
    // The Nyquist mode has no well-defined odd derivative.
    if (i == half && (order % 2 == 1)) {
      work[i] = 0.0;
      continue;
    }
    double kp = 1.0;
    for (int o = 0; o < order; ++o) kp *= k[i];
    work[i] *= factor_unit * kp;
  }
  fft_backward(work.data(), n);
  return work;
}

ScalarField spectral_derivative(const ScalarField& f, int order) {
  ScalarField out = f;
  out.values = spectral_derivative(f.grid, f.values, order);
  return out;
}

VectorField spectral_derivative(const VectorField& f, int order) {
  VectorField out = f;
  for (Eigen::Index c = 0; c < f.values.cols(); ++c) {
    ComplexArray col = f.values.col(c).array();
    out.values.col(c) = spectral_derivative(f.grid, col, order).matrix();
  }
  return out;
}

double l2_norm(const SpatialGrid& grid, const ComplexArray& values) {
  return std::sqrt(grid.spacing() * values.abs2().sum());
}

double l2_norm(const ScalarField& f) { return l2_norm(f.grid, f.values); }

double l2_norm(const VectorField& f) {
  return std::sqrt(f.grid.spacing() * f.values.cwiseAbs2().sum());
}

double l2_norm_fourier(const SpatialGrid& grid, const ComplexArray& values) {
  ComplexArray work = values;
  fft_forward(work.data(), grid.n());
  return std::sqrt(grid.spacing() * work.abs2().sum() / static_cast<double>(grid.n()));
}

namespace {

void check_sigma_order(int p) {
  if (p < 0 || p > 2) throw ConfigError("sigma_norm supports p in {0, 1, 2}");
}

// cols are the components, each weighted then summed in square.
SigmaNormReport sigma_from_columns(const SpatialGrid& grid, const Eigen::MatrixXcd& values,
                                   double epsilon, int p) {
  check_sigma_order(p);
  SigmaNormReport report;
  report.p = p;
  const RealArray absx = grid.points().abs();
  std::vector<Eigen::MatrixXcd> derivs;  // derivs[b] = d^b f
  derivs.push_back(values);
  for (int b = 1; b <= p; ++b) {
    Eigen::MatrixXcd d(values.rows(), values.cols());
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      ComplexArray col = values.col(c).array();
      d.col(c) = spectral_derivative(grid, col, b).matrix();
    }
    derivs.push_back(std::move(d));
  }
  for (int a = 0; a <= p; ++a) {
    for (int b = 0; a + b <= p; ++b) {
      const RealArray weight = absx.pow(a) * std::pow(epsilon, b);
      double sum = 0.0;
      for (Eigen::Index c = 0; c < values.cols(); ++c) {
        sum += (derivs[static_cast<std::size_t>(b)].col(c).array().abs2() * weight.square()).sum();
      }
      const double comp = std::sqrt(grid.spacing() * sum);
      report.components[{a, b}] = comp;
      report.value = std::max(report.value, comp);
    }
  }
  return report;
}

}  // namespace

SigmaNormReport sigma_norm(const ScalarField& f, int p) {
  Eigen::MatrixXcd m = f.values.matrix();
  return sigma_from_columns(f.grid, m, f.epsilon, p);
}

SigmaNormReport sigma_norm(const VectorField& f, int p) {
  return sigma_from_columns(f.grid, f.values, f.epsilon, p);
}

double boundary_magnitude(const ComplexArray& values, std::size_t width) {
  const auto n = values.size();
  const auto w = std::min<Eigen::Index>(static_cast<Eigen::Index>(width), n);
  return std::max(values.head(w).abs().maxCoeff(), values.tail(w).abs().maxCoeff());
}

double boundary_magnitude(const Eigen::MatrixXcd& values, std::size_t width) {
  const auto n = values.rows();
  const auto w = std::min<Eigen::Index>(static_cast<Eigen::Index>(width), n);
  const Eigen::ArrayXd mag = values.rowwise().norm().array();
  return std::max(mag.head(w).maxCoeff(), mag.tail(w).maxCoeff());
}

}  // namespace adiabatic
