#include "adiabatic/eigenframe.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/QR>

namespace adiabatic {

namespace {

void check_gap(const LocalSpectrum& s, double x) {
  for (std::size_t a = 0; a < s.values.size(); ++a) {
    for (std::size_t b = a + 1; b < s.values.size(); ++b) {
      if (std::abs(s.values[a] - s.values[b]) < 1e-10) {
        std::ostringstream msg;
        msg << "degenerate gap at x = " << x;
        throw RuntimeAbort(msg.str());
      }
    }
  }
}

}  // namespace

Eigen::MatrixXcd k_matrix(const SpectralData& data, std::size_t j, double x, double h) {
  const LocalSpectrum c = data.local(x);
  check_gap(c, x);
  const LocalSpectrum p = align_spectrum(data.spec(), c, x + h);
  const LocalSpectrum m = align_spectrum(data.spec(), c, x - h);
  const Eigen::MatrixXd pi = c.projector(j);
  const Eigen::MatrixXd d = (p.projector(j) - m.projector(j)) / (2.0 * h);
  const Eigen::MatrixXd comm = pi * d - d * pi;
  return -kI * comm.cast<cplx>();
}

KField::KField(const SpectralData& data, std::size_t j, double x_lo, double x_hi, double spacing,
               double h)
    : n_(data.levels()) {
  if (!(x_hi > x_lo)) throw ConfigError("K table needs a non-empty interval");
  const auto m = std::max<Eigen::Index>(
      4, static_cast<Eigen::Index>(std::ceil((x_hi - x_lo) / spacing)) + 1);
  const double step = (x_hi - x_lo) / static_cast<double>(m - 1);
  const auto nn = static_cast<Eigen::Index>(n_ * n_);
  Eigen::MatrixXcd table(m, nn);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::MatrixXcd k = k_matrix(data, j, x_lo + static_cast<double>(i) * step, h);
    table.row(i) = k.reshaped().transpose();
  }
  spline_ = ComplexSpline(x_lo, step, std::move(table));
}

void KField::eval(double x, cplx* out) const {
  if (!spline_.contains(x)) {
    std::ostringstream msg;
    msg << "K table queried outside its range at x = " << x;
    throw RuntimeAbort(msg.str());
  }
  spline_.eval(x, out);
}

Eigen::MatrixXcd KField::operator()(double x) const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXcd k(n, n);
  eval(x, k.data());
  return k;
}

SpatialGrid comoving_grid(const SpatialGrid& lab, const ClassicalTrajectory& traj,
                          double target_spacing) {
  const auto [lo_it, hi_it] = std::minmax_element(traj.x.begin(), traj.x.end());
  const double margin = 4.0 * target_spacing;
  const double lo = lab.x_min() - *hi_it - margin;
  const double hi = lab.x_max() - *lo_it + margin;
  const auto cells = static_cast<std::size_t>(std::ceil((hi - lo) / target_spacing));
  return make_grid(lo, hi, std::max<std::size_t>(8, next_power_of_two(cells)));
}

FrameTransporter::FrameTransporter(const SpectralData& data, std::size_t j,
                                   const ClassicalTrajectory& traj, SpatialGrid z_grid,
                                   double dt)
    : data_(&data),
      j_(j),
      traj_(&traj),
      z_grid_(std::move(z_grid)),
      dt_(dt),
      nl_(data.levels()),
      d_(data.multiplicity(j)) {
  sub_ = steps_for(dt, traj.dt);
  if (sub_ < 2 || sub_ % 2 != 0) {
    throw ConfigError("frame step must be an even multiple of the trajectory step");
  }
  const auto [lo_it, hi_it] = std::minmax_element(traj.x.begin(), traj.x.end());
  const double zlo = z_grid_.x_min();
  const double zhi = z_grid_.x(z_grid_.n() - 1);
  const double pad = 4e-3;
  k_ = std::make_unique<KField>(data, j, zlo + *lo_it - pad, zhi + *hi_it + pad);

  const auto nz = static_cast<Eigen::Index>(z_grid_.n());
  const auto rows = static_cast<Eigen::Index>(nl_) * d_;
  y_.resize(rows, nz);
  for (Eigen::Index i = 0; i < nz; ++i) {
    const LocalSpectrum s = data.local(z_grid_.x(static_cast<std::size_t>(i)) + traj.x[0]);
    y_.col(i) = s.frames[j].reshaped().cast<cplx>();
  }
}

void FrameTransporter::rhs(double xc, double xi, const Eigen::MatrixXcd& y,
                           Eigen::MatrixXcd& out) const {
  const auto n = static_cast<Eigen::Index>(nl_);
  out.resize(y.rows(), y.cols());
  Eigen::MatrixXcd k(n, n);
  for (Eigen::Index i = 0; i < y.cols(); ++i) {
    k_->eval(z_grid_.x(static_cast<std::size_t>(i)) + xc, k.data());
    const auto block = y.col(i).reshaped(n, d_);
    out.col(i) = ((-kI * xi) * (k * block)).reshaped();
  }
}

void FrameTransporter::step() {
  const std::size_t base = steps_ * sub_;
  if (base + sub_ >= traj_->size()) throw RuntimeAbort("frame transport ran past the trajectory");
  const std::size_t mid = base + sub_ / 2;
  const std::size_t end = base + sub_;
  Eigen::MatrixXcd k1, k2, k3, k4;
  rhs(traj_->x[base], traj_->xi[base], y_, k1);
  rhs(traj_->x[mid], traj_->xi[mid], y_ + 0.5 * dt_ * k1, k2);
  rhs(traj_->x[mid], traj_->xi[mid], y_ + 0.5 * dt_ * k2, k3);
  rhs(traj_->x[end], traj_->xi[end], y_ + dt_ * k3, k4);
  y_ += dt_ / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  ++steps_;
  time_ = static_cast<double>(steps_) * dt_;
  if (steps_ % kReorthCadence == 0) reorthonormalize();
}

double FrameTransporter::gram_deviation() const {
  const auto n = static_cast<Eigen::Index>(nl_);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d_, d_);
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y_.cols(); ++i) {
    const Eigen::MatrixXcd b = y_.col(i).reshaped(n, d_);
    dev = std::max(dev, (b.adjoint() * b - id).norm());
  }
  return dev;
}

double FrameTransporter::eigen_residual() const {
  const auto n = static_cast<Eigen::Index>(nl_);
  const double xc = traj_->x[steps_ * sub_];
  double res = 0.0;
  for (Eigen::Index i = 0; i < y_.cols(); ++i) {
    const Eigen::MatrixXcd v = data_->spec().evaluate(z_grid_.x(static_cast<std::size_t>(i)) + xc).cast<cplx>();
    const Eigen::MatrixXcd b = y_.col(i).reshaped(n, d_);
    const cplx lam = (b.adjoint() * v * b).trace() / static_cast<double>(d_);
    res = std::max(res, (v * b - lam * b).norm());
  }
  return res;
}

void FrameTransporter::reorthonormalize() {
  max_gram_drift_ = std::max(max_gram_drift_, gram_deviation());
  const auto n = static_cast<Eigen::Index>(nl_);
  for (Eigen::Index i = 0; i < y_.cols(); ++i) {
    Eigen::MatrixXcd b = y_.col(i).reshaped(n, d_);
    for (int c = 0; c < d_; ++c) {
      for (int m = 0; m < c; ++m) b.col(c) -= b.col(m).dot(b.col(c)) * b.col(m);
      b.col(c).normalize();
    }
    y_.col(i) = b.reshaped();
  }
  ++reorth_;
  const double res = eigen_residual();
  max_eigen_residual_ = std::max(max_eigen_residual_, res);
  if (!(res <= kResidualAbort)) {
    std::ostringstream msg;
    msg << "transported frame left the eigenspace (residual " << res << " at t = " << time_
        << "); the gap is too small or the step too large";
    throw InvariantError(msg.str());
  }
}

FrameSlice FrameTransporter::slice() const {
  FrameSlice s;
  const std::size_t idx = steps_ * sub_;
  s.time = time_;
  s.x_center = traj_->x[idx];
  s.xi = traj_->xi[idx];
  s.levels = nl_;
  s.multiplicity = d_;
  s.spline = std::make_shared<const ComplexSpline>(z_grid_.x_min(), z_grid_.spacing(),
                                                   Eigen::MatrixXcd(y_.transpose()));
  return s;
}

EigenFrame transport_frame(const SpectralData& data, std::size_t j,
                           const ClassicalTrajectory& traj, const SpatialGrid& z_grid, double dt,
                           std::size_t store_every) {
  if (store_every == 0) throw ConfigError("store_every must be positive");
  FrameTransporter tr(data, j, traj, z_grid, dt);
  const std::size_t n = steps_for(traj.final_time(), dt);
  EigenFrame f;
  f.branch = j;
  f.multiplicity = data.multiplicity(j);
  f.levels = data.levels();
  f.z_grid = z_grid;
  f.slice_dt = dt * static_cast<double>(store_every);
  f.slices.push_back(tr.slice());
  for (std::size_t s = 1; s <= n; ++s) {
    tr.step();
    if (s % store_every == 0) f.slices.push_back(tr.slice());
  }
  f.max_gram_drift = std::max(tr.max_gram_drift(), tr.gram_deviation());
  f.max_eigen_residual = std::max(tr.max_eigen_residual(), tr.eigen_residual());
  f.reorthonormalizations = tr.reorthonormalizations();
  if (!(f.max_eigen_residual <= FrameTransporter::kResidualAbort)) {
    throw InvariantError("transported frame left the eigenspace at the final time");
  }
  return f;
}

namespace {

double z_of(const FrameSlice& s, double x) {
  const double z = x - s.x_center;
  if (!s.spline->contains(z)) {
    std::ostringstream msg;
    msg << "frame queried at x = " << x << " outside its comoving domain at t = " << s.time;
    throw RuntimeAbort(msg.str());
  }
  return z;
}

}  // namespace

Eigen::VectorXcd frame_at(const FrameSlice& slice, double x, Eigen::Index column) {
  const auto n = static_cast<Eigen::Index>(slice.levels);
  Eigen::VectorXcd all(n * slice.multiplicity);
  slice.spline->eval(z_of(slice, x), all.data());
  Eigen::VectorXcd v = all.segment(column * n, n);
  return v / v.norm();
}

Eigen::MatrixXcd frame_at(const FrameSlice& slice, const SpatialGrid& lab) {
  const auto n = static_cast<Eigen::Index>(slice.levels);
  const auto ch = n * slice.multiplicity;
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(lab.n()), ch);
  Eigen::VectorXcd row(ch);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    slice.spline->eval(z_of(slice, lab.x(static_cast<std::size_t>(i))), row.data());
    for (int c = 0; c < slice.multiplicity; ++c) row.segment(c * n, n).normalize();
    out.row(i) = row.transpose();
  }
  return out;
}

Eigen::MatrixXcd frame_derivative_at(const FrameSlice& slice, const SpatialGrid& lab) {
  const auto ch = static_cast<Eigen::Index>(slice.levels) * slice.multiplicity;
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(lab.n()), ch);
  Eigen::VectorXcd row(ch);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    slice.spline->eval_derivative(z_of(slice, lab.x(static_cast<std::size_t>(i))), row.data());
    out.row(i) = row.transpose();
  }
  return out;
}

Eigen::MatrixXcd transport_derivative(const FrameSlice& before, const FrameSlice& after,
                                      double xi_mid, const SpatialGrid& lab, Eigen::Index column) {
  const auto n = static_cast<Eigen::Index>(before.levels);
  const double dt = after.time - before.time;
  if (!(dt > 0.0)) throw ConfigError("slices must be ordered in time");
  const Eigen::MatrixXcd a = frame_at(after, lab).middleCols(column * n, n);
  const Eigen::MatrixXcd b = frame_at(before, lab).middleCols(column * n, n);
  const Eigen::MatrixXcd da = frame_derivative_at(after, lab).middleCols(column * n, n);
  const Eigen::MatrixXcd db = frame_derivative_at(before, lab).middleCols(column * n, n);
  return (a - b) / dt + (0.5 * xi_mid) * (da + db);
}

ComplexArray coupling_coefficients(const Eigen::MatrixXcd& transport_deriv,
                                   const Eigen::MatrixXcd& target) {
  if (transport_deriv.rows() != target.rows() || transport_deriv.cols() != target.cols()) {
    throw ConfigError("frame misalignment: coupling fields differ in shape");
  }
  return -kI * (transport_deriv.array() * target.array().conjugate()).rowwise().sum();
}

Eigen::MatrixXcd static_frame(const SpectralData& data, std::size_t j, Eigen::Index l) {
  const auto n = static_cast<Eigen::Index>(data.grid().n());
  Eigen::MatrixXcd out(n, static_cast<Eigen::Index>(data.levels()));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = data.frame(j, static_cast<std::size_t>(i)).col(l).transpose().cast<cplx>();
  }
  return out;
}

ComplexArray coupling_coefficients(const EigenFrame& frame, const SpectralData& lab_data,
                                   std::size_t j, Eigen::Index l, std::size_t m) {
  if (m == 0 || m + 1 >= frame.slices.size()) {
    throw ConfigError("coupling needs an interior slice");
  }
  const auto& lab = lab_data.grid();
  const auto n = static_cast<Eigen::Index>(frame.levels);
  const FrameSlice& s = frame.slices[m];
  const Eigen::MatrixXcd a = frame_at(frame.slices[m + 1], lab).leftCols(n);
  const Eigen::MatrixXcd b = frame_at(frame.slices[m - 1], lab).leftCols(n);
  const Eigen::MatrixXcd dx = frame_derivative_at(s, lab).leftCols(n);
  const double dt = frame.slices[m + 1].time - frame.slices[m - 1].time;
  const Eigen::MatrixXcd d = (a - b) / dt + s.xi * dx;
  return coupling_coefficients(d, static_frame(lab_data, j, l));
}

cplx parallel_residual(const EigenFrame& frame, Eigen::Index m, Eigen::Index l, std::size_t s,
                       double x, double dx) {
  if (s == 0 || s + 1 >= frame.slices.size()) {
    throw ConfigError("parallel residual needs an interior slice");
  }
  const FrameSlice& c = frame.slices[s];
  const double dt = frame.slices[s + 1].time - frame.slices[s - 1].time;
  const Eigen::VectorXcd dtc =
      (frame_at(frame.slices[s + 1], x, l) - frame_at(frame.slices[s - 1], x, l)) / dt;
  const Eigen::VectorXcd dxc = (frame_at(c, x + dx, l) - frame_at(c, x - dx, l)) / (2.0 * dx);
  const Eigen::VectorXcd d = dtc + c.xi * dxc;
  // (chi^m, d) = sum chi^m_i conj(d_i)
  return d.dot(frame_at(c, x, m));
}

}  // namespace adiabatic
