#include "adiabatic/fullsolver.hpp"

#include <cmath>
#include <sstream>

#include "adiabatic/classical.hpp"

namespace adiabatic {

ComplexArray coherent_state(const Profile& a, double x0, double xi0, const SpatialGrid& grid,
                            double epsilon) {
  const double amp = std::pow(epsilon, -0.25);
  const double s = std::sqrt(epsilon);
  ComplexArray out(static_cast<Eigen::Index>(grid.n()));
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double d = grid.x(i) - x0;
    out[static_cast<Eigen::Index>(i)] = amp * std::polar(1.0, xi0 * d / epsilon) * a(d / s);
  }
  return out;
}

FieldState build_initial_data(const Profile& a, double x0, double xi0,
                              const Eigen::MatrixXcd& chi, const SpatialGrid& grid, double epsilon,
                              double lambda_coupling,
                              const std::optional<InitialPerturbation>& r0) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  const auto n = static_cast<Eigen::Index>(grid.n());
  if (chi.rows() != n) throw ConfigError("eigenvector field does not match the grid");
  const ComplexArray c = coherent_state(a, x0, xi0, grid, epsilon);
  FieldState st{{grid, chi.array().colwise() * c, epsilon, 0.0}, lambda_coupling};
  if (r0) {
    if (!(r0->kappa > 0.25)) throw ConfigError("kappa must exceed 1/4");
    if (r0->direction.size() != chi.cols()) {
      throw ConfigError("perturbation direction has the wrong dimension");
    }
    const Eigen::VectorXcd dir = r0->direction.normalized();
    const ComplexArray p = coherent_state(r0->profile, x0, xi0, grid, epsilon) *
                           std::pow(epsilon, r0->kappa);
    st.field.values += p.matrix() * dir.transpose();
  }
  return st;
}

NlsSolver::NlsSolver(const SpectralData& data, double epsilon, double lambda_coupling, double dt,
                     double beta)
    : grid_(data.grid()),
      n_levels_(data.levels()),
      epsilon_(epsilon),
      dt_(dt),
      rate_(lambda_coupling * std::pow(epsilon, 2.0 * beta - 1.0)) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(dt != 0.0)) throw ConfigError("time step must be nonzero");
  const std::size_t n = grid_.n();
  const std::size_t nn = n_levels_ * n_levels_;
  const auto nl = static_cast<Eigen::Index>(n_levels_);
  expv_.resize(static_cast<Eigen::Index>(n * nn));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(nl, nl);
    for (std::size_t j = 0; j < data.branches(); ++j) {
      e += std::polar(1.0, -data.eigenvalue(j, i) * dt / (2.0 * epsilon)) *
           data.projector(j, i).cast<cplx>();
    }
    for (Eigen::Index r = 0; r < nl; ++r) {
      for (Eigen::Index c = 0; c < nl; ++c) {
        expv_[static_cast<Eigen::Index>(i * nn) + r * nl + c] = e(r, c);
      }
    }
  }
  const RealArray& k = grid_.frequencies();
  kinetic_.resize(k.size());
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    kinetic_[i] = std::polar(1.0, -epsilon * k[i] * k[i] * dt / 2.0);
  }
}

void NlsSolver::potential_half(Eigen::MatrixXcd& psi) const {
  const Eigen::Index n = psi.rows();
  const auto nl = static_cast<Eigen::Index>(n_levels_);
  const Eigen::Index nn = nl * nl;
  cplx* data = psi.data();
  cplx tmp[16];
  std::vector<cplx> big;
  cplx* buf = tmp;
  if (nl > 16) {
    big.resize(static_cast<std::size_t>(nl));
    buf = big.data();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double dens = 0.0;
    for (Eigen::Index c = 0; c < nl; ++c) dens += std::norm(data[i + c * n]);
    const cplx nl_phase = std::polar(1.0, -0.5 * dt_ * rate_ * dens);
    const cplx* e = &expv_[i * nn];
    for (Eigen::Index r = 0; r < nl; ++r) {
      cplx acc = 0.0;
      for (Eigen::Index c = 0; c < nl; ++c) acc += e[r * nl + c] * data[i + c * n];
      buf[r] = acc * nl_phase;
    }
    for (Eigen::Index r = 0; r < nl; ++r) data[i + r * n] = buf[r];
  }
}

void NlsSolver::step(FieldState& state) const {
  auto& psi = state.field.values;
  if (!state.field.grid.same_as(grid_)) throw ConfigError("field grid differs from the potential grid");
  const double m0 = l2_norm(state.field);
  potential_half(psi);
  const std::size_t n = grid_.n();
  for (Eigen::Index c = 0; c < psi.cols(); ++c) {
    cplx* col = psi.col(c).data();
    fft_forward(col, n);
    for (Eigen::Index i = 0; i < kinetic_.size(); ++i) col[i] *= kinetic_[i];
    fft_backward(col, n);
  }
  potential_half(psi);
  state.field.time += dt_;
  const double m1 = l2_norm(state.field);
  const double drift = m0 > 0 ? std::abs(m1 - m0) / m0 : std::abs(m1);
  if (!(drift <= kStepMassTolerance)) {
    std::ostringstream msg;
    msg << "mass drift " << drift << " in one step at t = " << state.field.time;
    throw InvariantError(msg.str());
  }
}

FieldState solve_nls(FieldState state, const SpectralData& data, double T, double dt,
                     const Observer& observer, std::size_t cadence, double beta) {
  if (!(T > 0.0)) throw ConfigError("final time must be positive");
  if (cadence == 0) throw ConfigError("observer cadence must be positive");
  const std::size_t n = steps_for(T, dt);
  const NlsSolver solver(data, state.epsilon(), state.lambda_coupling, dt, beta);
  if (observer) observer(state, 0);
  for (std::size_t s = 1; s <= n; ++s) {
    solver.step(state);
    if (observer && (s % cadence == 0 || s == n)) observer(state, s);
  }
  return state;
}

std::vector<double> mode_populations(const FieldState& state, const SpectralData& data) {
  const auto& psi = state.field.values;
  const std::size_t n = data.grid().n();
  const double h = data.grid().spacing();
  std::vector<double> out(data.branches(), 0.0);
  for (std::size_t j = 0; j < data.branches(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::MatrixXcd f = data.frame(j, i).cast<cplx>();
      const Eigen::VectorXcd v = psi.row(static_cast<Eigen::Index>(i)).transpose();
      acc += (f.adjoint() * v).squaredNorm();
    }
    out[j] = h * acc;
  }
  return out;
}

double mass(const FieldState& state) {
  const double m = l2_norm(state.field);
  return m * m;
}

double default_time_step(double epsilon, double T) {
  const double dt0 = std::min(1e-3, epsilon / 4.0);
  const double steps = std::ceil(T / dt0 - 1e-9);
  return T / std::max(1.0, steps);
}

std::size_t required_points(double x_min, double x_max, double epsilon, double xi_max) {
  const double target = epsilon / (8.0 * (std::abs(xi_max) + 1.0));
  const auto cells = static_cast<std::size_t>(std::ceil((x_max - x_min) / target));
  return std::max<std::size_t>(8, next_power_of_two(cells));
}

void check_grid_adequacy(const SpatialGrid& grid, double epsilon, double xi_max) {
  const double target = epsilon / (8.0 * (std::abs(xi_max) + 1.0));
  if (grid.spacing() > target * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "grid spacing " << grid.spacing() << " exceeds eps/(8(|xi|max+1)) = " << target
        << "; need at least " << required_points(grid.x_min(), grid.x_max(), epsilon, xi_max)
        << " points";
    throw ConfigError(msg.str());
  }
}

}  // namespace adiabatic
