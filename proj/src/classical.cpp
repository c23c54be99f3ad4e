#include "adiabatic/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace adiabatic {

std::size_t steps_for(double T, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (!(T >= 0.0)) throw ConfigError("final time must be non-negative");
  const double r = T / dt;
  const double n = std::round(r);
  if (std::abs(r - n) > 1e-9 * std::max(1.0, r)) {
    throw ConfigError("time step must divide the final time");
  }
  return static_cast<std::size_t>(n);
}

namespace {

constexpr double kBlowUp = 1e8;

struct Locate {
  std::size_t i;
  double s;  // in [0, 1]
};

Locate locate(const ClassicalTrajectory& tr, double t) {
  if (tr.size() < 2) return {0, 0.0};
  const double u = t / tr.dt;
  auto i = static_cast<long>(std::floor(u));
  i = std::clamp<long>(i, 0, static_cast<long>(tr.size()) - 2);
  return {static_cast<std::size_t>(i), u - static_cast<double>(i)};
}

double hermite(double y0, double y1, double d0, double d1, double h, double s) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 +
         (s3 - s2) * h * d1;
}

}  // namespace

double ClassicalTrajectory::position_at(double t) const {
  if (size() == 1) return x[0];
  const auto [i, s] = locate(*this, t);
  return hermite(x[i], x[i + 1], xi[i], xi[i + 1], dt, s);
}

double ClassicalTrajectory::momentum_at(double t) const {
  if (size() == 1) return xi[0];
  const auto [i, s] = locate(*this, t);
  return hermite(xi[i], xi[i + 1], force[i], force[i + 1], dt, s);
}

double ClassicalTrajectory::action_at(double t) const {
  if (size() == 1) return action[0];
  const auto [i, s] = locate(*this, t);
  const double l0 = 0.5 * xi[i] * xi[i] - potential[i];
  const double l1 = 0.5 * xi[i + 1] * xi[i + 1] - potential[i + 1];
  return hermite(action[i], action[i + 1], l0, l1, dt, s);
}

long ClassicalTrajectory::sample_index(double t) const {
  const double u = t / dt;
  const double r = std::round(u);
  if (std::abs(u - r) > 1e-9 || r < 0 || r >= static_cast<double>(size())) return -1;
  return static_cast<long>(r);
}

ClassicalTrajectory integrate_trajectory(const BranchFunction& branch, double x0, double xi0,
                                         double T, double dt, std::size_t branch_id) {
  const std::size_t n = steps_for(T, dt);
  ClassicalTrajectory tr;
  tr.branch = branch_id;
  tr.dt = dt;
  tr.times.reserve(n + 1);

  using State = std::array<double, 3>;  // x, xi, S
  auto rhs = [&](const State& y) -> State {
    return {y[1], -branch.d1(y[0]), 0.5 * y[1] * y[1] - branch.value(y[0])};
  };
  auto record = [&](std::size_t k, const State& y) {
    tr.times.push_back(static_cast<double>(k) * dt);
    tr.x.push_back(y[0]);
    tr.xi.push_back(y[1]);
    tr.action.push_back(y[2]);
    tr.potential.push_back(branch.value(y[0]));
    tr.force.push_back(-branch.d1(y[0]));
    tr.curvature.push_back(branch.d2(y[0]));
  };

  State y{x0, xi0, 0.0};
  record(0, y);
  tr.energy0 = 0.5 * xi0 * xi0 + tr.potential[0];
  for (std::size_t k = 1; k <= n; ++k) {
    const State k1 = rhs(y);
    State tmp;
    for (int c = 0; c < 3; ++c) tmp[c] = y[c] + 0.5 * dt * k1[c];
    const State k2 = rhs(tmp);
    for (int c = 0; c < 3; ++c) tmp[c] = y[c] + 0.5 * dt * k2[c];
    const State k3 = rhs(tmp);
    for (int c = 0; c < 3; ++c) tmp[c] = y[c] + dt * k3[c];
    const State k4 = rhs(tmp);
    for (int c = 0; c < 3; ++c) y[c] += dt / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
    if (!(std::abs(y[0]) <= kBlowUp) || !(std::abs(y[1]) <= kBlowUp)) {
      std::ostringstream msg;
      msg << "trajectory blow-up at t = " << static_cast<double>(k) * dt << ": x = " << y[0]
          << ", xi = " << y[1];
      throw RuntimeAbort(msg.str());
    }
    record(k, y);
  }
  return tr;
}

std::vector<double> action_of(const ClassicalTrajectory& traj) { return traj.action; }

double energy_of(const ClassicalTrajectory& traj, std::size_t index) {
  return 0.5 * traj.xi.at(index) * traj.xi[index] + traj.potential[index];
}

double max_energy_drift(const ClassicalTrajectory& traj) {
  double d = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    d = std::max(d, std::abs(energy_of(traj, i) - traj.energy0));
  }
  return d;
}

GrowthEnvelope growth_envelope(const ClassicalTrajectory& traj) {
  const std::size_t n = traj.size();
  std::vector<double> g(n);
  double st = 0, sg = 0, stt = 0, stg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = std::log(1.0 + std::abs(traj.x[i]) + std::abs(traj.xi[i]));
    st += traj.times[i];
    sg += g[i];
    stt += traj.times[i] * traj.times[i];
    stg += traj.times[i] * g[i];
  }
  const double dn = static_cast<double>(n);
  const double var = stt / dn - (st / dn) * (st / dn);
  double c = var > 0 ? (stg / dn - st / dn * sg / dn) / var : 0.0;
  c = std::max(c, 0.0);
  double a = -1e300;
  for (std::size_t i = 0; i < n; ++i) a = std::max(a, g[i] - c * traj.times[i]);
  return {std::exp(a), c};
}

}  // namespace adiabatic
