#include "adiabatic/corrections.hpp"

#include <cmath>
#include <sstream>

#include "adiabatic/classical.hpp"

namespace adiabatic {

namespace {

ComplexArray phases(const RealArray& values, double factor) {
  ComplexArray out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) out[i] = std::polar(1.0, -factor * values[i]);
  return out;
}

}  // namespace

ScalarPropagator::ScalarPropagator(const SpatialGrid& grid, const RealArray& lambda,
                                   double epsilon, double dt)
    : grid_(grid), epsilon_(epsilon), dt_(dt) {
  if (static_cast<std::size_t>(lambda.size()) != grid.n()) {
    throw ConfigError("branch samples do not match the grid");
  }
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  phase_half_ = phases(lambda, dt / (2.0 * epsilon));
  phase_quarter_ = phases(lambda, dt / (4.0 * epsilon));
  const RealArray k2 = grid.frequencies().square();
  kinetic_full_ = phases(k2, epsilon * dt / 2.0);
  kinetic_half_ = phases(k2, epsilon * dt / 4.0);
}

void ScalarPropagator::apply(ComplexArray& g, const ComplexArray& phase,
                             const ComplexArray& kinetic) const {
  g *= phase;
  fft_forward(g.data(), grid_.n());
  g *= kinetic;
  fft_backward(g.data(), grid_.n());
  g *= phase;
}

void ScalarPropagator::step(ComplexArray& g) const { apply(g, phase_half_, kinetic_full_); }

void ScalarPropagator::half_step(ComplexArray& g) const {
  apply(g, phase_quarter_, kinetic_half_);
}

void ScalarPropagator::driven_step(ComplexArray& g, const ComplexArray& source_mid) const {
  step(g);
  ComplexArray s = source_mid;
  half_step(s);
  g += (dt_ / (kI * epsilon_)) * s;
}

ScalarField scalar_step(const ScalarField& field, const RealArray& lambda, double dt,
                        const ComplexArray* source) {
  const ScalarPropagator p(field.grid, lambda, field.epsilon, dt);
  ScalarField out = field;
  if (source) {
    p.driven_step(out.values, *source);
  } else {
    p.step(out.values);
  }
  out.time += dt;
  return out;
}

CorrectionStepper::CorrectionStepper(const SpatialGrid& grid, const RealArray& lambda,
                                     double epsilon, double dt)
    : prop_(grid, lambda, epsilon, dt),
      g_(ComplexArray::Zero(static_cast<Eigen::Index>(grid.n()))) {}

void CorrectionStepper::step(const ComplexArray& source_mid) {
  prop_.driven_step(g_, source_mid);
  time_ += prop_.dt();
  const double norm = l2_norm(prop_.grid(), g_);
  if (!(norm <= kNormGuard)) {
    std::ostringstream msg;
    msg << "correction norm " << norm << " at t = " << time_
        << " exceeds the guard (resonance or under-resolution)";
    throw RuntimeAbort(msg.str());
  }
}

CorrectionRun solve_correction(const SpatialGrid& grid, const RealArray& lambda,
                               const std::function<void(double, ComplexArray&)>& source,
                               double epsilon, double T, double dt, std::size_t log_every) {
  if (log_every == 0) throw ConfigError("log_every must be positive");
  const std::size_t n = steps_for(T, dt);
  CorrectionStepper stepper(grid, lambda, epsilon, dt);
  CorrectionRun run;
  auto log = [&] {
    const ScalarField f = stepper.field();
    run.times.push_back(f.time);
    run.sigma0.push_back(l2_norm(f));
    run.sigma1.push_back(sigma_norm(f, 1).value);
  };
  log();
  ComplexArray src(static_cast<Eigen::Index>(grid.n()));
  for (std::size_t s = 0; s < n; ++s) {
    src.setZero();
    source((static_cast<double>(s) + 0.5) * dt, src);
    stepper.step(src);
    if ((s + 1) % log_every == 0 || s + 1 == n) log();
  }
  run.final = stepper.field();
  return run;
}

VectorField assemble_correction(const std::vector<ScalarField>& components,
                                const std::vector<Eigen::MatrixXcd>& frames) {
  if (components.empty()) throw ConfigError("no correction components to assemble");
  if (components.size() != frames.size()) {
    throw ConfigError("frame misalignment: one frame per component required");
  }
  const auto& g0 = components.front();
  const auto n = static_cast<Eigen::Index>(g0.grid.n());
  VectorField out{g0.grid, Eigen::MatrixXcd::Zero(n, frames.front().cols()), g0.epsilon, g0.time};
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (!components[c].grid.same_as(g0.grid) || frames[c].rows() != n ||
        frames[c].cols() != out.values.cols() || components[c].time != g0.time) {
      throw ConfigError("frame misalignment in correction assembly");
    }
    out.values.array() += frames[c].array().colwise() * components[c].values;
  }
  return out;
}

double averaging_probe(const RealArray& lambda_j, const RealArray& lambda_k, const ScalarField& f,
                       double epsilon, double t, double dt) {
  const std::size_t m = steps_for(t, dt);
  const ScalarPropagator uj(f.grid, lambda_j, epsilon, dt);
  const ScalarPropagator uk(f.grid, lambda_k, epsilon, dt);
  // a_m = U_j(s_m) f at midpoints s_m; C_m = U_k(dt) C_{m-1} + a_m, and
  // || sum U_k(-s_m) a_m || = || C_M || because U_k(s_M) is unitary.
  ComplexArray a = f.values;
  uj.half_step(a);
  ComplexArray acc = ComplexArray::Zero(a.size());
  for (std::size_t s = 0; s < m; ++s) {
    if (s > 0) {
      uj.step(a);
      uk.step(acc);
    }
    acc += a;
  }
  return dt / epsilon * l2_norm(f.grid, acc);
}

}  // namespace adiabatic
