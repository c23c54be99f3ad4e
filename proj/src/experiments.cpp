#include "adiabatic/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "adiabatic/spline.hpp"

namespace adiabatic {

namespace {

// Runs body(i) for i < n on up to `jobs` threads; results are indexed so the
// merge order never depends on scheduling.
void run_jobs(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

ComplexArray sample_profile(const Profile& a, const SpatialGrid& y) {
  ComplexArray out(static_cast<Eigen::Index>(y.n()));
  for (std::size_t i = 0; i < y.n(); ++i) out[static_cast<Eigen::Index>(i)] = a(y.x(i));
  return out;
}

VectorField polarize(const ComplexArray& phi, const Eigen::MatrixXcd& chi, const SpatialGrid& lab,
                     double epsilon, double t) {
  return {lab, chi.array().colwise() * phi, epsilon, t};
}

std::size_t observer_cadence(double observe_every, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(observe_every / dt)));
}

}  // namespace

double RunSettings::envelope_coupling() const {
  return lambda_coupling * std::pow(epsilon, 2.0 * beta - 1.5);
}

ComplexArray coherent_from_envelope(const ComplexArray& u, const SpatialGrid& y_grid, double xc,
                                    double xi, double action, double epsilon,
                                    const SpatialGrid& lab) {
  const ComplexSpline spline(y_grid.x_min(), y_grid.spacing(), u.matrix());
  const double amp = std::pow(epsilon, -0.25);
  const double s = std::sqrt(epsilon);
  ComplexArray out(static_cast<Eigen::Index>(lab.n()));
  bool edge_checked = false;
  for (std::size_t i = 0; i < lab.n(); ++i) {
    const double d = lab.x(i) - xc;
    const double y = d / s;
    if (!spline.contains(y)) {
      if (!edge_checked) {
        const double edge = boundary_magnitude(u);
        if (!(edge < kEnvelopeEdgeTolerance)) {
          std::ostringstream msg;
          msg << "lab point x = " << lab.x(i) << " maps outside the y-domain while the envelope"
              << " edge is " << edge;
          throw RuntimeAbort(msg.str());
        }
        edge_checked = true;
      }
      out[static_cast<Eigen::Index>(i)] = 0.0;
      continue;
    }
    out[static_cast<Eigen::Index>(i)] =
        amp * spline(y) * std::polar(1.0, (action + xi * d) / epsilon);
  }
  return out;
}

PacketTracker::PacketTracker(const SpectralData& data, const PacketSpec& packet,
                             const RunSettings& settings)
    : data_(&data),
      packet_(packet),
      epsilon_(settings.epsilon),
      dt_(settings.step()),
      lab_(data.grid()),
      y_grid_(settings.y_grid),
      fn_(BranchFunction::from_spectral(data, packet.branch)) {
  if (packet.branch >= data.branches()) throw ConfigError("packet branch out of range");
  if (!packet.profile) throw ConfigError("packet profile missing");
  steps_for(settings.T, dt_);
  traj_ = std::make_unique<ClassicalTrajectory>(
      integrate_trajectory(fn_, packet.x0, packet.xi0, settings.T, dt_ / 2.0, packet.branch));
  const ComplexArray u0 = sample_profile(packet.profile, y_grid_);
  envelope_ = std::make_unique<EnvelopeStepper>(y_grid_, u0, settings.envelope_coupling(), *traj_,
                                                fn_);
  frame_ = std::make_unique<FrameTransporter>(data, packet.branch, *traj_,
                                              comoving_grid(lab_, *traj_), dt_);
  slice_ = frame_->slice();
  prev_slice_ = slice_;
  prev_u_ = u0;
}

void PacketTracker::advance() {
  prev_u_ = envelope_->state().values;
  prev_slice_ = slice_;
  envelope_->step(dt_);
  frame_->step();
  slice_ = frame_->slice();
  ++steps_;
}

ComplexArray PacketTracker::phi() const {
  const std::size_t k = 2 * steps_;
  return coherent_from_envelope(envelope_->state().values, y_grid_, traj_->x[k], traj_->xi[k],
                                traj_->action[k], epsilon_, lab_);
}

ComplexArray PacketTracker::phi_midpoint() const {
  if (steps_ == 0) throw ConfigError("no step taken yet");
  const std::size_t k = 2 * steps_ - 1;
  const ComplexArray u = 0.5 * (prev_u_ + envelope_->state().values);
  return coherent_from_envelope(u, y_grid_, traj_->x[k], traj_->xi[k], traj_->action[k], epsilon_,
                                lab_);
}

VectorField PacketTracker::ansatz(const ComplexArray& phi) const {
  const auto n = static_cast<Eigen::Index>(data_->levels());
  return polarize(phi, frame_at(slice_, lab_).leftCols(n), lab_, epsilon_, time());
}

VectorField PacketTracker::ansatz() const { return ansatz(phi()); }

Eigen::MatrixXcd PacketTracker::transport_derivative_midpoint() const {
  if (steps_ == 0) throw ConfigError("no step taken yet");
  return transport_derivative(prev_slice_, slice_, traj_->xi[2 * steps_ - 1], lab_, 0);
}

AnsatzBundle build_ansatz(const SpectralData& data, const PacketSpec& packet,
                          const RunSettings& settings) {
  PacketTracker tracker(data, packet, settings);
  const std::size_t n = steps_for(settings.T, tracker.dt());
  const std::size_t cadence = observer_cadence(settings.observe_every, tracker.dt());
  AnsatzBundle b;
  b.data = &data;
  b.branch = packet.branch;
  b.epsilon = settings.epsilon;
  b.branch_fn = tracker.branch_function();
  b.frame.branch = packet.branch;
  b.frame.multiplicity = data.multiplicity(packet.branch);
  b.frame.levels = data.levels();
  b.frame.z_grid = tracker.transporter().z_grid();
  b.frame.slice_dt = tracker.dt() * static_cast<double>(cadence);
  auto store = [&] {
    b.envelope.states.push_back(tracker.envelope().state());
    b.frame.slices.push_back(tracker.slice());
  };
  store();
  for (std::size_t s = 1; s <= n; ++s) {
    tracker.advance();
    if (s % cadence == 0 || s == n) store();
  }
  b.envelope.max_mass_drift = tracker.envelope().max_mass_drift();
  b.envelope.max_boundary = tracker.envelope().max_boundary();
  b.frame.max_gram_drift = tracker.transporter().max_gram_drift();
  b.frame.max_eigen_residual = tracker.transporter().max_eigen_residual();
  b.frame.reorthonormalizations = tracker.transporter().reorthonormalizations();
  b.traj = tracker.trajectory();
  return b;
}

namespace {

std::size_t stored_index(const AnsatzBundle& b, double t) {
  for (std::size_t i = 0; i < b.envelope.states.size(); ++i) {
    if (same_time(b.envelope.states[i].time, t)) return i;
  }
  std::ostringstream msg;
  msg << "no stored ansatz at t = " << t;
  throw ConfigError(msg.str());
}

}  // namespace

ComplexArray ansatz_scalar(const AnsatzBundle& bundle, double t, const SpatialGrid& lab) {
  const std::size_t i = stored_index(bundle, t);
  const long k = bundle.traj.sample_index(t);
  if (k < 0) throw ConfigError("time off the trajectory lattice");
  const auto kk = static_cast<std::size_t>(k);
  const auto& st = bundle.envelope.states[i];
  return coherent_from_envelope(st.values, st.y_grid, bundle.traj.x[kk], bundle.traj.xi[kk],
                                bundle.traj.action[kk], bundle.epsilon, lab);
}

VectorField assemble_ansatz(const AnsatzBundle& bundle, double t, const SpatialGrid& lab) {
  const std::size_t i = stored_index(bundle, t);
  const auto n = static_cast<Eigen::Index>(bundle.frame.levels);
  const auto& slice = bundle.frame.slices.at(i);
  if (!same_time(slice.time, t)) throw ConfigError("frame slice and envelope times disagree");
  return polarize(ansatz_scalar(bundle, t, lab), frame_at(slice, lab).leftCols(n), lab,
                  bundle.epsilon, t);
}

double taylor_residual(const ComplexArray& phi, const SpatialGrid& lab, const RealArray& lambda,
                       const BranchFunction& branch, double xc) {
  const double l0 = branch.value(xc), l1 = branch.d1(xc), l2 = branch.d2(xc);
  double acc = 0.0;
  for (std::size_t i = 0; i < lab.n(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double d = lab.x(i) - xc;
    const double rem = lambda[ii] - (l0 + l1 * d + 0.5 * l2 * d * d);
    acc += rem * rem * std::norm(phi[ii]);
  }
  return std::sqrt(acc * lab.spacing());
}

double taylor_residual(const AnsatzBundle& bundle, double t) {
  const SpatialGrid& lab = bundle.data->grid();
  const long k = bundle.traj.sample_index(t);
  if (k < 0) throw ConfigError("time off the trajectory lattice");
  return taylor_residual(ansatz_scalar(bundle, t, lab), lab,
                         bundle.data->eigenvalues(bundle.branch), bundle.branch_fn,
                         bundle.traj.x[static_cast<std::size_t>(k)]);
}

ErrorNorms error_report(const FieldState& psi, const VectorField& ansatz,
                        const VectorField* correction, int p) {
  if (!psi.field.grid.same_as(ansatz.grid) || psi.field.values.cols() != ansatz.values.cols()) {
    throw ConfigError("ansatz and solution are not aligned");
  }
  VectorField w = psi.field;
  w.values -= ansatz.values;
  VectorField theta = w;
  if (correction) {
    if (!correction->grid.same_as(w.grid)) throw ConfigError("correction grid misaligned");
    theta.values += psi.epsilon() * correction->values;
  }
  return {sigma_norm(w, p), sigma_norm(theta, p)};
}

OrderFit fit_order(const std::vector<double>& epsilons, const std::vector<double>& errors) {
  OrderFit fit;
  if (epsilons.size() != errors.size()) throw ConfigError("fit needs one error per epsilon");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (epsilons[i] > 0 && errors[i] > 0 && std::isfinite(errors[i])) {
      lx.push_back(std::log(epsilons[i]));
      ly.push_back(std::log(errors[i]));
    }
  }
  if (lx.size() < 2) {
    fit.order = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  const auto m = static_cast<double>(lx.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0)) {
    fit.order = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  fit.defined = true;
  fit.order = sxy / sxx;
  fit.intercept = my - fit.order * mx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.order * lx[i]);
    fit.residuals.push_back(r);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / m);
  return fit;
}

bool strictly_decreasing(const std::vector<double>& values) {
  if (values.size() < 2) return false;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] < values[i - 1])) return false;
  }
  return true;
}

SpatialGrid lab_grid_for(const SpectralData& coarse, const std::vector<PacketSpec>& packets,
                         double x_min, double x_max, const RunSettings& settings,
                         std::size_t points) {
  double xi_max = 0.0;
  for (const auto& p : packets) {
    const BranchFunction fn = BranchFunction::from_spectral(coarse, p.branch);
    const auto traj = integrate_trajectory(fn, p.x0, p.xi0, settings.T, settings.step() / 2.0,
                                           p.branch);
    for (double v : traj.xi) xi_max = std::max(xi_max, std::abs(v));
  }
  const std::size_t n =
      points > 0 ? points : required_points(x_min, x_max, settings.epsilon, xi_max);
  SpatialGrid grid = make_grid(x_min, x_max, n);
  check_grid_adequacy(grid, settings.epsilon, xi_max);
  return grid;
}

SingleRun run_single(const SpectralData& data, const PacketSpec& packet,
                     const RunSettings& settings) {
  const SpatialGrid& lab = data.grid();
  const double eps = settings.epsilon;
  PacketTracker tracker(data, packet, settings);
  const double dt = tracker.dt();
  const std::size_t n = steps_for(settings.T, dt);
  const std::size_t cadence = observer_cadence(settings.observe_every, dt);
  const auto nl = static_cast<Eigen::Index>(data.levels());

  FieldState psi = build_initial_data(packet.profile, packet.x0, packet.xi0,
                                      frame_at(tracker.slice(), lab).leftCols(nl), lab, eps,
                                      settings.lambda_coupling, packet.perturbation);
  const NlsSolver solver(data, eps, settings.lambda_coupling, dt, settings.beta);

  struct Channel {
    std::size_t branch;
    int column;
    Eigen::MatrixXcd frame;
    std::unique_ptr<CorrectionStepper> stepper;
  };
  std::vector<Channel> channels;
  if (settings.corrections) {
    for (std::size_t j = 0; j < data.branches(); ++j) {
      if (j == packet.branch) continue;
      for (int l = 0; l < data.multiplicity(j); ++l) {
        channels.push_back({j, l, static_frame(data, j, l),
                            std::make_unique<CorrectionStepper>(lab, data.eigenvalues(j), eps, dt)});
      }
    }
  }

  SingleRun run;
  run.epsilon = eps;
  run.points = lab.n();
  run.dt = dt;
  const double m0 = mass(psi);
  const RealArray& lambda = data.eigenvalues(packet.branch);

  auto correction_field = [&]() -> std::optional<VectorField> {
    if (channels.empty()) return std::nullopt;
    std::vector<ScalarField> comps;
    std::vector<Eigen::MatrixXcd> frames;
    for (const auto& c : channels) {
      comps.push_back(c.stepper->field());
      frames.push_back(c.frame);
    }
    VectorField g = assemble_correction(comps, frames);
    g.time = psi.time();
    return g;
  };

  auto observe = [&] {
    const ComplexArray phi = tracker.phi();
    const VectorField ans = tracker.ansatz(phi);
    const auto g = correction_field();
    const ErrorNorms e = error_report(psi, ans, g ? &*g : nullptr, 1);
    run.times.push_back(psi.time());
    run.sigma1_w.push_back(e.w.value);
    run.sigma1_theta.push_back(e.theta.value);
    const double m = mass(psi);
    run.mass.push_back(m);
    run.max_mass_drift =
        std::max(run.max_mass_drift, m0 > 0 ? std::abs(m - m0) / m0 : std::abs(m - m0));
    run.populations.push_back(mode_populations(psi, data));
    run.taylor.push_back(taylor_residual(phi, lab, lambda, tracker.branch_function(),
                                         tracker.trajectory().x[2 * tracker.steps()]));
  };

  observe();
  ComplexArray src(static_cast<Eigen::Index>(lab.n()));
  for (std::size_t s = 1; s <= n; ++s) {
    solver.step(psi);
    tracker.advance();
    if (!channels.empty()) {
      const Eigen::MatrixXcd d = tracker.transport_derivative_midpoint();
      const ComplexArray phim = tracker.phi_midpoint();
      for (auto& c : channels) {
        src = phim * coupling_coefficients(d, c.frame);
        c.stepper->step(src);
      }
    }
    if (s % cadence == 0 || s == n) observe();
  }

  run.sup_sigma1_w = *std::max_element(run.sigma1_w.begin(), run.sigma1_w.end());
  run.sup_sigma1_theta = *std::max_element(run.sigma1_theta.begin(), run.sigma1_theta.end());
  run.terminal_sigma1_w = run.sigma1_w.back();
  double off = 0.0;
  const auto& pops = run.populations.back();
  for (std::size_t j = 0; j < pops.size(); ++j) {
    if (j != packet.branch) off += pops[j];
  }
  run.leakage = std::sqrt(std::max(0.0, off));
  run.envelope_mass_drift = tracker.envelope().max_mass_drift();
  run.frame_gram_drift = tracker.transporter().max_gram_drift();
  run.frame_eigen_residual = tracker.transporter().max_eigen_residual();
  for (const auto& c : channels) {
    const ScalarField g = c.stepper->field();
    run.correction_sigma1[{c.branch, c.column}] = sigma_norm(g, 1).value;
    run.correction_sigma0[{c.branch, c.column}] = l2_norm(g);
  }
  run.final_state = std::move(psi);
  return run;
}

ConvergenceReport convergence_study(const StudyInput& input) {
  for (std::size_t i = 1; i < input.epsilons.size(); ++i) {
    if (!(input.epsilons[i] < input.epsilons[i - 1])) {
      throw ConfigError("epsilon list must be strictly decreasing");
    }
  }
  const std::size_t m = input.epsilons.size();
  ConvergenceReport rep;
  rep.epsilons = input.epsilons;
  rep.runs.resize(m);
  rep.failures.assign(m, "");
  rep.failure_codes.assign(m, 0);
  const SpectralData coarse(input.potential, make_grid(input.x_min, input.x_max, 1024));
  run_jobs(m, input.jobs, [&](std::size_t i) {
    RunSettings s = input.base;
    s.epsilon = input.epsilons[i];
    try {
      const SpatialGrid lab =
          lab_grid_for(coarse, {input.packet}, input.x_min, input.x_max, s, input.points);
      const SpectralData data(input.potential, lab);
      rep.runs[i] = run_single(data, input.packet, s);
    } catch (const std::exception& e) {
      rep.failures[i] = e.what();
      rep.failure_codes[i] = exit_code_for(e);
      rep.runs[i].epsilon = s.epsilon;
      rep.runs[i].sup_sigma1_w = rep.runs[i].terminal_sigma1_w = rep.runs[i].leakage =
          std::numeric_limits<double>::quiet_NaN();
    }
  });
  for (const auto& r : rep.runs) {
    rep.sup_sigma1_w.push_back(r.sup_sigma1_w);
    rep.terminal_sigma1_w.push_back(r.terminal_sigma1_w);
    rep.leakage.push_back(r.leakage);
  }
  rep.fit = fit_order(rep.epsilons, rep.sup_sigma1_w);
  rep.leakage_fit = fit_order(rep.epsilons, rep.leakage);
  rep.monotone = strictly_decreasing(rep.sup_sigma1_w);
  rep.leakage_monotone = strictly_decreasing(rep.leakage);
  return rep;
}

GammaReport gamma_constant(const SpectralData& data, std::size_t branch1, std::size_t branch2,
                           double energy_difference) {
  const RealArray f =
      (data.eigenvalues(branch1) - data.eigenvalues(branch2) - energy_difference).abs();
  GammaReport r;
  Eigen::Index at = 0;
  r.gamma = f.minCoeff(&at);
  r.argmin = data.grid().x(static_cast<std::size_t>(at));
  const Eigen::Index n = f.size();
  r.edge_ok = n < 2 || (f[0] >= f[1] && f[n - 1] >= f[n - 2]);
  const double scale = std::max(1.0, std::abs(energy_difference));
  r.vanishes = r.gamma <= 1e-10 * scale;
  return r;
}

double interaction_window(const ClassicalTrajectory& a, const ClassicalTrajectory& b,
                          double delta) {
  if (a.size() != b.size() || std::abs(a.dt - b.dt) > 1e-15) {
    throw ConfigError("trajectories must share their sample lattice");
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    const double d0 = std::abs(a.x[k] - b.x[k]) - delta;
    const double d1 = std::abs(a.x[k + 1] - b.x[k + 1]) - delta;
    const double h = a.times[k + 1] - a.times[k];
    if (d0 <= 0 && d1 <= 0) {
      total += h;
    } else if (d0 <= 0 || d1 <= 0) {
      const double inside = d0 <= 0 ? d0 : d1;
      const double outside = d0 <= 0 ? d1 : d0;
      total += h * inside / (inside - outside);
    }
  }
  return total;
}

SuperpositionRun run_superposition(const SpectralData& data, const PacketSpec& first,
                                   const PacketSpec& second, const RunSettings& settings,
                                   double gamma_exponent) {
  const SpatialGrid& lab = data.grid();
  const double eps = settings.epsilon;
  const auto nl = static_cast<Eigen::Index>(data.levels());
  PacketTracker ta(data, first, settings), tb(data, second, settings);
  const double dt = ta.dt();
  const std::size_t n = steps_for(settings.T, dt);
  const std::size_t cadence = observer_cadence(settings.observe_every, dt);

  FieldState psi = build_initial_data(first.profile, first.x0, first.xi0,
                                      frame_at(ta.slice(), lab).leftCols(nl), lab, eps,
                                      settings.lambda_coupling, first.perturbation);
  psi.field.values += build_initial_data(second.profile, second.x0, second.xi0,
                                         frame_at(tb.slice(), lab).leftCols(nl), lab, eps,
                                         settings.lambda_coupling, second.perturbation)
                          .field.values;
  const NlsSolver solver(data, eps, settings.lambda_coupling, dt, settings.beta);

  SuperpositionRun run;
  run.epsilon = eps;
  run.points = lab.n();
  const double m0 = mass(psi);
  std::vector<double> interaction;
  auto observe = [&] {
    const ComplexArray pa = ta.phi(), pb = tb.phi();
    VectorField w = psi.field;
    w.values -= ta.ansatz(pa).values + tb.ansatz(pb).values;
    run.times.push_back(psi.time());
    run.sigma1_w.push_back(sigma_norm(w, 1).value);
    interaction.push_back(l2_norm(lab, pa.abs2() * pb));
    const double m = mass(psi);
    run.max_mass_drift = std::max(run.max_mass_drift, m0 > 0 ? std::abs(m - m0) / m0 : 0.0);
  };
  observe();
  for (std::size_t s = 1; s <= n; ++s) {
    solver.step(psi);
    ta.advance();
    tb.advance();
    if (s % cadence == 0 || s == n) observe();
  }
  for (std::size_t k = 0; k + 1 < run.times.size(); ++k) {
    run.interaction_integral +=
        0.5 * (run.times[k + 1] - run.times[k]) * (interaction[k] + interaction[k + 1]);
  }
  run.sup_sigma1_w = *std::max_element(run.sigma1_w.begin(), run.sigma1_w.end());
  run.terminal_sigma1_w = run.sigma1_w.back();
  run.window = interaction_window(ta.trajectory(), tb.trajectory(), std::pow(eps, gamma_exponent));
  return run;
}

SuperpositionReport superposition_experiment(const SuperpositionInput& input) {
  if (!(input.gamma_exponent > 0.0 && input.gamma_exponent < 0.5)) {
    throw ConfigError("gamma must lie in (0, 1/2)");
  }
  if (input.first.branch == input.second.branch && input.first.x0 == input.second.x0 &&
      input.first.xi0 == input.second.xi0) {
    throw ConfigError("the two packets must differ");
  }
  for (std::size_t i = 1; i < input.epsilons.size(); ++i) {
    if (!(input.epsilons[i] < input.epsilons[i - 1])) {
      throw ConfigError("epsilon list must be strictly decreasing");
    }
  }
  SuperpositionReport rep;
  rep.gamma_exponent = input.gamma_exponent;
  const SpectralData coarse(input.potential, make_grid(input.x_min, input.x_max, 4096));
  const double e1 = input.first.xi0 * input.first.xi0 / 2 +
                    BranchFunction::from_spectral(coarse, input.first.branch).value(input.first.x0);
  const double e2 =
      input.second.xi0 * input.second.xi0 / 2 +
      BranchFunction::from_spectral(coarse, input.second.branch).value(input.second.x0);
  rep.gamma = gamma_constant(coarse, input.first.branch, input.second.branch, e1 - e2);
  if (rep.gamma.vanishes) {
    rep.warnings.push_back("Gamma vanishes: the separation hypothesis fails, no decay expected");
  }
  if (!rep.gamma.edge_ok) {
    rep.warnings.push_back("Gamma objective decreases toward a domain edge; infimum may be lower");
  }
  const std::size_t m = input.epsilons.size();
  rep.runs.resize(m);
  run_jobs(m, input.jobs, [&](std::size_t i) {
    RunSettings s = input.base;
    s.epsilon = input.epsilons[i];
    s.corrections = false;
    try {
      const SpatialGrid lab = lab_grid_for(coarse, {input.first, input.second}, input.x_min,
                                           input.x_max, s, input.points);
      const SpectralData data(input.potential, lab);
      rep.runs[i] = run_superposition(data, input.first, input.second, s, input.gamma_exponent);
    } catch (const std::exception& e) {
      rep.runs[i].epsilon = s.epsilon;
      rep.runs[i].failure = e.what();
      rep.runs[i].failure_code = exit_code_for(e);
      rep.runs[i].sup_sigma1_w = rep.runs[i].terminal_sigma1_w = rep.runs[i].window =
          std::numeric_limits<double>::quiet_NaN();
    }
  });
  std::vector<double> errs, wins;
  for (const auto& r : rep.runs) {
    errs.push_back(r.sup_sigma1_w);
    wins.push_back(r.window);
  }
  rep.error_fit = fit_order(input.epsilons, errs);
  rep.window_fit = fit_order(input.epsilons, wins);
  rep.error_decreasing = strictly_decreasing(errs);
  return rep;
}

}  // namespace adiabatic
