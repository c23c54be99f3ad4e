#include "adiabatic/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "adiabatic/experiments.hpp"
#include "adiabatic/parallel.hpp"

namespace adiabatic {

namespace {

using Clock = std::chrono::steady_clock;

MatrixPotentialSpec bench_potential() {
  return MatrixPotentialSpec::from_strings(
      2, {"x^2/2", "x^2/2"},
      {"jb(x)^(-1)*cos(x)", "jb(x)^(-1)*sin(x)", "-(jb(x)^(-1)*cos(x))"});
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

cplx bench_profile(double y) { return std::pow(M_PI, -0.25) * std::exp(-y * y / 2); }

}  // namespace

std::vector<BenchRecord> bench_kernels(const std::vector<std::size_t>& sizes,
                                       const std::vector<std::size_t>& thread_counts,
                                       std::size_t repetitions) {
  std::vector<BenchRecord> out;
  if (sizes.empty()) return out;
  repetitions = std::max<std::size_t>(5, repetitions);
  for (std::size_t n : sizes) {
    if (n < 8 || (n & (n - 1)) != 0) throw ConfigError("bench sizes must be powers of two >= 8");
  }
  const std::vector<std::size_t> threads =
      thread_counts.empty() ? std::vector<std::size_t>{1} : thread_counts;
  const std::size_t saved = thread_count();

  for (std::size_t t : threads) {
    set_thread_count(t);
    for (std::size_t n : sizes) {
      const SpectralData data(bench_potential(), make_grid(-4, 4, n));
      const double eps = 0.01;
      FieldState st = build_initial_data(bench_profile, 0.5, 0.5, static_frame(data, 0),
                                         data.grid(), eps, 1.0);
      const NlsSolver solver(data, eps, 1.0, 1e-3);
      const std::size_t steps = std::max<std::size_t>(4, (1u << 20) / n);
      std::vector<double> rates;
      for (std::size_t r = 0; r < repetitions; ++r) {
        const auto t0 = Clock::now();
        for (std::size_t s = 0; s < steps; ++s) solver.step(st);
        const double sec = std::chrono::duration<double>(Clock::now() - t0).count();
        rates.push_back(static_cast<double>(steps) / sec);
      }
      out.push_back({"nls_step", n, 2, median(rates), t});
    }
  }

  for (std::size_t t : threads) {
    set_thread_count(1);
    std::vector<double> rates;
    std::size_t total_steps = 0, grid = 0;
    for (std::size_t r = 0; r < repetitions; ++r) {
      StudyInput in;
      in.potential = bench_potential();
      in.packet.branch = 0;
      in.packet.x0 = 0.5;
      in.packet.xi0 = 0.5;
      in.packet.profile = bench_profile;
      in.base.T = 0.05;
      in.base.dt = 1e-3;
      in.base.lambda_coupling = 1.0;
      in.base.observe_every = 0.05;
      in.epsilons = {0.2, 0.19, 0.18, 0.17};
      in.x_min = -4;
      in.x_max = 4;
      in.jobs = t;
      const auto t0 = Clock::now();
      const ConvergenceReport rep = convergence_study(in);
      const double sec = std::chrono::duration<double>(Clock::now() - t0).count();
      total_steps = 4 * steps_for(in.base.T, in.base.dt);
      rates.push_back(static_cast<double>(total_steps) / sec);
      grid = rep.runs.back().points;
    }
    out.push_back({"eps_sweep", grid, 2, median(rates), t});
  }
  set_thread_count(saved);
  return out;
}

}  // namespace adiabatic
