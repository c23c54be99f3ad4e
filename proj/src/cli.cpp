#include "adiabatic/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "adiabatic/bench.hpp"
#include "adiabatic/config.hpp"
#include "adiabatic/parallel.hpp"
#include "adiabatic/report.hpp"

namespace adiabatic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// JSON has no NaN; non-finite numbers become null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_json(const OrderFit& f) {
  return {{"defined", f.defined},
          {"order", num(f.order)},
          {"intercept", num(f.intercept)},
          {"residual_rms", num(f.residual_rms)},
          {"residuals", f.residuals}};
}

json base_report(const std::string& command, const ExperimentConfig& cfg) {
  json r;
  r["command"] = command;
  r["name"] = cfg.name;
  r["config"] = json::parse(cfg.source_text);
  json d = json::array();
  for (const auto& g : cfg.derived) {
    d.push_back({{"epsilon", g.epsilon}, {"points", g.points}, {"dt", g.dt}, {"xi_max", g.xi_max}});
  }
  r["derived"] = d;
  return r;
}

void write_report(const fs::path& out, const json& report) {
  write_text(out / "report.json", report.dump(2) + "\n");
}

void echo_config(const fs::path& out, const ExperimentConfig& cfg) {
  write_text(out / "config.json", cfg.source_text.empty() || cfg.source_text.back() == '\n'
                                      ? cfg.source_text
                                      : cfg.source_text + "\n");
}

SpatialGrid grid_for(const ExperimentConfig& cfg, double eps) {
  for (const auto& g : cfg.derived) {
    if (g.epsilon == eps) return make_grid(cfg.x_min, cfg.x_max, g.points);
  }
  throw ConfigError("no derived grid for the requested epsilon");
}

int cmd_decompose(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const std::size_t n = cfg.points ? cfg.points : 2048;
  const SpectralData data(cfg.potential, make_grid(cfg.x_min, cfg.x_max, n));
  std::vector<std::string> header{"x"};
  for (std::size_t j = 0; j < data.branches(); ++j) header.push_back("lambda_" + std::to_string(j));
  CsvTable spectrum(header);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row{data.grid().x(i)};
    for (std::size_t j = 0; j < data.branches(); ++j) row.push_back(data.eigenvalue(j, i));
    spectrum.add_row(row);
  }
  spectrum.write(out / "spectrum.csv");

  CsvTable gaps({"branch_j", "branch_k", "min_gap", "min_gap_x", "fitted_c0", "fitted_n0",
                 "violated"});
  json report = base_report("decompose", cfg);
  json gj = json::array();
  for (std::size_t j = 0; j < data.branches(); ++j) {
    for (std::size_t k = j + 1; k < data.branches(); ++k) {
      const GapReport g = gap_report(data, j, k);
      gaps.add_row({double(j), double(k), g.min_gap, g.min_gap_x, g.fitted_c0, g.fitted_n0,
                    g.violated ? 1.0 : 0.0});
      gj.push_back({{"j", j},
                    {"k", k},
                    {"min_gap", num(g.min_gap)},
                    {"min_gap_x", g.min_gap_x},
                    {"fitted_c0", num(g.fitted_c0)},
                    {"fitted_n0", num(g.fitted_n0)},
                    {"violated", g.violated}});
    }
  }
  gaps.write(out / "gaps.csv");
  report["gaps"] = gj;
  report["multiplicities"] = data.multiplicities();
  double worst = 0.0;
  const double h = cfg.identities.steps.empty() ? 1e-3 : cfg.identities.steps.back();
  for (double x : cfg.identities.points) {
    const auto r = projector_identity_residuals(cfg.potential, x, h);
    for (double v : r.max) worst = std::max(worst, v);
  }
  report["identity_max_residual"] = worst;
  report["identity_step"] = h;
  write_report(out, report);

  std::vector<int> cols;
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < data.branches(); ++j) {
    cols.push_back(static_cast<int>(j) + 2);
    labels.push_back("lambda_" + std::to_string(j));
  }
  write_text(out / "plot.gp", gnuplot_script({{"eigenvalue branches", "spectrum.csv", 1, cols,
                                               labels, false, false}}));
  log << "decompose: " << data.branches() << " branches on " << n << " points\n";
  return 0;
}

int cmd_single(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const double eps = cfg.epsilons.front();
  const SpectralData data(cfg.potential, grid_for(cfg, eps));
  const SingleRun run = run_single(data, packet_spec(cfg, 0), run_settings(cfg, eps));

  std::vector<std::string> header{"t", "sigma1_w", "sigma1_theta", "mass", "taylor_residual"};
  for (std::size_t j = 0; j < data.branches(); ++j) {
    header.push_back("population_" + std::to_string(j));
  }
  CsvTable series(header);
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    std::vector<double> row{run.times[i], run.sigma1_w[i], run.sigma1_theta[i], run.mass[i],
                            run.taylor[i]};
    for (double p : run.populations[i]) row.push_back(p);
    series.add_row(row);
  }
  series.write(out / "single.csv");

  std::vector<std::string> sh{"x"};
  for (std::size_t c = 0; c < data.levels(); ++c) {
    sh.push_back("re_" + std::to_string(c));
    sh.push_back("im_" + std::to_string(c));
  }
  CsvTable snap(sh);
  const auto& psi = run.final_state.field.values;
  for (Eigen::Index i = 0; i < psi.rows(); ++i) {
    std::vector<double> row{data.grid().x(static_cast<std::size_t>(i))};
    for (Eigen::Index c = 0; c < psi.cols(); ++c) {
      row.push_back(psi(i, c).real());
      row.push_back(psi(i, c).imag());
    }
    snap.add_row(row);
  }
  snap.write(out / "snapshot_final.csv");

  CsvTable corr({"branch", "column", "sigma0", "sigma1"});
  json cj = json::array();
  for (const auto& [key, s1] : run.correction_sigma1) {
    const double s0 = run.correction_sigma0.at(key);
    corr.add_row({double(key.first), double(key.second), s0, s1});
    cj.push_back({{"branch", key.first}, {"column", key.second}, {"sigma0", s0}, {"sigma1", s1}});
  }
  corr.write(out / "corrections.csv");

  json report = base_report("single", cfg);
  report["epsilon"] = eps;
  report["points"] = run.points;
  report["dt"] = run.dt;
  report["sup_sigma1_w"] = num(run.sup_sigma1_w);
  report["terminal_sigma1_w"] = num(run.terminal_sigma1_w);
  report["sup_sigma1_theta"] = num(run.sup_sigma1_theta);
  report["leakage"] = num(run.leakage);
  report["max_mass_drift"] = num(run.max_mass_drift);
  report["envelope_mass_drift"] = num(run.envelope_mass_drift);
  report["frame_gram_drift"] = num(run.frame_gram_drift);
  report["frame_eigen_residual"] = num(run.frame_eigen_residual);
  report["corrections"] = cj;
  write_report(out, report);
  write_text(out / "plot.gp",
             gnuplot_script({{"error norms", "single.csv", 1, {2, 3}, {"w", "theta"}, false, true},
                             {"final |psi| components", "snapshot_final.csv", 1, {2, 3},
                              {"re_0", "im_0"}, false, false}}));
  log << "single: eps = " << eps << ", sup sigma1(w) = " << run.sup_sigma1_w << "\n";
  return 0;
}

int cmd_converge(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log,
                 json& failures) {
  const ConvergenceReport rep = convergence_study(study_input(cfg));
  CsvTable table({"epsilon", "sup_sigma1_w", "terminal_sigma1_w", "leakage"});
  CsvTable details({"epsilon", "points", "dt", "sup_sigma1_theta", "max_mass_drift",
                    "envelope_mass_drift", "frame_gram_drift", "frame_eigen_residual",
                    "taylor_residual_T", "sup_taylor_residual"});
  CsvTable corr({"epsilon", "branch", "column", "sigma0", "sigma1"});
  json runs = json::array();
  int code = 0;
  for (std::size_t i = 0; i < rep.epsilons.size(); ++i) {
    const auto& r = rep.runs[i];
    table.add_row({rep.epsilons[i], rep.sup_sigma1_w[i], rep.terminal_sigma1_w[i],
                   rep.leakage[i]});
    const double taylor_t = r.taylor.empty() ? std::nan("") : r.taylor.back();
    const double taylor_sup =
        r.taylor.empty() ? std::nan("") : *std::max_element(r.taylor.begin(), r.taylor.end());
    details.add_row({rep.epsilons[i], double(r.points), r.dt, r.sup_sigma1_theta,
                     r.max_mass_drift, r.envelope_mass_drift, r.frame_gram_drift,
                     r.frame_eigen_residual, taylor_t, taylor_sup});
    json cj = json::array();
    for (const auto& [key, s1] : r.correction_sigma1) {
      const double s0 = r.correction_sigma0.at(key);
      corr.add_row({rep.epsilons[i], double(key.first), double(key.second), s0, s1});
      cj.push_back({{"branch", key.first}, {"column", key.second}, {"sigma0", s0}, {"sigma1", s1}});
    }
    json rj = {{"epsilon", rep.epsilons[i]},
               {"points", r.points},
               {"sup_sigma1_w", num(rep.sup_sigma1_w[i])},
               {"terminal_sigma1_w", num(rep.terminal_sigma1_w[i])},
               {"leakage", num(rep.leakage[i])},
               {"sup_sigma1_theta", num(r.sup_sigma1_theta)},
               {"max_mass_drift", num(r.max_mass_drift)},
               {"populations_T", r.populations.empty() ? json::array() : json(r.populations.back())},
               {"corrections", cj}};
    if (!rep.failures[i].empty()) {
      rj["failure"] = rep.failures[i];
      failures.push_back({{"epsilon", rep.epsilons[i]},
                          {"exit_code", rep.failure_codes[i]},
                          {"message", rep.failures[i]}});
      code = std::max(code, rep.failure_codes[i]);
    }
    runs.push_back(rj);
  }
  table.add_footer("fitted_order", rep.fit.defined ? rep.fit.order : std::nan(""));
  table.add_footer("leakage_order",
                   rep.leakage_fit.defined ? rep.leakage_fit.order : std::nan(""));
  table.add_footer("strictly_decreasing", rep.monotone ? "true" : "false");
  table.write(out / "convergence.csv");
  details.write(out / "details.csv");
  corr.write(out / "corrections.csv");

  json report = base_report("converge", cfg);
  report["runs"] = runs;
  report["fit"] = fit_json(rep.fit);
  report["leakage_fit"] = fit_json(rep.leakage_fit);
  report["strictly_decreasing"] = rep.monotone;
  report["leakage_strictly_decreasing"] = rep.leakage_monotone;
  if (!rep.fit.defined) report["warning"] = "fitted order undefined (fewer than two positive errors)";
  write_report(out, report);
  write_text(out / "plot.gp",
             gnuplot_script({{"adiabatic error vs epsilon", "convergence.csv", 1, {2, 3, 4},
                              {"sup sigma1 w", "terminal sigma1 w", "leakage"}, true, true}}));
  log << "converge: fitted order " << rep.fit.order << ", leakage order " << rep.leakage_fit.order
      << (rep.monotone ? ", strictly decreasing" : ", not strictly decreasing") << "\n";
  return code;
}

int cmd_superpose(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log,
                  json& failures) {
  const SuperpositionReport rep = superposition_experiment(superposition_input(cfg));
  CsvTable table({"epsilon", "sup_sigma1_w", "terminal_sigma1_w", "interaction_window",
                  "interaction_integral"});
  json runs = json::array();
  int code = 0;
  for (const auto& r : rep.runs) {
    table.add_row({r.epsilon, r.sup_sigma1_w, r.terminal_sigma1_w, r.window,
                   r.interaction_integral});
    json rj = {{"epsilon", r.epsilon},
               {"points", r.points},
               {"sup_sigma1_w", num(r.sup_sigma1_w)},
               {"terminal_sigma1_w", num(r.terminal_sigma1_w)},
               {"interaction_window", num(r.window)},
               {"interaction_integral", num(r.interaction_integral)},
               {"max_mass_drift", num(r.max_mass_drift)}};
    if (!r.failure.empty()) {
      rj["failure"] = r.failure;
      failures.push_back(
          {{"epsilon", r.epsilon}, {"exit_code", r.failure_code}, {"message", r.failure}});
      code = std::max(code, r.failure_code);
    }
    runs.push_back(rj);
  }
  table.add_footer("gamma", rep.gamma.gamma);
  table.add_footer("gamma_exponent", rep.gamma_exponent);
  table.add_footer("error_order", rep.error_fit.defined ? rep.error_fit.order : std::nan(""));
  table.add_footer("window_order", rep.window_fit.defined ? rep.window_fit.order : std::nan(""));
  table.add_footer("error_strictly_decreasing", rep.error_decreasing ? "true" : "false");
  table.write(out / "superposition.csv");

  json report = base_report("superpose", cfg);
  report["gamma"] = {{"value", rep.gamma.gamma},
                     {"argmin", rep.gamma.argmin},
                     {"edge_ok", rep.gamma.edge_ok},
                     {"vanishes", rep.gamma.vanishes}};
  report["gamma_exponent"] = rep.gamma_exponent;
  report["runs"] = runs;
  report["error_fit"] = fit_json(rep.error_fit);
  report["window_fit"] = fit_json(rep.window_fit);
  report["error_strictly_decreasing"] = rep.error_decreasing;
  report["warnings"] = rep.warnings;
  write_report(out, report);
  write_text(out / "plot.gp",
             gnuplot_script({{"two-packet error and interaction window", "superposition.csv", 1,
                              {2, 4}, {"sup sigma1 w", "|I(T)|"}, true, true}}));
  for (const auto& w : rep.warnings) log << "warning: " << w << "\n";
  log << "superpose: Gamma = " << rep.gamma.gamma << ", window order " << rep.window_fit.order
      << "\n";
  return code;
}

int cmd_identities(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto& ic = cfg.identities;
  CsvTable rows({"x", "h", "r0", "r1", "r2", "r3", "r4", "max"});
  CsvTable ratios({"x", "h", "ratio0", "ratio1", "ratio2", "ratio3", "ratio4"});
  double worst = 0.0;
  for (double x : ic.points) {
    std::vector<IdentityResiduals> res;
    for (double h : ic.steps) {
      res.push_back(projector_identity_residuals(cfg.potential, x, h));
      const auto& r = res.back();
      const double m = *std::max_element(r.max.begin(), r.max.end());
      worst = std::max(worst, m);
      rows.add_row({x, h, r.max[0], r.max[1], r.max[2], r.max[3], r.max[4], m});
    }
    for (std::size_t s = 0; s + 1 < res.size(); ++s) {
      std::vector<double> row{x, ic.steps[s]};
      for (int q = 0; q < 5; ++q) {
        const double a = res[s].max[q], b = res[s + 1].max[q];
        row.push_back(a > 1e-12 && b > 0 ? a / b : std::nan(""));
      }
      ratios.add_row(row);
    }
  }
  rows.write(out / "identities.csv");
  ratios.write(out / "identity_ratios.csv");

  const SpectralData data(cfg.potential,
                          make_grid(ic.scan_min - 1.0, ic.scan_max + 1.0, 8192));
  std::vector<double> xs;
  for (std::size_t i = 0; i < ic.scan_points; ++i) {
    xs.push_back(ic.scan_min + (ic.scan_max - ic.scan_min) * static_cast<double>(i) /
                                   static_cast<double>(std::max<std::size_t>(1, ic.scan_points - 1)));
  }
  CsvTable growth({"branch_j", "branch_k", "order", "x", "gamma_ratio", "projector_ratio"});
  json scans = json::array();
  for (std::size_t j = 0; j < data.branches(); ++j) {
    for (std::size_t k = 0; k < data.branches(); ++k) {
      if (j == k) continue;
      const double n0 = ic.n0 ? *ic.n0 : std::max(0.0, gap_report(data, j, k).fitted_n0);
      for (int beta : ic.derivative_orders) {
        const GrowthScan g = growth_scan(data, j, k, beta, xs, n0);
        for (std::size_t i = 0; i < g.x.size(); ++i) {
          growth.add_row({double(j), double(k), double(beta), g.x[i], g.gamma_ratio[i],
                          g.projector_ratio[i]});
        }
        scans.push_back({{"j", j},
                         {"k", k},
                         {"order", beta},
                         {"n0", n0},
                         {"max_gamma_ratio", num(g.max_gamma_ratio)},
                         {"max_projector_ratio", num(g.max_projector_ratio)},
                         {"argmax_gamma", g.argmax_gamma},
                         {"argmax_projector", g.argmax_projector}});
      }
    }
  }
  growth.write(out / "growth.csv");
  json report = base_report("identities", cfg);
  report["max_residual"] = worst;
  report["growth"] = scans;
  write_report(out, report);
  write_text(out / "plot.gp",
             gnuplot_script({{"identity residuals vs h", "identities.csv", 2, {3, 4, 5, 6, 7},
                              {"r0", "r1", "r2", "r3", "r4"}, true, true},
                             {"growth ratios", "growth.csv", 4, {5, 6}, {"gamma", "projector"},
                              false, false}}));
  log << "identities: max residual " << worst << "\n";
  return 0;
}

int cmd_bench(const CliOptions& opt, const fs::path& out, std::ostream& log) {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  std::vector<std::size_t> threads{1};
  const std::size_t t = opt.threads ? opt.threads : hw;
  if (t != 1) threads.push_back(t);
  const auto records = bench_kernels(opt.bench_sizes, threads);
  CsvTable table({"kernel", "grid_size", "levels", "steps_per_second", "threads"});
  for (const auto& r : records) {
    table.add_row(std::vector<std::string>{r.kernel, std::to_string(r.grid_size),
                                           std::to_string(r.levels),
                                           format_double(r.steps_per_second),
                                           std::to_string(r.threads)});
  }
  table.write(out / "bench.csv");
  json report;
  report["command"] = "bench";
  report["hardware_threads"] = hw;
  json rj = json::array();
  for (const auto& r : records) {
    rj.push_back({{"kernel", r.kernel},
                  {"grid_size", r.grid_size},
                  {"levels", r.levels},
                  {"steps_per_second", r.steps_per_second},
                  {"threads", r.threads}});
  }
  report["records"] = rj;
  write_report(out, report);
  write_text(out / "plot.gp", gnuplot_script({}));
  log << "bench: " << records.size() << " records\n";
  return 0;
}

const char* kind_of(int code) {
  switch (code) {
    case 2: return "config";
    case 3: return "invariant";
    default: return "runtime";
  }
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw ConfigError("cannot parse number '" + item + "' in list '" + text + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

int run_command(const CliOptions& opt, std::ostream& log) {
  fs::path out = opt.out_dir.empty() ? fs::path("out") / opt.command : fs::path(opt.out_dir);
  json failures = json::array();
  int code = 0;
  try {
    if (std::find(cli_commands().begin(), cli_commands().end(), opt.command) ==
        cli_commands().end()) {
      throw ConfigError("unknown command '" + opt.command + "'");
    }
    if (opt.threads) set_thread_count(opt.threads);
    if (opt.command == "bench" && opt.config_path.empty()) {
      fs::create_directories(out);
      return cmd_bench(opt, out, log);
    }
    if (opt.config_path.empty()) throw ConfigError("--config is required");
    ExperimentConfig cfg = load_config(opt.config_path);
    if (!opt.epsilon_override.empty()) override_epsilons(cfg, opt.epsilon_override);
    if (opt.threads) cfg.jobs = opt.threads;
    if (opt.out_dir.empty()) out = cfg.output;
    fs::create_directories(out);
    fs::remove(out / "failure.json");
    echo_config(out, cfg);
    if (opt.command == "decompose") code = cmd_decompose(cfg, out, log);
    if (opt.command == "single") code = cmd_single(cfg, out, log);
    if (opt.command == "converge") code = cmd_converge(cfg, out, log, failures);
    if (opt.command == "superpose") code = cmd_superpose(cfg, out, log, failures);
    if (opt.command == "identities") code = cmd_identities(cfg, out, log);
    if (opt.command == "bench") code = cmd_bench(opt, out, log);
    if (code == 0) return 0;
  } catch (const std::exception& e) {
    code = exit_code_for(e);
    failures.push_back({{"message", e.what()}, {"exit_code", code}});
    log << "error (" << kind_of(code) << "): " << e.what() << "\n";
  }
  try {
    fs::create_directories(out);
    json rec = {{"command", opt.command},
                {"exit_code", code},
                {"kind", kind_of(code)},
                {"failures", failures}};
    write_text(out / "failure.json", rec.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "could not write failure record: " << e.what() << "\n";
  }
  return code;
}

}  // namespace adiabatic
