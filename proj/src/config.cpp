#include "adiabatic/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "adiabatic/expr.hpp"

namespace adiabatic {

using nlohmann::json;

Profile make_profile(const ProfileSpec& p) {
  const double norm = p.amplitude * std::pow(M_PI, -0.25) / std::sqrt(p.width);
  if (p.name == "zero") return [](double) { return cplx(0.0); };
  if (p.name == "gaussian") {
    return [p, norm](double y) {
      const double s = (y - p.center) / p.width;
      return norm * std::exp(-0.5 * s * s) * std::polar(1.0, p.slope * y);
    };
  }
  if (p.name == "hermite") {
    return [p](double y) {
      const double s = (y - p.center) / p.width;
      double prev = 0.0;
      double cur = std::pow(M_PI, -0.25) * std::exp(-0.5 * s * s);
      for (int m = 0; m < p.order; ++m) {
        const double next = std::sqrt(2.0 / (m + 1)) * s * cur - std::sqrt(double(m) / (m + 1)) * prev;
        prev = cur;
        cur = next;
      }
      return cplx(p.amplitude * cur / std::sqrt(p.width)) * std::polar(1.0, p.slope * y);
    };
  }
  if (p.name == "random") {
    std::mt19937_64 gen(p.seed);
    std::vector<double> c;
    for (int k = 0; k < p.terms; ++k) {
      // 53 random bits mapped to [-1, 1); independent of the standard library's distributions
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      c.push_back(p.scale * (2.0 * u - 1.0));
    }
    return [p, norm, c](double y) {
      const double s = (y - p.center) / p.width;
      double poly = 1.0, term = 1.0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        term *= s / static_cast<double>(k + 1);
        poly += c[k] * term;
      }
      return norm * poly * std::exp(-0.5 * s * s) * std::polar(1.0, p.slope * y);
    };
  }
  throw ConfigError("unknown profile '" + p.name + "'");
}

namespace {

// Collects every violation instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) {
    errors.push_back(path + ": " + what);
  }

  const json* field(const json& obj, const std::string& key, const std::string& path,
                    bool required) {
    if (!obj.is_object()) return nullptr;
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(path + key, "missing required field");
      return nullptr;
    }
    return &*it;
  }

  double number(const json& obj, const std::string& key, const std::string& path, double fallback,
                bool required = false) {
    const json* v = field(obj, key, path, required);
    if (!v) return fallback;
    if (!v->is_number()) {
      fail(path + key, "expected a number");
      return fallback;
    }
    return v->get<double>();
  }

  std::size_t count(const json& obj, const std::string& key, const std::string& path,
                    std::size_t fallback) {
    const json* v = field(obj, key, path, false);
    if (!v) return fallback;
    if (!v->is_number_integer() || v->get<long long>() < 0) {
      fail(path + key, "expected a non-negative integer");
      return fallback;
    }
    return v->get<std::size_t>();
  }

  std::string text(const json& obj, const std::string& key, const std::string& path,
                   const std::string& fallback, bool required = false) {
    const json* v = field(obj, key, path, required);
    if (!v) return fallback;
    if (!v->is_string()) {
      fail(path + key, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  std::vector<double> numbers(const json& obj, const std::string& key, const std::string& path,
                              std::vector<double> fallback, bool required = false) {
    const json* v = field(obj, key, path, required);
    if (!v) return fallback;
    if (!v->is_array()) {
      fail(path + key, "expected a list of numbers");
      return fallback;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        fail(path + key + "[" + std::to_string(i) + "]", "expected a number");
      } else {
        out.push_back((*v)[i].get<double>());
      }
    }
    return out;
  }

  std::vector<std::string> strings(const json& obj, const std::string& key,
                                   const std::string& path, bool required) {
    const json* v = field(obj, key, path, required);
    std::vector<std::string> out;
    if (!v) return out;
    if (!v->is_array()) {
      fail(path + key, "expected a list of expression strings");
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string()) {
        fail(path + key + "[" + std::to_string(i) + "]", "expected an expression string");
      } else {
        out.push_back((*v)[i].get<std::string>());
      }
    }
    return out;
  }
};

ProfileSpec read_profile(Reader& r, const json& obj, const std::string& path,
                         std::uint64_t seed) {
  ProfileSpec p;
  p.seed = seed;
  if (obj.is_string()) {
    p.name = obj.get<std::string>();
  } else if (obj.is_object()) {
    p.name = r.text(obj, "name", path, "gaussian");
    p.amplitude = r.number(obj, "amplitude", path, p.amplitude);
    p.width = r.number(obj, "width", path, p.width);
    p.center = r.number(obj, "center", path, p.center);
    p.slope = r.number(obj, "slope", path, p.slope);
    p.order = static_cast<int>(r.count(obj, "order", path, 0));
    p.terms = static_cast<int>(r.count(obj, "terms", path, 3));
    p.scale = r.number(obj, "scale", path, p.scale);
  } else {
    r.fail(path.substr(0, path.size() - 1), "expected a profile name or object");
    return p;
  }
  if (p.name != "gaussian" && p.name != "hermite" && p.name != "random" && p.name != "zero") {
    r.fail(path + "name", "unknown profile '" + p.name + "' (gaussian, hermite, random, zero)");
  }
  if (!(p.width > 0)) r.fail(path + "width", "must be positive");
  return p;
}

PacketConfig read_packet(Reader& r, const json& obj, const std::string& path,
                         std::uint64_t seed) {
  PacketConfig p;
  if (!obj.is_object()) {
    r.fail(path.substr(0, path.size() - 1), "expected an object");
    return p;
  }
  p.branch = r.count(obj, "branch", path, 0);
  p.x0 = r.number(obj, "x0", path, 0.0, true);
  p.xi0 = r.number(obj, "xi0", path, 0.0, true);
  if (const json* pr = r.field(obj, "profile", path, false)) {
    p.profile = read_profile(r, *pr, path + "profile.", seed);
  }
  if (const json* pe = r.field(obj, "perturbation", path, false)) {
    const std::string pp = path + "perturbation.";
    PerturbationConfig q;
    q.kappa = r.number(*pe, "kappa", pp, 1.0, true);
    if (!(q.kappa > 0.25)) r.fail(pp + "kappa", "kappa must exceed 1/4");
    if (const json* pr = r.field(*pe, "profile", pp, false)) {
      q.profile = read_profile(r, *pr, pp + "profile.", seed);
    }
    q.direction = r.numbers(*pe, "direction", pp, {}, true);
    p.perturbation = q;
  }
  return p;
}

}  // namespace

std::vector<DerivedGrid> derive_grids(const ExperimentConfig& cfg) {
  std::vector<DerivedGrid> out;
  const SpectralData coarse(cfg.potential, make_grid(cfg.x_min, cfg.x_max, 1024));
  std::vector<PacketSpec> packets;
  for (std::size_t i = 0; i < cfg.packets.size(); ++i) packets.push_back(packet_spec(cfg, i));
  for (double eps : cfg.epsilons) {
    const RunSettings s = run_settings(cfg, eps);
    DerivedGrid d;
    d.epsilon = eps;
    d.dt = s.step();
    steps_for(cfg.T, d.dt);
    for (const auto& p : packets) {
      const auto traj = integrate_trajectory(BranchFunction::from_spectral(coarse, p.branch), p.x0,
                                             p.xi0, cfg.T, d.dt / 2.0, p.branch);
      for (double v : traj.xi) d.xi_max = std::max(d.xi_max, std::abs(v));
    }
    d.points = lab_grid_for(coarse, packets, cfg.x_min, cfg.x_max, s, cfg.points).n();
    out.push_back(d);
  }
  return out;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: expected a JSON object");
  Reader r;
  ExperimentConfig cfg;
  cfg.source_text = json_text;
  cfg.name = r.text(root, "name", "", cfg.name);
  cfg.seed = r.count(root, "seed", "", 0);

  bool potential_ok = false;
  if (const json* pot = r.field(root, "potential", "", true)) {
    if (!pot->is_object()) {
      r.fail("potential", "expected an object");
    } else {
      const std::size_t errs = r.errors.size();
      if (pot->contains("scalar")) {
        cfg.potential_diagonal = {r.text(*pot, "scalar", "potential.", "0")};
        cfg.potential_symmetric = {"0"};
      } else {
        cfg.potential_diagonal = r.strings(*pot, "diagonal", "potential.", true);
        cfg.potential_symmetric = r.strings(*pot, "symmetric", "potential.", true);
      }
      const std::size_t n = r.count(*pot, "levels", "potential.", cfg.potential_diagonal.size());
      std::vector<int> mult;
      for (double m : r.numbers(*pot, "multiplicities", "potential.", {})) {
        mult.push_back(static_cast<int>(m));
      }
      std::optional<GapDeclaration> gap;
      if (const json* g = r.field(*pot, "gap", "potential.", false)) {
        gap = GapDeclaration{r.number(*g, "c0", "potential.gap.", 0.0, true),
                             r.number(*g, "n0", "potential.gap.", 0.0, true)};
      }
      if (r.errors.size() == errs) {
        try {
          cfg.potential =
              MatrixPotentialSpec::from_strings(n, cfg.potential_diagonal, cfg.potential_symmetric);
          cfg.potential.multiplicities = mult;
          cfg.potential.gap = gap;
          cfg.potential.validate();
          potential_ok = true;
        } catch (const std::exception& e) {
          r.fail("potential", e.what());
        }
      }
    }
  }

  if (const json* pk = r.field(root, "packets", "", false)) {
    if (!pk->is_array() || pk->empty()) {
      r.fail("packets", "expected a non-empty list of packets");
    } else {
      for (std::size_t i = 0; i < pk->size(); ++i) {
        cfg.packets.push_back(
            read_packet(r, (*pk)[i], "packets[" + std::to_string(i) + "].", cfg.seed + i));
      }
    }
  } else if (const json* p = r.field(root, "packet", "", true)) {
    cfg.packets.push_back(read_packet(r, *p, "packet.", cfg.seed));
  }

  cfg.epsilons = r.numbers(root, "epsilons", "", {}, true);
  if (root.contains("epsilons") && cfg.epsilons.empty()) {
    r.fail("epsilons", "must list at least one value");
  }
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    if (!(cfg.epsilons[i] > 0)) r.fail("epsilons[" + std::to_string(i) + "]", "must be positive");
  }
  cfg.lambda_coupling = r.number(root, "lambda", "", 0.0);
  cfg.beta = r.number(root, "beta", "", 0.75);
  cfg.T = r.number(root, "T", "", 1.0);
  if (!(cfg.T > 0)) r.fail("T", "must be positive");
  if (const json* dt = r.field(root, "dt", "", false)) {
    if (dt->is_string() && dt->get<std::string>() == "auto") {
      cfg.dt = 0.0;
    } else if (dt->is_number() && dt->get<double>() > 0) {
      cfg.dt = dt->get<double>();
    } else {
      r.fail("dt", "expected \"auto\" or a positive number");
    }
  }
  if (const json* dom = r.field(root, "domain", "", false)) {
    cfg.x_min = r.number(*dom, "x_min", "domain.", cfg.x_min);
    cfg.x_max = r.number(*dom, "x_max", "domain.", cfg.x_max);
    cfg.points = r.count(*dom, "points", "domain.", 0);
    if (!(cfg.x_max > cfg.x_min)) r.fail("domain", "x_max must exceed x_min");
    if (cfg.points != 0 && (cfg.points < 8 || (cfg.points & (cfg.points - 1)) != 0)) {
      r.fail("domain.points", "must be 0 (automatic) or a power of two >= 8");
    }
  }
  if (const json* env = r.field(root, "envelope_domain", "", false)) {
    cfg.y_min = r.number(*env, "y_min", "envelope_domain.", cfg.y_min);
    cfg.y_max = r.number(*env, "y_max", "envelope_domain.", cfg.y_max);
    cfg.y_points = r.count(*env, "points", "envelope_domain.", cfg.y_points);
    if (!(cfg.y_max > cfg.y_min)) r.fail("envelope_domain", "y_max must exceed y_min");
    if (cfg.y_points < 8) r.fail("envelope_domain.points", "must be at least 8");
  }
  cfg.observe_every = r.number(root, "observe_every", "", cfg.observe_every);
  if (!(cfg.observe_every > 0)) r.fail("observe_every", "must be positive");
  if (const json* c = r.field(root, "corrections", "", false)) {
    if (c->is_boolean()) {
      cfg.corrections = c->get<bool>();
    } else {
      r.fail("corrections", "expected true or false");
    }
  }
  cfg.gamma_exponent = r.number(root, "gamma", "", cfg.gamma_exponent);
  if (!(cfg.gamma_exponent > 0 && cfg.gamma_exponent < 0.5)) {
    r.fail("gamma", "must lie in (0, 1/2)");
  }
  cfg.jobs = std::max<std::size_t>(1, r.count(root, "jobs", "", 1));
  cfg.output = r.text(root, "output", "", cfg.output);

  if (const json* id = r.field(root, "identities", "", false)) {
    auto& ic = cfg.identities;
    ic.points = r.numbers(*id, "points", "identities.", ic.points);
    ic.steps = r.numbers(*id, "steps", "identities.", ic.steps);
    ic.scan_min = r.number(*id, "scan_min", "identities.", ic.scan_min);
    ic.scan_max = r.number(*id, "scan_max", "identities.", ic.scan_max);
    ic.scan_points = r.count(*id, "scan_points", "identities.", ic.scan_points);
    std::vector<int> orders;
    for (double b : r.numbers(*id, "derivative_orders", "identities.", {0, 1, 2})) {
      orders.push_back(static_cast<int>(b));
    }
    ic.derivative_orders = orders;
    if (id->contains("n0")) ic.n0 = r.number(*id, "n0", "identities.", 0.0);
  }

  if (potential_ok) {
    for (std::size_t i = 0; i < cfg.packets.size(); ++i) {
      const auto& p = cfg.packets[i];
      const std::string path = cfg.packets.size() == 1 && root.contains("packet")
                                   ? std::string("packet")
                                   : "packets[" + std::to_string(i) + "]";
      if (p.branch >= cfg.potential.branch_multiplicities().size()) {
        r.fail(path + ".branch", "branch index out of range");
      }
      if (p.perturbation && p.perturbation->direction.size() != cfg.potential.n_levels) {
        r.fail(path + ".perturbation.direction", "needs one entry per level");
      }
    }
  }

  if (r.errors.empty()) {
    try {
      cfg.derived = derive_grids(cfg);
    } catch (const std::exception& e) {
      r.fail("derived grids", e.what());
    }
  }
  if (!r.errors.empty()) {
    std::ostringstream msg;
    msg << "config schema errors (" << r.errors.size() << "):";
    for (const auto& e : r.errors) msg << "\n  - " << e;
    throw ConfigError(msg.str());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void override_epsilons(ExperimentConfig& cfg, const std::vector<double>& epsilons) {
  if (epsilons.empty()) throw ConfigError("epsilon override is empty");
  for (double e : epsilons) {
    if (!(e > 0)) throw ConfigError("epsilon override values must be positive");
  }
  cfg.epsilons = epsilons;
  cfg.derived = derive_grids(cfg);
}

RunSettings run_settings(const ExperimentConfig& cfg, double epsilon) {
  RunSettings s;
  s.epsilon = epsilon;
  s.lambda_coupling = cfg.lambda_coupling;
  s.beta = cfg.beta;
  s.T = cfg.T;
  s.dt = cfg.dt;
  s.observe_every = cfg.observe_every;
  s.corrections = cfg.corrections;
  s.y_grid = make_grid(cfg.y_min, cfg.y_max, cfg.y_points);
  return s;
}

PacketSpec packet_spec(const ExperimentConfig& cfg, std::size_t index) {
  const PacketConfig& c = cfg.packets.at(index);
  PacketSpec p;
  p.branch = c.branch;
  p.x0 = c.x0;
  p.xi0 = c.xi0;
  p.profile = make_profile(c.profile);
  if (c.perturbation) {
    InitialPerturbation q;
    q.kappa = c.perturbation->kappa;
    q.profile = make_profile(c.perturbation->profile);
    q.direction = Eigen::Map<const Eigen::VectorXd>(c.perturbation->direction.data(),
                                                    static_cast<Eigen::Index>(
                                                        c.perturbation->direction.size()))
                      .cast<cplx>();
    p.perturbation = q;
  }
  return p;
}

StudyInput study_input(const ExperimentConfig& cfg) {
  StudyInput in;
  in.potential = cfg.potential;
  in.packet = packet_spec(cfg, 0);
  in.base = run_settings(cfg, cfg.epsilons.front());
  in.epsilons = cfg.epsilons;
  in.x_min = cfg.x_min;
  in.x_max = cfg.x_max;
  in.points = cfg.points;
  in.jobs = cfg.jobs;
  return in;
}

SuperpositionInput superposition_input(const ExperimentConfig& cfg) {
  if (cfg.packets.size() != 2) throw ConfigError("packets: superposition needs exactly two packets");
  SuperpositionInput in;
  in.potential = cfg.potential;
  in.first = packet_spec(cfg, 0);
  in.second = packet_spec(cfg, 1);
  in.base = run_settings(cfg, cfg.epsilons.front());
  in.epsilons = cfg.epsilons;
  in.gamma_exponent = cfg.gamma_exponent;
  in.x_min = cfg.x_min;
  in.x_max = cfg.x_max;
  in.points = cfg.points;
  in.jobs = cfg.jobs;
  return in;
}

}  // namespace adiabatic
