#include "adiabatic/potential.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "adiabatic/parallel.hpp"

namespace adiabatic {

namespace {

std::size_t sym_index(std::size_t n, std::size_t i, std::size_t k) {
  if (i > k) std::swap(i, k);
  return i * n - i * (i - 1) / 2 + (k - i);
}

std::string at_x(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

MatrixPotentialSpec differentiate(const MatrixPotentialSpec& spec) {
  MatrixPotentialSpec d = spec;
  for (auto& e : d.diag_entries) e = e.derivative();
  for (auto& e : d.sym_entries) e = e.derivative();
  return d;
}

// Eigenvalues within this distance are treated as one eigenspace.
double cluster_tolerance(const Eigen::VectorXd& values) {
  return 1e-10 * std::max(1.0, values.cwiseAbs().maxCoeff());
}

struct PointEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns
};

PointEigen eigen_at(const MatrixPotentialSpec& spec, double x) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(spec.evaluate(x));
  if (solver.info() != Eigen::Success) {
    throw RuntimeAbort("eigendecomposition failed at x = " + at_x(x));
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// Deterministic orthonormal basis of span(basis): project e_1..e_N and
// orthonormalize, keeping the first d independent directions.
Eigen::MatrixXd canonical_frame(const Eigen::MatrixXd& basis, int d) {
  const Eigen::Index n = basis.rows();
  if (d == 1) {
    Eigen::VectorXd v = basis.col(0);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
    return v;
  }
  Eigen::MatrixXd out(n, d);
  int found = 0;
  const Eigen::MatrixXd proj = basis * basis.transpose();
  for (Eigen::Index c = 0; c < n && found < d; ++c) {
    Eigen::VectorXd v = proj.col(c);
    for (int m = 0; m < found; ++m) v -= out.col(m).dot(v) * out.col(m);
    const double nv = v.norm();
    if (nv > 1e-6) out.col(found++) = v / nv;
  }
  return out;
}

struct Cluster {
  Eigen::Index begin;
  Eigen::Index size;
  double mean;
};

std::vector<Cluster> clusters_of(const Eigen::VectorXd& values) {
  const double tol = cluster_tolerance(values);
  std::vector<Cluster> out;
  Eigen::Index b = 0;
  for (Eigen::Index i = 1; i <= values.size(); ++i) {
    if (i == values.size() || values[i] - values[i - 1] > tol) {
      out.push_back({b, i - b, values.segment(b, i - b).mean()});
      b = i;
    }
  }
  return out;
}

LocalSpectrum initial_spectrum(const PointEigen& pe, const std::vector<int>& mult, double x) {
  const double tol = cluster_tolerance(pe.values);
  LocalSpectrum out;
  out.x = x;
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < mult.size(); ++j) {
    const int d = mult[j];
    const Eigen::VectorXd seg = pe.values.segment(c, d);
    const bool tight = seg.maxCoeff() - seg.minCoeff() <= tol;
    const bool separated = c + d >= pe.values.size() || pe.values[c + d] - seg.maxCoeff() > tol;
    if (!tight || !separated) {
      throw ConfigError("declared multiplicities do not match the spectrum at x = " + at_x(x));
    }
    out.values.push_back(seg.mean());
    out.frames.push_back(canonical_frame(pe.vectors.middleCols(c, d), d));
    c += d;
  }
  return out;
}

// Matches the eigenspaces at x to the branches of `ref` by frame overlap,
// falling back to nearest predicted eigenvalue when the overlap is ambiguous.
LocalSpectrum align_to(const PointEigen& pe, const LocalSpectrum& ref,
                       const std::vector<double>& predicted, const std::vector<int>& mult,
                       const Eigen::MatrixXd& potential, double x) {
  const auto clusters = clusters_of(pe.values);
  const std::size_t nb = mult.size();
  const std::size_t nc = clusters.size();

  Eigen::MatrixXd weight(nc, nb);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto e = pe.vectors.middleCols(clusters[c].begin, clusters[c].size);
    for (std::size_t j = 0; j < nb; ++j) {
      weight(c, j) = (e.transpose() * ref.frames[j]).squaredNorm() / mult[j];
    }
  }

  std::vector<double> margin(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    std::vector<double> w(weight.col(j).data(), weight.col(j).data() + nc);
    std::sort(w.rbegin(), w.rend());
    margin[j] = w[0] - (nc > 1 ? w[1] : 0.0);
  }
  std::vector<std::size_t> order(nb);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return margin[a] > margin[b]; });

  std::vector<Eigen::Index> capacity(nc);
  for (std::size_t c = 0; c < nc; ++c) capacity[c] = clusters[c].size;
  std::vector<std::size_t> owner(nb, nc);
  for (std::size_t j : order) {
    const bool ambiguous = margin[j] < 0.2;
    double best = -1e300;
    std::size_t pick = nc;
    for (std::size_t c = 0; c < nc; ++c) {
      if (capacity[c] < mult[j]) continue;
      const double score = ambiguous ? -std::abs(clusters[c].mean - predicted[j]) : weight(c, j);
      if (score > best) {
        best = score;
        pick = c;
      }
    }
    if (pick == nc) throw RuntimeAbort("unresolvable branch crossing at x = " + at_x(x));
    owner[j] = pick;
    capacity[pick] -= mult[j];
  }
  for (auto cap : capacity) {
    if (cap != 0) throw RuntimeAbort("unresolvable branch crossing at x = " + at_x(x));
  }

  LocalSpectrum out;
  out.x = x;
  out.values.assign(nb, 0.0);
  out.frames.assign(nb, Eigen::MatrixXd());
  for (std::size_t c = 0; c < nc; ++c) {
    const auto e = pe.vectors.middleCols(clusters[c].begin, clusters[c].size);
    const Eigen::MatrixXd proj = e * e.transpose();
    std::vector<Eigen::VectorXd> done;
    int sharing = 0;
    for (std::size_t j = 0; j < nb; ++j) sharing += owner[j] == c ? 1 : 0;
    for (std::size_t j = 0; j < nb; ++j) {
      if (owner[j] != c) continue;
      Eigen::MatrixXd f = proj * ref.frames[j];
      for (Eigen::Index col = 0; col < f.cols(); ++col) {
        Eigen::VectorXd v = f.col(col);
        for (const auto& u : done) v -= u.dot(v) * u;
        for (Eigen::Index m = 0; m < col; ++m) v -= f.col(m).dot(v) * f.col(m);
        const double nv = v.norm();
        if (nv < 1e-8) throw RuntimeAbort("unresolvable branch crossing at x = " + at_x(x));
        f.col(col) = v / nv;
      }
      for (Eigen::Index col = 0; col < f.cols(); ++col) done.emplace_back(f.col(col));
      out.frames[j] = f;
      out.values[j] = sharing == 1 ? clusters[c].mean
                                   : (f.transpose() * potential * f).trace() / mult[j];
    }
  }
  return out;
}

}  // namespace

MatrixPotentialSpec MatrixPotentialSpec::from_strings(std::size_t n_levels,
                                                      const std::vector<std::string>& diag,
                                                      const std::vector<std::string>& sym) {
  MatrixPotentialSpec spec;
  spec.n_levels = n_levels;
  for (const auto& s : diag) spec.diag_entries.push_back(parse_expr(s));
  for (const auto& s : sym) spec.sym_entries.push_back(parse_expr(s));
  spec.validate();
  return spec;
}

MatrixPotentialSpec MatrixPotentialSpec::scalar(const std::string& expr) {
  return from_strings(1, {expr}, {"0"});
}

void MatrixPotentialSpec::validate() const {
  if (n_levels < 1) throw ConfigError("n_levels must be at least 1");
  if (diag_entries.size() != n_levels) {
    throw ConfigError("expected " + std::to_string(n_levels) + " diagonal entries, got " +
                      std::to_string(diag_entries.size()));
  }
  const std::size_t ns = n_levels * (n_levels + 1) / 2;
  if (sym_entries.size() != ns) {
    throw ConfigError("expected " + std::to_string(ns) + " symmetric entries, got " +
                      std::to_string(sym_entries.size()));
  }
  if (!multiplicities.empty()) {
    int total = 0;
    for (int d : multiplicities) {
      if (d < 1) throw ConfigError("multiplicities must be positive");
      total += d;
    }
    if (static_cast<std::size_t>(total) != n_levels) {
      throw ConfigError("multiplicities must sum to n_levels");
    }
  }
}

std::vector<int> MatrixPotentialSpec::branch_multiplicities() const {
  if (!multiplicities.empty()) return multiplicities;
  return std::vector<int>(n_levels, 1);
}

bool MatrixPotentialSpec::is_diagonal() const {
  for (std::size_t i = 0; i < n_levels; ++i) {
    for (std::size_t k = i + 1; k < n_levels; ++k) {
      const Expr& e = sym_entries[sym_index(n_levels, i, k)];
      if (e.depends_on_x() || e(0.0) != 0.0) return false;
    }
  }
  return true;
}

Eigen::MatrixXd MatrixPotentialSpec::evaluate(double x, int derivative_order) const {
  if (derivative_order < 0 || derivative_order > 2) {
    throw ConfigError("potential derivative order must be 0, 1 or 2");
  }
  if (derivative_order > 0) {
    MatrixPotentialSpec d = differentiate(*this);
    return d.evaluate(x, derivative_order - 1);
  }
  const auto n = static_cast<Eigen::Index>(n_levels);
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n_levels; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    m(ii, ii) = diag_entries[i](x) + sym_entries[sym_index(n_levels, i, i)](x);
    for (std::size_t k = i + 1; k < n_levels; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      m(ii, kk) = m(kk, ii) = sym_entries[sym_index(n_levels, i, k)](x);
    }
  }
  return m;
}

Eigen::MatrixXd evaluate_potential(const MatrixPotentialSpec& spec, double x) {
  return spec.evaluate(x);
}

LocalSpectrum local_spectrum(const MatrixPotentialSpec& spec, double x) {
  return initial_spectrum(eigen_at(spec, x), spec.branch_multiplicities(), x);
}

LocalSpectrum align_spectrum(const MatrixPotentialSpec& spec, const LocalSpectrum& reference,
                             double x) {
  return align_to(eigen_at(spec, x), reference, reference.values, spec.branch_multiplicities(),
                  spec.evaluate(x), x);
}

SpectralData::SpectralData(MatrixPotentialSpec spec, SpatialGrid grid)
    : spec_(std::move(spec)), grid_(std::move(grid)) {
  spec_.validate();
  mult_ = spec_.branch_multiplicities();
  const std::size_t n = grid_.n();
  const std::size_t nb = mult_.size();
  const auto nl = static_cast<Eigen::Index>(spec_.n_levels);

  std::vector<PointEigen> eig(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) eig[i] = eigen_at(spec_, grid_.x(i));
  });

  values_.assign(nb, RealArray(static_cast<Eigen::Index>(n)));
  frames_.resize(nb);
  projectors_.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    frames_[j].resize(nl * mult_[j], static_cast<Eigen::Index>(n));
    projectors_[j].resize(nl * nl, static_cast<Eigen::Index>(n));
  }

  auto store = [&](std::size_t i, const LocalSpectrum& s) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < nb; ++j) {
      values_[j][ii] = s.values[j];
      frames_[j].col(ii) = s.frames[j].reshaped();
      projectors_[j].col(ii) = s.projector(j).reshaped();
    }
  };

  LocalSpectrum prev = initial_spectrum(eig[0], mult_, grid_.x(0));
  store(0, prev);
  std::vector<double> predicted(nb);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      predicted[j] = i >= 2 ? 2.0 * values_[j][static_cast<Eigen::Index>(i - 1)] -
                                  values_[j][static_cast<Eigen::Index>(i - 2)]
                            : prev.values[j];
    }
    const double x = grid_.x(i);
    prev = align_to(eig[i], prev, predicted, mult_, spec_.evaluate(x), x);
    store(i, prev);
  }

  // Simple branches that never separate signal an undeclared multiplicity.
  for (std::size_t j = 0; j < nb; ++j) {
    for (std::size_t k = j + 1; k < nb; ++k) {
      if ((values_[j] - values_[k]).abs().maxCoeff() < 1e-10) {
        throw ConfigError("branches " + std::to_string(j) + " and " + std::to_string(k) +
                          " coincide on the whole grid; declare a multiplicity");
      }
    }
  }
}

Eigen::MatrixXd SpectralData::frame(std::size_t j, std::size_t i) const {
  const auto nl = static_cast<Eigen::Index>(spec_.n_levels);
  return frames_[j].col(static_cast<Eigen::Index>(i)).reshaped(nl, mult_[j]);
}

Eigen::MatrixXd SpectralData::projector(std::size_t j, std::size_t i) const {
  const auto nl = static_cast<Eigen::Index>(spec_.n_levels);
  return projectors_[j].col(static_cast<Eigen::Index>(i)).reshaped(nl, nl);
}

LocalSpectrum SpectralData::at_grid_point(std::size_t i) const {
  LocalSpectrum s;
  s.x = grid_.x(i);
  for (std::size_t j = 0; j < mult_.size(); ++j) {
    s.values.push_back(eigenvalue(j, i));
    s.frames.push_back(frame(j, i));
  }
  return s;
}

LocalSpectrum SpectralData::local(double x) const {
  const double h = grid_.spacing();
  const double last = grid_.x(grid_.n() - 1);
  const double s = std::round((x - grid_.x_min()) / h);
  const auto i = static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(grid_.n() - 1)));
  LocalSpectrum ref = at_grid_point(i);
  if (x >= grid_.x_min() - h && x <= last + h) return align_spectrum(spec_, ref, x);

  // March from the edge so branch identity survives the extrapolation.
  constexpr double kStep = 0.02;
  const double start = ref.x;
  const double dist = x - start;
  const auto steps = static_cast<int>(std::ceil(std::abs(dist) / kStep));
  for (int m = 1; m <= steps; ++m) {
    ref = align_spectrum(spec_, ref, m == steps ? x : start + dist * m / steps);
  }
  return ref;
}

SpectralData decompose(const MatrixPotentialSpec& spec, const SpatialGrid& grid) {
  return SpectralData(spec, grid);
}

GapReport gap_report(const SpectralData& data, std::size_t j, std::size_t k) {
  if (j == k) throw ConfigError("gap_report needs two distinct branches");
  if (j >= data.branches() || k >= data.branches()) throw ConfigError("branch index out of range");
  const RealArray gap = (data.eigenvalues(j) - data.eigenvalues(k)).abs();
  const RealArray& x = data.grid().points();
  GapReport r;
  Eigen::Index imin = 0;
  r.min_gap = gap.minCoeff(&imin);
  r.min_gap_x = x[imin];
  r.violated = r.min_gap < 1e-12;

  // log gap = log c0 - n0 log<x>
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (Eigen::Index i = 0; i < gap.size(); ++i) {
    if (!(gap[i] > 0.0)) continue;
    const double lx = std::log(japanese_bracket(x[i]));
    const double ly = std::log(gap[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count == 0) return r;
  const double mx = sx / count;
  const double my = sy / count;
  const double var = sxx / count - mx * mx;
  const double slope = var > 1e-14 ? (sxy / count - mx * my) / var : 0.0;
  r.fitted_n0 = -slope;
  r.fitted_c0 = std::exp(my - slope * mx);
  return r;
}

double gamma(const SpectralData& data, std::size_t j, std::size_t k, std::size_t i) {
  if (j == k) throw ConfigError("gamma needs two distinct branches");
  const double lj = data.eigenvalue(j, i);
  const double lk = data.eigenvalue(k, i);
  const double d = lk - lj;
  if (std::abs(d) <= 1e-14 * std::max({1.0, std::abs(lj), std::abs(lk)})) {
    throw RuntimeAbort("zero gap between branches at x = " + at_x(data.grid().x(i)));
  }
  return 1.0 / d;
}

BranchFunction BranchFunction::from_expr(const Expr& e) {
  const Expr d1 = e.derivative();
  const Expr d2 = d1.derivative();
  return {[e](double x) { return e(x); }, [d1](double x) { return d1(x); },
          [d2](double x) { return d2(x); }};
}

BranchFunction BranchFunction::from_spectral(const SpectralData& data, std::size_t j) {
  const auto& spec = data.spec();
  if (spec.is_diagonal()) {
    const Eigen::MatrixXd f = data.frame(j, 0);
    Eigen::Index m = 0;
    f.col(0).cwiseAbs().maxCoeff(&m);
    const auto mm = static_cast<std::size_t>(m);
    return from_expr(spec.diag_entries[mm] + spec.sym_entries[sym_index(spec.n_levels, mm, mm)]);
  }
  auto shared = std::make_shared<const SpectralData>(data);
  auto dv = std::make_shared<const MatrixPotentialSpec>(differentiate(spec));
  auto ddv = std::make_shared<const MatrixPotentialSpec>(differentiate(*dv));

  BranchFunction b;
  b.value = [shared, j](double x) { return shared->local(x).values[j]; };
  if (data.multiplicity(j) > 1) {
    b.d1 = [shared, dv, j](double x) {
      const auto s = shared->local(x);
      const auto& f = s.frames[j];
      return (f.transpose() * dv->evaluate(x) * f).trace() / static_cast<double>(f.cols());
    };
    auto d1 = b.d1;
    b.d2 = [d1](double x) {
      constexpr double h = 1e-4;
      return (d1(x + h) - d1(x - h)) / (2.0 * h);
    };
    return b;
  }
  b.d1 = [shared, dv, j](double x) {
    const auto s = shared->local(x);
    const Eigen::VectorXd v = s.frames[j].col(0);
    return v.dot(dv->evaluate(x) * v);
  };
  b.d2 = [shared, dv, ddv, j](double x) {
    const auto s = shared->local(x);
    const Eigen::VectorXd v = s.frames[j].col(0);
    const Eigen::MatrixXd v1 = dv->evaluate(x);
    const Eigen::VectorXd w = v1 * v;
    double out = v.dot(ddv->evaluate(x) * v);
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      if (k == j) continue;
      const double gapk = s.values[j] - s.values[k];
      for (Eigen::Index c = 0; c < s.frames[k].cols(); ++c) {
        const double m = s.frames[k].col(c).dot(w);
        out += 2.0 * m * m / gapk;
      }
    }
    return out;
  };
  return b;
}

double matrix_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

IdentityResiduals projector_identity_residuals(const MatrixPotentialSpec& spec, double x,
                                               double h) {
  if (!(h > 0.0)) throw ConfigError("step h must be positive");
  const LocalSpectrum c = local_spectrum(spec, x);
  const std::size_t nb = c.values.size();
  for (std::size_t j = 0; j < nb; ++j) {
    for (std::size_t k = j + 1; k < nb; ++k) {
      if (std::abs(c.values[j] - c.values[k]) < 1e-10) {
        throw RuntimeAbort("degenerate gap at x = " + at_x(x));
      }
    }
  }
  const LocalSpectrum p = align_spectrum(spec, c, x + h);
  const LocalSpectrum m = align_spectrum(spec, c, x - h);
  const Eigen::MatrixXd dv = (spec.evaluate(x + h) - spec.evaluate(x - h)) / (2.0 * h);
  const auto nl = static_cast<Eigen::Index>(spec.n_levels);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(nl, nl);

  IdentityResiduals r;
  r.x = x;
  r.h = h;
  for (std::size_t j = 0; j < nb; ++j) {
    const Eigen::MatrixXd pj = c.projector(j);
    const Eigen::MatrixXd d = (p.projector(j) - m.projector(j)) / (2.0 * h);
    const double dl = (p.values[j] - m.values[j]) / (2.0 * h);
    std::array<double, 5> res{};
    res[0] = matrix_norm(pj * d * pj);
    res[1] = matrix_norm(d - d * pj - pj * d);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(nl, nl);
    for (std::size_t k = 0; k < nb; ++k) {
      if (k == j) continue;
      const Eigen::MatrixXd pk = c.projector(k);
      sum += pk * d * pj + pj * d * pk;
      const double lk = c.values[j] - c.values[k];
      const Eigen::MatrixXd shifted = dv - dl * id;
      res[3] = std::max(res[3], matrix_norm(lk * d * pk - pj * shifted * pk));
      res[4] = std::max(res[4], matrix_norm(lk * pk * d - pk * shifted * pj));
    }
    res[2] = matrix_norm(d - sum);
    for (int q = 0; q < 5; ++q) r.max[q] = std::max(r.max[q], res[q]);
    r.per_branch.push_back(res);
  }
  return r;
}

GrowthScan growth_scan(const SpectralData& data, std::size_t j, std::size_t k, int beta,
                       const std::vector<double>& x_samples, double n0, double h) {
  if (beta < 0 || beta > 2) throw ConfigError("beta must be 0, 1 or 2");
  if (j == k) throw ConfigError("growth_scan needs two distinct branches");
  GrowthScan s;
  s.beta = beta;
  s.n0 = n0;
  for (double x : x_samples) {
    const LocalSpectrum c = data.local(x);
    auto gam = [&](const LocalSpectrum& ls) {
      const double d = ls.values[k] - ls.values[j];
      if (d == 0.0) throw RuntimeAbort("zero gap between branches at x = " + at_x(ls.x));
      return 1.0 / d;
    };
    double g = 0.0;
    double pn = 0.0;
    if (beta == 0) {
      g = std::abs(gam(c));
      pn = matrix_norm(c.projector(j));
    } else {
      const LocalSpectrum p = align_spectrum(data.spec(), c, x + h);
      const LocalSpectrum m = align_spectrum(data.spec(), c, x - h);
      if (beta == 1) {
        g = std::abs((gam(p) - gam(m)) / (2.0 * h));
        pn = matrix_norm((p.projector(j) - m.projector(j)) / (2.0 * h));
      } else {
        g = std::abs((gam(p) - 2.0 * gam(c) + gam(m)) / (h * h));
        pn = matrix_norm((p.projector(j) - 2.0 * c.projector(j) + m.projector(j)) / (h * h));
      }
    }
    const double jx = japanese_bracket(x);
    const double gr = g / std::pow(jx, n0 + beta * (1.0 + n0));
    const double pr = pn / std::pow(jx, beta * (1.0 + n0));
    s.x.push_back(x);
    s.gamma_ratio.push_back(gr);
    s.projector_ratio.push_back(pr);
    if (gr > s.max_gamma_ratio || s.x.size() == 1) {
      s.max_gamma_ratio = gr;
      s.argmax_gamma = x;
    }
    if (pr > s.max_projector_ratio || s.x.size() == 1) {
      s.max_projector_ratio = pr;
      s.argmax_projector = x;
    }
  }
  return s;
}

}  // namespace adiabatic
