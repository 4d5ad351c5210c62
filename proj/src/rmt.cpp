#include "mdelab/rmt.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mdelab/error.hpp"
#include "mdelab/parallel.hpp"

namespace mdelab {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t k = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  const double hi = v[k];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
  return 0.5 * (lo + hi);
}

Matrix shifted(const HermMatrix& h, SpectralParam zeta) {
  Matrix m = h.matrix();
  m.diagonal().array() -= zeta.value();
  return m;
}

RealVector eigenvalues_of(const HermMatrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

std::vector<int> complement(int n, std::span<const int> removed) {
  std::vector<bool> gone(static_cast<std::size_t>(n), false);
  for (int b : removed) {
    if (b < 0 || b >= n) throw InvalidArgument("minor: index out of range");
    gone[static_cast<std::size_t>(b)] = true;
  }
  std::vector<int> kept;
  for (int x = 0; x < n; ++x)
    if (!gone[static_cast<std::size_t>(x)]) kept.push_back(x);
  if (kept.empty()) throw InvalidArgument("minor: cannot remove the full index set");
  return kept;
}

Matrix restrict(const Matrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i) out(i, j) = m(rows[i], cols[j]);
  return out;
}

}  // namespace

SpectralDecomposition SpectralDecomposition::of(const HermMatrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix());
  return {es.eigenvalues(), es.eigenvectors()};
}

Matrix SpectralDecomposition::resolvent(SpectralParam zeta) const {
  Vector d(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) d(i) = 1.0 / (values(i) - zeta.value());
  return vectors * d.asDiagonal() * vectors.adjoint();
}

Matrix resolvent(const HermMatrix& h, SpectralParam zeta) {
  return SpectralDecomposition::of(h).resolvent(zeta);
}

Matrix resolvent_direct(const HermMatrix& h, SpectralParam zeta) {
  return Eigen::PartialPivLU<Matrix>(shifted(h, zeta)).inverse();
}

double ward_check(const Matrix& g, SpectralParam zeta) {
  const RealVector row_mass = g.cwiseAbs2().rowwise().sum();
  double worst = 0.0;
  for (Eigen::Index x = 0; x < g.rows(); ++x)
    worst = std::max(worst, std::abs(row_mass(x) - g(x, x).imag() / zeta.eta()));
  return worst;
}

ErrorMatrix error_matrix(const HermMatrix& h, const Matrix& g, const HermMatrix& a, const SelfEnergy& s,
                         SpectralParam zeta) {
  const int n = static_cast<int>(g.rows());
  if (h.dim() != n || a.dim() != n || s.dim() != n) throw DimensionMismatch("error_matrix: dimensions");
  const Matrix sg = s(g);
  ErrorMatrix out;
  out.d = -(sg + h.matrix() - a.matrix()) * g;
  Matrix lhs = (sg - a.matrix()) * g + zeta.value() * g + out.d;
  lhs.diagonal().array() += 1.0;
  out.identity_residual = max_norm(lhs);
  return out;
}

Matrix error_matrix_fast(const Matrix& g, const HermMatrix& a, const SelfEnergy& s, SpectralParam zeta) {
  const Eigen::Index n = g.rows();
  const Matrix t = s(g) - a.matrix();
  const Eigen::Index nnz = (t.array() != Complex(0.0)).count();
  Matrix d;
  if (nnz * 10 < n * n) {
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(static_cast<std::size_t>(nnz));
    for (Eigen::Index y = 0; y < n; ++y)
      for (Eigen::Index x = 0; x < n; ++x)
        if (t(x, y) != Complex(0.0)) trip.emplace_back(x, y, t(x, y));
    Eigen::SparseMatrix<Complex> ts(n, n);
    ts.setFromTriplets(trip.begin(), trip.end());
    d = ts * g;
  } else {
    d = t * g;
  }
  d += zeta.value() * g;
  d.diagonal().array() += 1.0;
  return -d;
}

MinorResolvent minor_resolvent(const HermMatrix& h, std::span<const int> removed, SpectralParam zeta) {
  const int n = h.dim();
  MinorResolvent out;
  out.kept = complement(n, removed);
  std::vector<int> gone(removed.begin(), removed.end());
  std::sort(gone.begin(), gone.end());
  gone.erase(std::unique(gone.begin(), gone.end()), gone.end());
  out.g_b = Eigen::PartialPivLU<Matrix>(restrict(shifted(h, zeta), out.kept, out.kept)).inverse();
  const Matrix g = resolvent_direct(h, zeta);
  Matrix schur = restrict(g, out.kept, out.kept);
  if (!gone.empty()) {
    const Matrix g_xb = restrict(g, out.kept, gone);
    const Matrix g_bx = restrict(g, gone, out.kept);
    const Matrix g_bb = restrict(g, gone, gone);
    schur -= g_xb * Eigen::PartialPivLU<Matrix>(g_bb).solve(g_bx);
  }
  out.schur_residual = max_norm(out.g_b - schur);
  return out;
}

Matrix minor_solution(const Matrix& m, std::span<const int> removed) {
  const std::vector<int> kept = complement(static_cast<int>(m.rows()), removed);
  const Matrix m_inv = Eigen::PartialPivLU<Matrix>(m).inverse();
  return Eigen::PartialPivLU<Matrix>(restrict(m_inv, kept, kept)).inverse();
}

MdeSolution solve_continued(const DataPair& data, SpectralParam zeta, const SolverConfig& cfg) {
  const std::vector<double> grid = default_eta_grid(support_bound(data), zeta.eta());
  return continuation_sweep(data, zeta.tau(), grid, cfg).back();
}

ScalingFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("fit_loglog: sizes differ");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  ScalingFit f;
  f.points = static_cast<int>(lx.size());
  if (f.points < 2) {
    f.slope = f.lo = f.hi = std::numeric_limits<double>::quiet_NaN();
    return f;
  }
  const double n = f.points;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < f.points; ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < f.points; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  f.slope = sxy / sxx;
  double rss = 0.0;
  for (int i = 0; i < f.points; ++i) {
    const double r = ly[i] - my - f.slope * (lx[i] - mx);
    rss += r * r;
  }
  f.stderr_ = f.points > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  f.lo = f.slope - 2.0 * f.stderr_;
  f.hi = f.slope + 2.0 * f.stderr_;
  return f;
}

LocalLawReport local_law_experiment(const EnsembleSpec& spec, std::span<const LocalLawTarget> schedule,
                                    int trials, double delta, int threads, const SolverConfig& cfg) {
  if (trials <= 0) throw InvalidArgument("local_law_experiment: trials must be positive");
  LocalLawReport rep;
  for (const LocalLawTarget& target : schedule) {
    const SpectralParam zeta(target.zeta);
    LocalLawPoint pt;
    pt.n = target.n;
    pt.zeta = target.zeta;
    const EnsembleSpec sn = spec.with_dim(target.n);
    const DataPair data = sn.data_pair();
    MdeSolution sol;
    try {
      sol = solve_continued(data, zeta, cfg);
    } catch (const Error& e) {
      pt.failed = true;
      pt.failure = e.what();
      rep.points.push_back(pt);
      continue;
    }
    pt.rho = harmonic_dos(sol);
    pt.bulk = pt.rho >= delta;
    const Complex m_avg = avg_trace(sol.m);
    const Sampler sampler(sn);
    const int count = target.trials > 0 ? target.trials : trials;
    std::vector<LocalLawRow> rows(static_cast<std::size_t>(count));
    parallel_for(count, threads, [&](int t) {
      const SampleDraw draw = sampler.sample(t);
      const Matrix g = resolvent_direct(draw.h, zeta);
      LocalLawRow& row = rows[static_cast<std::size_t>(t)];
      row.n = target.n;
      row.zeta = target.zeta;
      row.trial = t;
      row.lambda_max = max_norm(g - sol.m);
      row.trace_err = std::abs(avg_trace(g) - m_avg);
      row.d_max = max_norm(error_matrix_fast(g, data.bare, data.self_energy, zeta));
      row.ward_resid = ward_check(g, zeta);
    });
    std::vector<double> lam, tr, dm;
    for (const LocalLawRow& r : rows) {
      lam.push_back(r.lambda_max);
      tr.push_back(r.trace_err);
      dm.push_back(r.d_max);
      pt.max_lambda = std::max(pt.max_lambda, r.lambda_max);
      pt.max_ward = std::max(pt.max_ward, r.ward_resid);
    }
    pt.trials = count;
    pt.median_lambda = median(lam);
    pt.median_trace_err = median(tr);
    pt.median_d = median(dm);
    rep.points.push_back(pt);
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  }

  std::vector<double> x, yl, yt;
  std::vector<std::pair<double, double>> order;
  for (const LocalLawPoint& p : rep.points) {
    if (p.failed) continue;
    const double ne = p.n * p.zeta.imag();
    x.push_back(ne);
    yl.push_back(p.median_lambda);
    yt.push_back(p.median_trace_err);
    order.emplace_back(ne, p.median_lambda);
  }
  rep.entrywise = fit_loglog(x, yl);
  rep.trace = fit_loglog(x, yt);
  std::sort(order.begin(), order.end());
  rep.monotone = !order.empty();
  for (std::size_t i = 1; i < order.size(); ++i)
    if (order[i].second > order[i - 1].second) rep.monotone = false;
  return rep;
}

DosCurve ensemble_dos(const EnsembleSpec& spec, int points, double eta, int threads, const SolverConfig& cfg) {
  const DataPair data = spec.data_pair();
  const double kappa = support_bound(data);
  const std::vector<double> grid = linspace(-kappa - 0.1, kappa + 0.1, points);
  return dos_on_real_line(data, grid, eta, Extrapolation::richardson3, cfg, threads);
}

RigidityReport rigidity_experiment(const EnsembleSpec& spec, const DosCurve& curve, double delta, int trials,
                                   int tau_points, int threads, bool keep_eigenvalues) {
  if (trials <= 0 || tau_points < 2) throw InvalidArgument("rigidity_experiment: trials and grid size");
  const int n = spec.n;
  RigidityReport rep;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (curve.value(i) >= delta) {
      lo = std::min(lo, curve.points[i].tau);
      hi = std::max(hi, curve.points[i].tau);
    }
  if (lo < hi)
    for (double tau : linspace(lo, hi, tau_points)) {
      if (curve.interpolate(tau) < delta) continue;
      const int idx = quantile_index(curve, tau, n);
      if (idx < 1 || idx > n) continue;
      rep.taus.push_back(tau);
      rep.indices.push_back(idx);
    }
  rep.thresholds = {5.0 / n, 10.0 * std::log(static_cast<double>(n)) / n, std::pow(n, -0.9)};
  rep.deviations.assign(static_cast<std::size_t>(trials), {});
  if (keep_eigenvalues) rep.eigenvalues.assign(static_cast<std::size_t>(trials), RealVector());
  const Sampler sampler(spec);
  parallel_for(trials, threads, [&](int t) {
    const RealVector ev = eigenvalues_of(sampler.sample(t).h);
    std::vector<double>& dev = rep.deviations[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < rep.taus.size(); ++k) dev.push_back(std::abs(ev(rep.indices[k] - 1) - rep.taus[k]));
    if (keep_eigenvalues) rep.eigenvalues[static_cast<std::size_t>(t)] = ev;
  });
  std::size_t total = 0;
  std::vector<std::size_t> within(rep.thresholds.size(), 0);
  for (const auto& dev : rep.deviations)
    for (double d : dev) {
      ++total;
      for (std::size_t j = 0; j < rep.thresholds.size(); ++j)
        if (d <= rep.thresholds[j]) ++within[j];
    }
  for (std::size_t j = 0; j < rep.thresholds.size(); ++j)
    rep.fraction_within.push_back(total ? static_cast<double>(within[j]) / total : 0.0);
  return rep;
}

double DelocalizationReport::fraction_below(double bound) const {
  if (values.empty()) return 0.0;
  const auto k = std::count_if(values.begin(), values.end(), [bound](double v) { return v <= bound; });
  return static_cast<double>(k) / values.size();
}

DelocalizationReport delocalization_check(const EnsembleSpec& spec, const DosCurve& curve, double delta,
                                          int trials, int threads) {
  if (trials <= 0) throw InvalidArgument("delocalization_check: trials must be positive");
  const int n = spec.n;
  const Sampler sampler(spec);
  std::vector<std::vector<double>> per(static_cast<std::size_t>(trials));
  parallel_for(trials, threads, [&](int t) {
    const SpectralDecomposition sd = SpectralDecomposition::of(sampler.sample(t).h);
    for (int k = 0; k < n; ++k) {
      if (curve.interpolate(sd.values(k)) < delta) continue;
      per[static_cast<std::size_t>(t)].push_back(n * sd.vectors.col(k).cwiseAbs2().maxCoeff());
    }
  });
  DelocalizationReport rep;
  rep.n = n;
  for (const auto& v : per) rep.values.insert(rep.values.end(), v.begin(), v.end());
  rep.vectors = static_cast<int>(rep.values.size());
  for (double v : rep.values) rep.max_value = std::max(rep.max_value, v);
  const double ln = std::log(static_cast<double>(n));
  rep.constant = rep.max_value / (ln * ln);
  return rep;
}

double GapSample::mean_unfolded() const {
  if (records.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const GapRecord& r : records) s += r.unfolded;
  return s / records.size();
}

std::vector<double> GapSample::unfolded() const {
  std::vector<double> v;
  v.reserve(records.size());
  for (const GapRecord& r : records) v.push_back(r.unfolded);
  return v;
}

GapSample gap_statistics(const EnsembleSpec& spec, const DosCurve& curve, int trials, double lo, double hi,
                         double delta, int first_trial, int threads) {
  if (!(lo < hi) || trials <= 0) throw InvalidArgument("gap_statistics: empty window or no trials");
  if (curve.interpolate(lo) < delta || curve.interpolate(hi) < delta)
    throw InvalidArgument("gap_statistics: window leaves the bulk");
  const int n = spec.n;
  const Sampler sampler(spec);
  std::vector<std::vector<GapRecord>> per(static_cast<std::size_t>(trials));
  parallel_for(trials, threads, [&](int t) {
    const int trial = first_trial + t;
    const RealVector ev = eigenvalues_of(sampler.sample(trial).h);
    for (int i = 0; i + 1 < n; ++i) {
      if (ev(i) < lo || ev(i + 1) > hi) continue;
      const double gap = ev(i + 1) - ev(i);
      per[static_cast<std::size_t>(t)].push_back({trial, i, gap, gap * n * curve.interpolate(ev(i))});
    }
  });
  GapSample out;
  for (const auto& v : per) out.records.insert(out.records.end(), v.begin(), v.end());
  if (out.records.size() < 50)
    throw InsufficientStatistics("gap_statistics: " + std::to_string(out.records.size()) +
                                 " pooled gaps, need at least 50");
  return out;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = a.size(), nb = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

}  // namespace mdelab
