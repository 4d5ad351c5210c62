#include "mdelab/stability.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mdelab/dos.hpp"
#include "mdelab/error.hpp"
#include "mdelab/krylov.hpp"

namespace mdelab {

namespace {

constexpr int kPerronMaxIter = 100000;

struct Eig {
  RealVector values;
  Matrix vectors;
};

Eig eig(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(h));
  return {es.eigenvalues(), es.eigenvectors()};
}

Matrix from_eig(const Eig& e, const std::function<Complex(double)>& f) {
  Vector d(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) d(i) = f(e.values(i));
  return e.vectors * d.asDiagonal() * e.vectors.adjoint();
}

// Top eigenpair of a self-adjoint T from its dense matrix: eigenmatrix made
// PSD-phased (positive trace) and hs-normalized.
struct DensePerron {
  RealVector spectrum;
  Matrix eigenmatrix;
};

DensePerron dense_perron(const SuperOperator& t) {
  const int n = t.dim();
  Matrix d = dense_superop(t);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (d + d.adjoint()));
  DensePerron out;
  out.spectrum = es.eigenvalues();
  Matrix top = unvec(es.eigenvectors().col(es.eigenvalues().size() - 1), n);
  const Complex tr = top.trace();
  if (std::abs(tr) > 0.0) top *= std::abs(tr) / tr;
  top = hermitian_part(top);
  out.eigenmatrix = top / hs_norm(top);
  return out;
}

}  // namespace

SaturationData compute_saturation(const MdeSolution& sol, const SelfEnergy& s) {
  const int n = sol.dim();
  if (s.dim() != n) throw DimensionMismatch("compute_saturation: dimension");
  SaturationData sat;
  sat.im_m = imag_part(sol.m);
  const Eig im = eig(sat.im_m);
  if (!(im.values(0) >= 1e-10))
    throw IllConditioned("compute_saturation: min eig Im M = " + std::to_string(im.values(0)));
  sat.sqrt_im_m = from_eig(im, [](double x) { return std::sqrt(x); });
  const Matrix inv_sqrt = from_eig(im, [](double x) { return 1.0 / std::sqrt(x); });
  const Matrix x = hermitian_part(inv_sqrt * real_part(sol.m) * inv_sqrt);
  const Eig ex = eig(x);
  sat.w = HermMatrix(from_eig(ex, [](double l) { return std::pow(1.0 + l * l, 0.25); }));
  sat.u = from_eig(ex, [](double l) { return Complex(l, -1.0) / std::sqrt(1.0 + l * l); });
  const Matrix w = sat.w.matrix();
  const Matrix q = sat.sqrt_im_m;
  const Matrix wq = w * q;
  const Matrix qw = q * w;
  sat.f = SuperOperator(
      n, [s, wq, qw](const Matrix& r) { return Matrix(wq * s(qw * r * wq) * qw); },
      [s, wq, qw](const Matrix& r) { return Matrix(wq * s(qw * r * wq) * qw); });

  // Perron pair: power iteration with PSD re-projection
  Matrix t = Matrix::Identity(n, n) / hs_norm(Matrix::Identity(n, n));
  double lambda = 0.0;
  int it = 0;
  for (; it < kPerronMaxIter; ++it) {
    const Matrix ft = sat.f(t);
    lambda = inner(t, ft).real();
    if (lambda <= 0.0) break;
    const double res = hs_norm(ft - lambda * t);
    if (res <= 1e-13 * lambda) break;
    Matrix next = project_psd(ft);
    const double nn = hs_norm(next);
    if (nn == 0.0) break;
    t = next / nn;
  }
  if (it == kPerronMaxIter)
    throw ConvergenceFailure("Perron iteration did not converge", 0.0, sol.zeta.eta());
  sat.perron = t;
  sat.sp_radius = std::max(lambda, 0.0);
  sat.perron_iterations = it;

  if (n <= kBruteForceCutoff) {
    const RealVector spec = dense_self_adjoint_spectrum(sat.f);
    const double top = spec(spec.size() - 1);
    double rest = 0.0;
    for (Eigen::Index i = 0; i + 1 < spec.size(); ++i) rest = std::max(rest, std::abs(spec(i)));
    sat.gap = top > 0.0 ? 1.0 - rest / top : 0.0;
  } else {
    const Vector pv = vec(sat.perron).normalized();
    LinearMap deflated = [&](const Vector& v) {
      Vector y = v - pv * pv.dot(v);
      Vector fy = vec(sat.f(unvec(y, n)));
      return Vector(fy - pv * pv.dot(fy));
    };
    Vector start = vec(random_hermitian(n, 3));
    start -= pv * pv.dot(start);
    const LanczosExtremes ex = lanczos_extremes(deflated, start, 80, 1e-10);
    const double rest = std::max(std::abs(ex.min), std::abs(ex.max));
    sat.gap = sat.sp_radius > 0.0 ? 1.0 - rest / sat.sp_radius : 0.0;
  }

  const Matrix polar = q * w * sat.u.adjoint() * w * q;
  sat.polar_residual = max_norm(sol.m - polar);
  const Matrix w_inv2 = from_eig(ex, [](double l) { return 1.0 / std::sqrt(1.0 + l * l); });
  sat.identity_residual =
      max_norm(w_inv2 - sol.zeta.eta() * w * sat.im_m * w - sat.f(w_inv2));
  return sat;
}

RadiusIdentityCheck spectral_radius_identity_check(const SaturationData& sat, const MdeSolution& sol,
                                                   double kappa) {
  RadiusIdentityCheck out;
  const Matrix w = sat.w.matrix();
  const Matrix w_inv2 = hermitian_function(w, [](double x) { return 1.0 / (x * x); });
  const Complex num = inner(sat.perron, w * sat.im_m * w);
  const Complex den = inner(sat.perron, w_inv2);
  out.predicted = 1.0 - (num / den).real() * sol.zeta.eta();
  out.relative_error = std::abs(sat.sp_radius - out.predicted) / sat.sp_radius;
  out.hypotheses_met = sat.sp_radius >= 0.5 && std::abs(sol.zeta.value()) <= 3.0 * (1.0 + kappa);
  return out;
}

std::vector<Matrix> sandwich_probes(int n, std::uint64_t seed) {
  std::vector<Matrix> probes{Matrix::Identity(n, n)};
  for (int x = 0; x < n; ++x) {
    Matrix e = Matrix::Zero(n, n);
    e(x, x) = 1.0;
    probes.push_back(e);
  }
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  for (int k = 0; k < 64; ++k) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(g(gen), g(gen));
    probes.push_back(v * v.adjoint());
  }
  return probes;
}

SandwichBounds fit_sandwich_bounds(const SuperOperator& t, std::uint64_t seed) {
  SandwichBounds b;
  b.gamma = std::numeric_limits<double>::infinity();
  b.Gamma = 0.0;
  for (const Matrix& r : sandwich_probes(t.dim(), seed)) {
    const double tr = avg_trace(r).real();
    const RealVector ev = hermitian_eigenvalues(t(r));
    b.gamma = std::min(b.gamma, ev(0) / tr);
    b.Gamma = std::max(b.Gamma, ev(ev.size() - 1) / tr);
  }
  b.gamma = std::max(b.gamma, 0.0);
  return b;
}

GapBounds spectral_gap_verify(const SuperOperator& t, double gamma, double Gamma, std::uint64_t probe_seed) {
  const int n = t.dim();
  if (n > kBruteForceCutoff) throw CutoffExceeded("spectral_gap_verify: N above brute-force cutoff");
  GapBounds gb;
  gb.gamma = gamma;
  gb.Gamma = Gamma;
  gb.theta_predicted = gamma > 0.0 ? std::pow(gamma, 6) / (2.0 * std::pow(Gamma, 4)) : 0.0;

  gb.hypotheses_hold = gamma > 0.0 && gamma <= Gamma;
  if (gb.hypotheses_hold) {
    for (const Matrix& r : sandwich_probes(n, probe_seed)) {
      const double tr = avg_trace(r).real();
      const RealVector ev = hermitian_eigenvalues(t(r));
      if (ev(0) < gamma * tr * (1.0 - 1e-9) - 1e-12 || ev(ev.size() - 1) > Gamma * tr * (1.0 + 1e-9) + 1e-12) {
        gb.hypotheses_hold = false;
        break;
      }
    }
  }
  if (!gb.hypotheses_hold) return gb;

  const DensePerron dp = dense_perron(t);
  const RealVector& spec = dp.spectrum;
  const Eigen::Index k = spec.size();
  gb.top_eigenvalue = spec(k - 1);
  double rest = 0.0;
  for (Eigen::Index i = 0; i + 1 < k; ++i) rest = std::max(rest, std::abs(spec(i)));
  gb.theta_observed = 1.0 - rest;
  gb.top_simple = k == 1 || spec(k - 2) < gb.top_eigenvalue - 1e-10;
  gb.spectrum_ok = std::abs(gb.top_eigenvalue - 1.0) <= 1e-8 && gb.theta_observed >= gb.theta_predicted - 1e-8;
  const RealVector tev = hermitian_eigenvalues(dp.eigenmatrix);
  gb.eigenmatrix_min = tev(0);
  gb.eigenmatrix_max = tev(tev.size() - 1);
  gb.eigenmatrix_ok =
      gb.eigenmatrix_min >= gamma / std::sqrt(Gamma) - 1e-8 && gb.eigenmatrix_max <= Gamma + 1e-8;
  return gb;
}

RotationInversion rotation_inversion_bound(const SuperOperator& rotation, const SuperOperator& t,
                                           double theta) {
  if (rotation.dim() != t.dim()) throw DimensionMismatch("rotation_inversion_bound: dimension");
  if (!(theta > 0.0)) throw InvalidArgument("rotation_inversion_bound: theta must be positive");
  RotationInversion out;
  out.lhs = dense_inverse_sp_norm(rotation - t);
  const DensePerron dp = dense_perron(t);
  const double t_norm = dp.spectrum.cwiseAbs().maxCoeff();
  const Complex overlap = inner(dp.eigenmatrix, rotation(dp.eigenmatrix));
  const double denom = std::abs(1.0 - t_norm * overlap);
  out.rhs_without_c = denom > 0.0 ? 1.0 / (theta * denom) : std::numeric_limits<double>::infinity();
  out.ratio = out.lhs / out.rhs_without_c;
  return out;
}

RotationInversion rotation_inversion_bound(const Matrix& u, const SuperOperator& t, double theta) {
  return rotation_inversion_bound(sandwich(u), t, theta);
}

LinearStability linear_stability_norm(const MdeSolution& sol, const SelfEnergy& s, double kappa) {
  const int n = sol.dim();
  LinearStability out;
  const SuperOperator l = stability_operator(sol.m, s);
  out.norm = n <= kBruteForceCutoff ? dense_inverse_sp_norm(l) : inverse_sp_norm_iterative(l);
  out.singular = !std::isfinite(out.norm);
  const double l_norm = n <= kBruteForceCutoff ? dense_sp_norm(l) : sp_norm_iterative(l, false);
  out.condition = l_norm * out.norm;
  out.far_regime = std::abs(sol.zeta.value()) >= 3.0 * (1.0 + kappa);
  if (out.far_regime) {
    const SuperOperator cms = compose(sandwich(sol.m), s.as_superoperator());
    out.cms_norm = n <= kBruteForceCutoff ? dense_sp_norm(cms) : sp_norm_iterative(cms, false);
    out.far_bound_ok = out.cms_norm <= 0.25 + 1e-12 && out.norm <= 4.0 / 3.0 + 1e-8;
  }
  return out;
}

DerivativeOperator derivative_operator(const MdeSolution& sol, const SelfEnergy& s) {
  const int n = sol.dim();
  const Matrix m = sol.m;
  const Matrix ms = m.adjoint();
  const SuperOperator l = stability_operator(m, s);
  DerivativeOperator d;
  d.m = m;
  if (n <= kBruteForceCutoff) {
    const Matrix dl = dense_superop(l);
    Eigen::FullPivLU<Matrix> lu(dl);
    if (!lu.isInvertible()) throw SingularMatrix("derivative_operator: stability operator is singular");
    auto lu_ptr = std::make_shared<Eigen::PartialPivLU<Matrix>>(dl);
    auto lua_ptr = std::make_shared<Eigen::PartialPivLU<Matrix>>(Matrix(dl.adjoint()));
    d.z = SuperOperator(
        n,
        [=](const Matrix& r) {
          const Matrix y = unvec(lu_ptr->solve(vec(m * r)), n);
          return Matrix(m * s(y) * m);
        },
        [=](const Matrix& r) {
          const Matrix y = unvec(lua_ptr->solve(vec(s(ms * r * ms))), n);
          return Matrix(ms * y);
        });
    return d;
  }
  auto solve = [n](const SuperOperator& op, const Matrix& rhs) {
    LinearMap f = [&op, n](const Vector& v) { return vec(op(unvec(v, n))); };
    GmresResult g = gmres(f, vec(rhs), 1e-13, 2000, 80);
    if (!g.converged && g.relative_residual > 1e-8)
      throw SingularMatrix("derivative_operator: stability operator solve failed");
    return unvec(g.x, n);
  };
  const SuperOperator la = l.adjoint();
  d.z = SuperOperator(
      n, [=](const Matrix& r) { return Matrix(m * s(solve(l, m * r)) * m); },
      [=](const Matrix& r) { return Matrix(ms * solve(la, s(ms * r * ms))); });
  return d;
}

RealMatrix derivative_envelope(const DerivativeOperator& d) {
  const int n = d.z.dim();
  const Matrix dz = dense_superop(d.z);
  RealMatrix env(n, n);
  for (int k = 0; k < n * n; ++k) env(k % n, k / n) = dz.row(k).cwiseAbs().sum();
  return env;
}

double derivative_max_norm(const DerivativeOperator& d) {
  const int n = d.z.dim();
  const SuperOperator full(
      n, [&d](const Matrix& r) { return d.derivative(r); },
      [&d](const Matrix& r) { return Matrix(d.z.apply_adjoint(r) + d.m.adjoint() * r); });
  const Matrix dense = dense_superop(full);
  return dense.cwiseAbs().rowwise().sum().maxCoeff();
}

DecayReport derivative_decay_report(const DerivativeOperator& d, const IndexMetric& metric,
                                    const DecayProfile& profile) {
  const int n = d.z.dim();
  std::vector<Matrix> probes{Matrix::Identity(n, n), Matrix::Ones(n, n)};
  std::mt19937_64 gen(0xdec);
  std::bernoulli_distribution coin;
  for (int k = 0; k < 3; ++k) {
    Matrix r(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) r(x, y) = coin(gen) ? 1.0 : -1.0;
    probes.push_back(r);
  }
  DecayReport rep;
  for (const Matrix& r : probes) rep.worst = std::max(rep.worst, decay_norm(d.z(r), metric, profile));
  rep.passed = rep.worst <= 1.0 + 1e-12;
  return rep;
}

StabilityReport stability_report(const MdeSolution& sol, const SelfEnergy& s, double kappa) {
  StabilityReport rep;
  const SaturationData sat = compute_saturation(sol, s);
  rep.sp_radius = sat.sp_radius;
  rep.gap_observed = sat.gap;
  if (sat.sp_radius > 0.0) {
    const SuperOperator normalized = Complex(1.0 / sat.sp_radius) * sat.f;
    const SandwichBounds b = fit_sandwich_bounds(normalized);
    rep.gap_predicted = b.gamma > 0.0 ? std::pow(b.gamma, 6) / (2.0 * std::pow(b.Gamma, 4)) : 0.0;
  }
  rep.stability_norm = linear_stability_norm(sol, s, kappa).norm;
  rep.polar_residual = sat.polar_residual;
  rep.identity_residual = sat.identity_residual;
  return rep;
}

nlohmann::json to_json(const StabilityReport& r) {
  return {{"sp_radius", r.sp_radius},           {"gap_predicted", r.gap_predicted},
          {"gap_observed", r.gap_observed},     {"stability_norm", r.stability_norm},
          {"polar_residual", r.polar_residual}, {"identity_residual", r.identity_residual}};
}

}  // namespace mdelab
