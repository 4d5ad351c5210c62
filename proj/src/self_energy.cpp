#include "mdelab/self_energy.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mdelab/error.hpp"

namespace mdelab {

namespace {

bool is_circulant(const RealMatrix& s) {
  const Eigen::Index n = s.rows();
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y)
      if (s(x, y) != s(0, ((y - x) % n + n) % n)) return false;
  return true;
}

}  // namespace

SelfEnergy SelfEnergy::mean_field(int n, double scale) {
  if (n <= 0) throw InvalidArgument("SelfEnergy: dimension must be positive");
  if (!(scale >= 0.0) || !std::isfinite(scale))
    throw InvalidArgument("SelfEnergy: mean-field scale must be nonnegative");
  SelfEnergy s;
  s.n_ = n;
  s.v_ = MeanField{scale};
  return s;
}

SelfEnergy SelfEnergy::variance_profile(const RealMatrix& prof, Symmetry beta) {
  if (prof.rows() != prof.cols() || prof.rows() == 0)
    throw DimensionMismatch("variance profile must be square");
  if (!prof.allFinite() || prof.minCoeff() < 0.0)
    throw InvalidArgument("variance profile entries must be finite and nonnegative");
  if ((prof - prof.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw InvalidArgument("variance profile must be symmetric");
  SelfEnergy s;
  s.n_ = static_cast<int>(prof.rows());
  s.v_ = VarianceProfile{prof, beta};
  return s;
}

SelfEnergy SelfEnergy::kernel(const CovarianceKernel& k) {
  if (k.dim() <= 0) throw InvalidArgument("SelfEnergy: empty kernel");
  SelfEnergy s;
  s.n_ = k.dim();
  s.v_ = Kernel{k};
  return s;
}

Matrix SelfEnergy::operator()(const Matrix& r) const {
  if (r.rows() != n_ || r.cols() != n_) throw DimensionMismatch("apply_self_energy: dimension");
  const double inv_n = 1.0 / n_;
  if (const auto* mf = std::get_if<MeanField>(&v_)) {
    return Matrix::Identity(n_, n_) * (mf->scale * avg_trace(r));
  }
  if (const auto* vp = std::get_if<VarianceProfile>(&v_)) {
    Matrix out = Matrix::Zero(n_, n_);
    const Vector diag = r.diagonal();
    out.diagonal() = (vp->s.cast<Complex>() * diag) * inv_n;
    if (vp->beta == Symmetry::real) out += (vp->s.cast<Complex>().cwiseProduct(r.transpose())) * inv_n;
    return out;
  }
  return std::get<Kernel>(v_).kernel.contract(r);
}

SuperOperator SelfEnergy::as_superoperator() const {
  SelfEnergy self = *this;
  auto f = [self](const Matrix& r) { return self(r); };
  return SuperOperator(n_, f, f);
}

bool SelfEnergy::translation_invariant() const {
  if (std::holds_alternative<MeanField>(v_)) return true;
  if (const auto* vp = std::get_if<VarianceProfile>(&v_)) return is_circulant(vp->s);
  return std::get<Kernel>(v_).kernel.translation_invariant();
}

Vector SelfEnergy::apply_circulant(const Vector& mu) const {
  if (mu.size() != n_) throw DimensionMismatch("apply_circulant: dimension");
  if (const auto* mf = std::get_if<MeanField>(&v_)) {
    Vector out = Vector::Zero(n_);
    out(0) = mf->scale * mu(0);
    return out;
  }
  if (const auto* vp = std::get_if<VarianceProfile>(&v_)) {
    if (!is_circulant(vp->s)) throw InvalidArgument("apply_circulant: profile is not circulant");
    Vector out = Vector::Zero(n_);
    out(0) = mu(0) * (vp->s.row(0).sum() / n_);
    if (vp->beta == Symmetry::real)
      for (int p = 0; p < n_; ++p) out(p) += vp->s(0, p) * mu((n_ - p) % n_) / static_cast<double>(n_);
    return out;
  }
  return std::get<Kernel>(v_).kernel.contract_circulant(mu);
}

Matrix apply_self_energy(const SelfEnergy& s, const Matrix& r) { return s(r); }

FlatnessBounds flatness_bounds(const SelfEnergy& s, std::uint64_t seed) {
  const int n = s.dim();
  FlatnessBounds fb;
  fb.p1 = std::numeric_limits<double>::infinity();
  fb.P1 = 0.0;
  auto probe = [&](const Matrix& r) {
    const double tr = avg_trace(r).real();
    const RealVector ev = hermitian_eigenvalues(s(r));
    fb.p1 = std::min(fb.p1, ev(0) / tr);
    fb.P1 = std::max(fb.P1, ev(ev.size() - 1) / tr);
  };
  probe(Matrix::Identity(n, n));
  for (int x = 0; x < n; ++x) {
    Matrix e = Matrix::Zero(n, n);
    e(x, x) = 1.0;
    probe(e);
  }
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  for (int k = 0; k < 64; ++k) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(g(gen), g(gen));
    probe(v * v.adjoint());
  }
  if (fb.p1 <= 1e-13 * std::max(fb.P1, 1e-300)) fb.p1 = 0.0;
  fb.flat = fb.p1 > 0.0;
  return fb;
}

double self_energy_op_norm(const SelfEnergy& s) {
  // positive maps attain their operator norm at the identity (Russo-Dye)
  return op_norm(s(Matrix::Identity(s.dim(), s.dim())));
}

SelfEnergyNorms self_energy_norms(const SelfEnergy& s) {
  SelfEnergyNorms out;
  out.op_norm = self_energy_op_norm(s);
  const SuperOperator t = s.as_superoperator();
  out.sp_norm = s.dim() <= kBruteForceCutoff ? dense_sp_norm(t) : sp_norm_iterative(t, true);
  out.ordering_holds = out.sp_norm <= out.op_norm * (1.0 + 1e-10) + 1e-14;
  return out;
}

DecayCheck decay_check(const SelfEnergy& s, const IndexMetric& metric, const DecayProfile& profile) {
  const int n = s.dim();
  if (metric.dim() != n) throw DimensionMismatch("decay_check: metric dimension");
  std::vector<Matrix> probes;
  probes.push_back(Matrix::Identity(n, n));
  probes.push_back(Matrix::Ones(n, n));
  std::mt19937_64 gen(0xdeca7);
  std::bernoulli_distribution coin;
  for (int k = 0; k < 3; ++k) {
    RealMatrix signs(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x <= y; ++x) signs(x, y) = signs(y, x) = coin(gen) ? 1.0 : -1.0;
    probes.push_back(signs.cast<Complex>());
  }
  DecayCheck out;
  for (const Matrix& r : probes) out.worst_norm = std::max(out.worst_norm, decay_norm(s(r), metric, profile));
  out.passed = out.worst_norm <= 1.0 + 1e-12;
  return out;
}

}  // namespace mdelab
