#include "mdelab/kernel.hpp"

#include <cmath>
#include <random>

#include "mdelab/error.hpp"

namespace mdelab {

namespace {

constexpr double kSymmetryTol = 1e-12;

struct Dof {
  int x, y;
  bool imag;
};

std::vector<Dof> real_dofs(int n, Symmetry sym) {
  std::vector<Dof> dofs;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x <= y; ++x) {
      dofs.push_back({x, y, false});
      if (sym == Symmetry::complex && x < y) dofs.push_back({x, y, true});
    }
  return dofs;
}

RealMatrix assemble_covariance(int n, Symmetry sym,
                               const std::function<Complex(int, int, int, int)>& kappa) {
  if (n > kDenseCovarianceCutoff)
    throw CutoffExceeded("real covariance: N above " + std::to_string(kDenseCovarianceCutoff));
  const std::vector<Dof> dofs = real_dofs(n, sym);
  const int m = static_cast<int>(dofs.size());
  RealMatrix cov(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i <= j; ++i) {
      const Dof& a = dofs[i];
      const Dof& b = dofs[j];
      const Complex ww = kappa(a.x, a.y, b.x, b.y);   // E[w_a w_b]
      const Complex wwc = kappa(a.x, a.y, b.y, b.x);  // E[w_a conj w_b]
      double c;
      if (!a.imag && !b.imag) {
        c = 0.5 * (ww + wwc).real();
      } else if (a.imag && b.imag) {
        c = 0.5 * (wwc - ww).real();
      } else if (!a.imag && b.imag) {
        c = 0.5 * (ww - wwc).imag();
      } else {
        c = 0.5 * (ww + wwc).imag();
      }
      cov(i, j) = cov(j, i) = c;
    }
  return cov;
}

}  // namespace

OffsetTable OffsetTable::zeros(int range) {
  OffsetTable t;
  t.range = range;
  t.values = Matrix::Zero(2 * range + 1, 2 * range + 1);
  return t;
}

CovarianceKernel CovarianceKernel::zero(int n, Symmetry sym) {
  if (n <= 0) throw InvalidArgument("CovarianceKernel: dimension must be positive");
  CovarianceKernel k;
  k.n_ = n;
  k.sym_ = sym;
  k.dir_ = OffsetTable::zeros(0);
  k.exc_ = OffsetTable::zeros(0);
  return k;
}

CovarianceKernel CovarianceKernel::mean_field(int n, Symmetry sym, double scale) {
  if (!(scale >= 0.0)) throw InvalidArgument("mean_field kernel: scale must be nonnegative");
  CovarianceKernel k = zero(n, sym);
  k.dir_.ref(0, 0) = scale;
  if (sym == Symmetry::real) k.exc_.ref(0, 0) = scale;
  RealMatrix phi(1, 1);
  phi(0, 0) = std::sqrt(scale);
  k.filter_ = phi;
  return k;
}

CovarianceKernel CovarianceKernel::moving_average(int n, Symmetry sym, const RealMatrix& filter) {
  if (filter.rows() != filter.cols() || filter.rows() % 2 == 0)
    throw InvalidSpec("moving_average: filter must be square with odd side");
  if (!filter.allFinite()) throw InvalidSpec("moving_average: non-finite filter entry");
  const int a = static_cast<int>(filter.rows()) / 2;
  const int r = 2 * a;
  if (n < 2 * r + 1)
    throw InvalidSpec("moving_average: N = " + std::to_string(n) + " too small for filter radius " +
                      std::to_string(a));
  auto phi = [&](int i, int j) -> double {
    if (i < -a || i > a || j < -a || j > a) return 0.0;
    return filter(i + a, j + a);
  };
  // c(p,q) = E[Y_xu conj Y_{x+p,u+q}] = sum phi(i,j) phi(i-p, j-q)
  RealMatrix c = RealMatrix::Zero(2 * r + 1, 2 * r + 1);
  for (int p = -r; p <= r; ++p)
    for (int q = -r; q <= r; ++q) {
      double s = 0.0;
      for (int i = -a; i <= a; ++i)
        for (int j = -a; j <= a; ++j) s += phi(i, j) * phi(i - p, j - q);
      c(p + r, q + r) = s;
    }
  CovarianceKernel k = zero(n, sym);
  k.dir_ = OffsetTable::zeros(r);
  k.exc_ = OffsetTable::zeros(sym == Symmetry::real ? r : 0);
  for (int p = -r; p <= r; ++p)
    for (int q = -r; q <= r; ++q) {
      const double d = 0.5 * (c(p + r, q + r) + c(q + r, p + r));
      k.dir_.ref(p, q) = d;
      if (sym == Symmetry::real) k.exc_.ref(p, q) = d;
    }
  k.filter_ = filter;
  return k;
}

CovarianceKernel CovarianceKernel::translation_invariant(int n, Symmetry sym, OffsetTable direct,
                                                         OffsetTable exchange) {
  CovarianceKernel k = zero(n, sym);
  const int r = std::max(direct.range, exchange.range);
  if (n < 2 * r + 1)
    throw InvalidSpec("translation_invariant kernel: N too small for range " + std::to_string(r));
  k.dir_ = std::move(direct);
  k.exc_ = std::move(exchange);
  k.check_offset_symmetry();
  return k;
}

CovarianceKernel CovarianceKernel::from_factors(int n, Symmetry sym, std::vector<Matrix> factors) {
  CovarianceKernel k = zero(n, sym);
  return k.plus_factors(factors);
}

CovarianceKernel CovarianceKernel::plus_factors(const std::vector<Matrix>& factors) const {
  CovarianceKernel k = *this;
  for (const Matrix& b : factors) {
    if (b.rows() != n_ || b.cols() != n_) throw DimensionMismatch("kernel factor dimension");
    if (!b.allFinite()) throw InvalidSpec("kernel factor: non-finite entry");
    if (max_norm(b - b.adjoint()) > 1e-12 * std::max(1.0, max_norm(b)))
      throw InvalidSpec("kernel factor is not Hermitian");
    if (sym_ == Symmetry::real && b.imag().cwiseAbs().maxCoeff() > 0.0)
      throw InvalidSpec("kernel factor must be real for beta = 1");
    k.factors_.push_back(HermMatrix(b).matrix());
  }
  return k;
}

CovarianceKernel CovarianceKernel::from_function(
    int n, Symmetry sym, const std::function<Complex(int, int, int, int)>& kappa) {
  const RealMatrix cov = assemble_covariance(n, sym, kappa);
  CovarianceKernel k = from_factors(n, sym, factors_from_real_covariance(n, sym, cov));
  // the factorization reproduces kappa only if kappa is a Hermitian covariance
  std::mt19937_64 gen(0x5eed);
  std::uniform_int_distribution<int> idx(0, n - 1);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(kappa(i, i, i, i)));
  const int probes = n <= 8 ? n * n * n * n : 4096;
  for (int t = 0; t < probes; ++t) {
    int x, u, v, y;
    if (n <= 8) {
      x = t % n;
      u = (t / n) % n;
      v = (t / (n * n)) % n;
      y = t / (n * n * n);
    } else {
      x = idx(gen);
      u = idx(gen);
      v = idx(gen);
      y = idx(gen);
    }
    if (std::abs(k(x, u, v, y) - kappa(x, u, v, y)) > 1e-8 * std::max(1.0, scale))
      throw InvalidSpec("kernel is not the covariance of a Hermitian matrix (symmetry mismatch at " +
                        std::to_string(x) + "," + std::to_string(u) + ";" + std::to_string(v) +
                        "," + std::to_string(y) + ")");
  }
  return k;
}

void CovarianceKernel::check_offset_symmetry() const {
  auto fail = [](const std::string& what) { throw InvalidSpec("kernel offsets: " + what); };
  for (int p = -dir_.range; p <= dir_.range; ++p)
    for (int q = -dir_.range; q <= dir_.range; ++q) {
      const Complex d = dir_.at(p, q);
      if (std::abs(d - dir_.at(-q, -p)) > kSymmetryTol) fail("direct table violates D(p,q) = D(-q,-p)");
      if (std::abs(std::conj(d) - dir_.at(q, p)) > kSymmetryTol)
        fail("direct table violates conj D(p,q) = D(q,p)");
    }
  for (int p = -exc_.range; p <= exc_.range; ++p)
    for (int q = -exc_.range; q <= exc_.range; ++q) {
      const Complex e = exc_.at(p, q);
      if (std::abs(e - exc_.at(-p, -q)) > kSymmetryTol) fail("exchange table violates X(p,q) = X(-p,-q)");
      if (std::abs(std::conj(e) - exc_.at(q, p)) > kSymmetryTol)
        fail("exchange table violates conj X(p,q) = X(q,p)");
    }
  if (sym_ == Symmetry::real) {
    const int r = std::max(dir_.range, exc_.range);
    for (int p = -r; p <= r; ++p)
      for (int q = -r; q <= r; ++q) {
        if (std::abs(dir_.at(p, q) - exc_.at(p, q)) > kSymmetryTol)
          fail("beta = 1 requires equal direct and exchange tables");
        if (std::abs(dir_.at(p, q).imag()) > kSymmetryTol) fail("beta = 1 requires a real kernel");
      }
  }
}

int CovarianceKernel::range() const {
  int r = 0;
  auto scan = [&r](const OffsetTable& t) {
    for (int p = -t.range; p <= t.range; ++p)
      for (int q = -t.range; q <= t.range; ++q)
        if (t.at(p, q) != 0.0) r = std::max({r, std::abs(p), std::abs(q)});
  };
  scan(dir_);
  scan(exc_);
  for (const Matrix& b : factors_)
    for (int y = 0; y < n_; ++y)
      for (int x = 0; x < n_; ++x)
        if (b(x, y) != 0.0) r = std::max(r, std::min(std::abs(x - y), n_ - std::abs(x - y)));
  return r;
}

bool CovarianceKernel::is_zero() const {
  if (!dir_.is_zero() || !exc_.is_zero()) return false;
  for (const Matrix& b : factors_)
    if (b.cwiseAbs().maxCoeff() > 0.0) return false;
  return true;
}

Complex CovarianceKernel::operator()(int x, int u, int v, int y) const {
  Complex k = dir_.at(wrap_offset(y - x, n_), wrap_offset(v - u, n_)) +
              exc_.at(wrap_offset(v - x, n_), wrap_offset(y - u, n_));
  for (const Matrix& b : factors_) k += b(x, u) * b(v, y);
  return k;
}

Matrix CovarianceKernel::contract(const Matrix& r) const {
  if (r.rows() != n_ || r.cols() != n_) throw DimensionMismatch("kernel contract: dimension");
  const int n = n_;
  Matrix s = Matrix::Zero(n, n);
  const int rd = dir_.range;
  if (!dir_.is_zero()) {
    Vector t = Vector::Zero(2 * rd + 1);
    for (int q = -rd; q <= rd; ++q) {
      Complex acc = 0.0;
      for (int u = 0; u < n; ++u) acc += r(u, ((u + q) % n + n) % n);
      t(q + rd) = acc / static_cast<double>(n);
    }
    for (int p = -rd; p <= rd; ++p) {
      Complex sigma = 0.0;
      for (int q = -rd; q <= rd; ++q) sigma += dir_.at(p, q) * t(q + rd);
      if (sigma == 0.0) continue;
      for (int x = 0; x < n; ++x) s(x, ((x + p) % n + n) % n) += sigma;
    }
  }
  const int rx = exc_.range;
  if (!exc_.is_zero()) {
    const double inv_n = 1.0 / n;
    for (int pp = -rx; pp <= rx; ++pp)
      for (int qq = -rx; qq <= rx; ++qq) {
        const Complex e = exc_.at(pp, qq) * inv_n;
        if (e == 0.0) continue;
        for (int y = 0; y < n; ++y) {
          const int u = ((y - qq) % n + n) % n;
          for (int x = 0; x < n; ++x) s(x, y) += e * r(u, ((x + pp) % n + n) % n);
        }
      }
  }
  if (!factors_.empty()) {
    Matrix acc = Matrix::Zero(n, n);
    for (const Matrix& b : factors_) acc.noalias() += b * r * b;
    s += acc / static_cast<double>(n);
  }
  return s;
}

Vector CovarianceKernel::contract_circulant(const Vector& mu) const {
  if (!translation_invariant()) throw InvalidArgument("contract_circulant: kernel has a factor part");
  const int n = n_;
  if (mu.size() != n) throw DimensionMismatch("contract_circulant: dimension");
  Vector out = Vector::Zero(n);
  const int rd = dir_.range;
  for (int p = -rd; p <= rd; ++p) {
    Complex sigma = 0.0;
    for (int q = -rd; q <= rd; ++q) sigma += dir_.at(p, q) * mu(((q % n) + n) % n);
    out(((p % n) + n) % n) += sigma;
  }
  const int rx = exc_.range;
  if (!exc_.is_zero()) {
    for (int pp = -rx; pp <= rx; ++pp)
      for (int qq = -rx; qq <= rx; ++qq) {
        const Complex e = exc_.at(pp, qq) / static_cast<double>(n);
        if (e == 0.0) continue;
        for (int p = 0; p < n; ++p) out(p) += e * mu((((pp + qq - p) % n) + n) % n);
      }
  }
  return out;
}

RealMatrix CovarianceKernel::real_covariance() const {
  return assemble_covariance(n_, sym_, [this](int x, int u, int v, int y) { return (*this)(x, u, v, y); });
}

std::vector<Matrix> CovarianceKernel::factorize_translation_invariant() const {
  CovarianceKernel ti = *this;
  ti.factors_.clear();
  return factors_from_real_covariance(n_, sym_, ti.real_covariance());
}

double CovarianceKernel::row_magnitude() const {
  const int n = n_;
  if (n <= kDenseCovarianceCutoff) {
    double best = 0.0;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        double s = 0.0;
        for (int u = 0; u < n; ++u)
          for (int v = 0; v < n; ++v) s += std::abs((*this)(x, u, v, y));
        best = std::max(best, s / n);
      }
    return best;
  }
  // upper bound from the tables
  double d = 0.0;
  for (int p = -dir_.range; p <= dir_.range; ++p) {
    double row = 0.0;
    for (int q = -dir_.range; q <= dir_.range; ++q) row += std::abs(dir_.at(p, q));
    d = std::max(d, row);
  }
  return d + exc_.values.cwiseAbs().sum() / n;
}

std::vector<Matrix> factors_from_real_covariance(int n, Symmetry sym, const RealMatrix& cov) {
  const std::vector<Dof> dofs = real_dofs(n, sym);
  if (cov.rows() != static_cast<Eigen::Index>(dofs.size()))
    throw DimensionMismatch("real covariance: size does not match degrees of freedom");
  std::vector<Matrix> out;
  if (cov.cwiseAbs().maxCoeff() == 0.0) return out;
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(cov);
  const RealVector& lam = es.eigenvalues();
  const double top = std::max(lam(lam.size() - 1), 0.0);
  if (lam(0) < -1e-10 * std::max(1.0, top))
    throw InvalidSpec("kernel covariance is not positive semidefinite (min eigenvalue " +
                      std::to_string(lam(0)) + ")");
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    if (lam(k) <= 1e-12 * top) continue;
    const RealVector xi = std::sqrt(lam(k)) * es.eigenvectors().col(k);
    Matrix b = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      const Dof& d = dofs[i];
      if (d.imag) {
        b(d.x, d.y) += Complex(0.0, xi(i));
      } else {
        b(d.x, d.y) += xi(i);
      }
    }
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < y; ++x) b(y, x) = std::conj(b(x, y));
    out.push_back(b);
  }
  return out;
}

}  // namespace mdelab
