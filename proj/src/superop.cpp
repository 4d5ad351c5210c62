#include "mdelab/superop.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mdelab/error.hpp"
#include "mdelab/krylov.hpp"

namespace mdelab {

SuperOperator::SuperOperator(int n, Map apply, Map adjoint)
    : n_(n), apply_(std::move(apply)), adjoint_(std::move(adjoint)) {}

SuperOperator SuperOperator::identity(int n) {
  auto id = [](const Matrix& r) { return r; };
  return SuperOperator(n, id, id);
}

SuperOperator SuperOperator::zero(int n) {
  auto z = [](const Matrix& r) { return Matrix(Matrix::Zero(r.rows(), r.cols())); };
  return SuperOperator(n, z, z);
}

Matrix SuperOperator::operator()(const Matrix& r) const {
  if (r.rows() != n_ || r.cols() != n_) throw DimensionMismatch("SuperOperator: input dimension");
  return apply_(r);
}

Matrix SuperOperator::apply_adjoint(const Matrix& r) const {
  if (r.rows() != n_ || r.cols() != n_) throw DimensionMismatch("SuperOperator: input dimension");
  return adjoint_(r);
}

SuperOperator SuperOperator::adjoint() const { return SuperOperator(n_, adjoint_, apply_); }

SuperOperator compose(const SuperOperator& a, const SuperOperator& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("compose: dimensions differ");
  return SuperOperator(
      a.dim(), [a, b](const Matrix& r) { return a(b(r)); },
      [a, b](const Matrix& r) { return b.apply_adjoint(a.apply_adjoint(r)); });
}

SuperOperator operator+(const SuperOperator& a, const SuperOperator& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("operator+: dimensions differ");
  return SuperOperator(
      a.dim(), [a, b](const Matrix& r) { return Matrix(a(r) + b(r)); },
      [a, b](const Matrix& r) { return Matrix(a.apply_adjoint(r) + b.apply_adjoint(r)); });
}

SuperOperator operator-(const SuperOperator& a, const SuperOperator& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("operator-: dimensions differ");
  return SuperOperator(
      a.dim(), [a, b](const Matrix& r) { return Matrix(a(r) - b(r)); },
      [a, b](const Matrix& r) { return Matrix(a.apply_adjoint(r) - b.apply_adjoint(r)); });
}

SuperOperator operator*(Complex c, const SuperOperator& a) {
  return SuperOperator(
      a.dim(), [a, c](const Matrix& r) { return Matrix(c * a(r)); },
      [a, c](const Matrix& r) { return Matrix(std::conj(c) * a.apply_adjoint(r)); });
}

SuperOperator sandwich(const Matrix& r) {
  if (r.rows() != r.cols()) throw DimensionMismatch("sandwich: matrix is not square");
  const Matrix rs = r.adjoint();
  return SuperOperator(
      static_cast<int>(r.rows()), [r](const Matrix& t) { return Matrix(r * t * r); },
      [rs](const Matrix& t) { return Matrix(rs * t * rs); });
}

SuperOperator conjugate_sandwich(const Matrix& r) {
  if (r.rows() != r.cols()) throw DimensionMismatch("conjugate_sandwich: matrix is not square");
  const Matrix rs = r.adjoint();
  return SuperOperator(
      static_cast<int>(r.rows()), [r, rs](const Matrix& t) { return Matrix(rs * t * r); },
      [r, rs](const Matrix& t) { return Matrix(r * t * rs); });
}

SuperOperator inverse_sandwich(const Matrix& r) {
  if (r.rows() != r.cols()) throw DimensionMismatch("inverse_sandwich: matrix is not square");
  Eigen::FullPivLU<Matrix> lu(r);
  if (!lu.isInvertible()) throw SingularMatrix("inverse_sandwich: matrix is singular");
  return sandwich(lu.inverse());
}

Vector vec(const Matrix& r) { return Eigen::Map<const Vector>(r.data(), r.size()); }

Matrix unvec(const Vector& v, int n) { return Eigen::Map<const Matrix>(v.data(), n, n); }

Matrix dense_superop(const SuperOperator& t) {
  const int n = t.dim();
  if (n > kBruteForceCutoff)
    throw CutoffExceeded("dense_superop: N = " + std::to_string(n) + " above brute-force cutoff");
  const int n2 = n * n;
  Matrix dense(n2, n2);
  Matrix e = Matrix::Zero(n, n);
  for (int k = 0; k < n2; ++k) {
    e(k % n, k / n) = 1.0;
    dense.col(k) = vec(t(e));
    e(k % n, k / n) = 0.0;
  }
  return dense;
}

double dense_sp_norm(const SuperOperator& t) {
  Eigen::BDCSVD<Matrix> svd(dense_superop(t));
  return svd.singularValues()(0);
}

double dense_inverse_sp_norm(const SuperOperator& t) {
  Eigen::BDCSVD<Matrix> svd(dense_superop(t));
  const RealVector& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin <= std::numeric_limits<double>::epsilon() * sv(0)) return std::numeric_limits<double>::infinity();
  return 1.0 / smin;
}

RealVector dense_self_adjoint_spectrum(const SuperOperator& t) {
  Matrix d = dense_superop(t);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double sp_norm_iterative(const SuperOperator& t, bool self_adjoint) {
  const int n = t.dim();
  Vector start = vec(identity(n)) + 0.1 * random_vector(n * n, 7);
  if (self_adjoint) {
    LinearMap op = [&t, n](const Vector& v) { return vec(t(unvec(v, n))); };
    const LanczosExtremes ex = lanczos_extremes(op, start, 120, 1e-13);
    return std::max(std::abs(ex.min), std::abs(ex.max));
  }
  LinearMap op = [&t, n](const Vector& v) {
    return vec(t.apply_adjoint(t(unvec(v, n))));
  };
  const LanczosExtremes ex = lanczos_extremes(op, start, 120, 1e-13);
  return std::sqrt(std::max(ex.max, 0.0));
}

double inverse_sp_norm_iterative(const SuperOperator& t, double tol) {
  // inverse power iteration on (T*T)^{-1} with GMRES inner solves
  const int n = t.dim();
  LinearMap fwd = [&t, n](const Vector& v) { return vec(t(unvec(v, n))); };
  LinearMap adj = [&t, n](const Vector& v) { return vec(t.apply_adjoint(unvec(v, n))); };
  Vector x = (vec(identity(n)) + 0.3 * random_vector(n * n, 11)).normalized();
  double est = 0.0;
  for (int it = 0; it < 500; ++it) {
    GmresResult y = gmres(fwd, x, 1e-14, 2000, 80);
    GmresResult z = gmres(adj, y.x, 1e-14, 2000, 80);
    if (!y.converged && y.relative_residual > 1e-8) return std::numeric_limits<double>::infinity();
    const double nz = z.x.norm();
    const double next = std::sqrt(nz);
    x = z.x / nz;
    if (std::abs(next - est) <= tol * next) return next;
    est = next;
  }
  return est;
}

double adjoint_defect(const SuperOperator& t, unsigned seed, int probes) {
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const Matrix r = random_matrix(t.dim(), seed + 2 * p);
    const Matrix q = random_matrix(t.dim(), seed + 2 * p + 1);
    const Complex lhs = inner(r, t(q));
    const Complex rhs = inner(t.apply_adjoint(r), q);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  return worst;
}

double linearity_defect(const SuperOperator& t, unsigned seed, int probes) {
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const Matrix r = random_matrix(t.dim(), seed + 2 * p);
    const Matrix q = random_matrix(t.dim(), seed + 2 * p + 1);
    const Complex a(0.7, -1.3);
    const Matrix lhs = t(a * r + q);
    const Matrix rhs = a * t(r) + t(q);
    worst = std::max(worst, max_norm(lhs - rhs) / std::max(1.0, max_norm(rhs)));
  }
  return worst;
}

Matrix random_matrix(int n, unsigned long long seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) m(x, y) = Complex(g(gen), g(gen));
  return m;
}

Matrix random_hermitian(int n, unsigned long long seed) {
  return HermMatrix(random_matrix(n, seed)).matrix();
}

Vector random_vector(int n, unsigned long long seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(g(gen), g(gen));
  return v;
}

}  // namespace mdelab
