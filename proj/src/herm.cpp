#include "mdelab/herm.hpp"

#include <algorithm>
#include <cmath>

#include "mdelab/error.hpp"
#include "mdelab/krylov.hpp"

namespace mdelab {

namespace {

// Dense SVD up to this size, Krylov iteration on R*R above.
constexpr int kSvdCutoff = 512;

double op_norm_power(const Matrix& r) {
  const int n = static_cast<int>(r.cols());
  Vector v = Vector::Constant(n, Complex(1.0, 0.0));
  // deterministic non-symmetric start so we do not sit on a null direction
  for (int i = 0; i < n; ++i) v(i) += Complex(0.01 * std::sin(1.0 + i), 0.01 * std::cos(2.0 * i));
  const LanczosExtremes ext =
      lanczos_extremes([&](const Vector& x) -> Vector { return r.adjoint() * (r * x); }, v, 300, 1e-13);
  return std::sqrt(std::max(ext.max, 0.0));
}

}  // namespace

HermMatrix::HermMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("HermMatrix: matrix is not square");
  if (!all_finite(m)) throw InvalidArgument("HermMatrix: non-finite entry");
  const Eigen::Index n = m.rows();
  m_.resize(n, n);
  for (Eigen::Index y = 0; y < n; ++y) {
    for (Eigen::Index x = 0; x < y; ++x) {
      m_(x, y) = m(x, y);
      m_(y, x) = std::conj(m(x, y));
    }
    m_(y, y) = Complex(m(y, y).real(), 0.0);
  }
}

HermMatrix::HermMatrix(const RealMatrix& m) : HermMatrix(Matrix(m.cast<Complex>())) {}

HermMatrix HermMatrix::zero(int n) { return HermMatrix(Matrix(Matrix::Zero(n, n))); }
HermMatrix HermMatrix::identity(int n) { return HermMatrix(Matrix(Matrix::Identity(n, n))); }
HermMatrix HermMatrix::diagonal(const RealVector& d) {
  return HermMatrix(Matrix(d.cast<Complex>().asDiagonal()));
}

Complex avg_trace(const Matrix& r) {
  if (r.rows() != r.cols()) throw DimensionMismatch("avg_trace: matrix is not square");
  return r.trace() / static_cast<double>(r.rows());
}

Complex inner(const Matrix& r, const Matrix& t) {
  if (r.rows() != t.rows() || r.cols() != t.cols()) throw DimensionMismatch("inner: shapes differ");
  // tr(R* T) = sum conj(r_xy) t_xy
  return (r.conjugate().cwiseProduct(t)).sum() / static_cast<double>(r.rows());
}

double matrix_norm(const Matrix& r, NormKind kind) {
  if (r.size() == 0) return 0.0;
  switch (kind) {
    case NormKind::max:
      return r.cwiseAbs().maxCoeff();
    case NormKind::hs:
      return std::sqrt(r.cwiseAbs2().sum() / static_cast<double>(r.rows()));
    case NormKind::one_vee_inf: {
      const RealMatrix a = r.cwiseAbs();
      return std::max(a.colwise().sum().maxCoeff(), a.rowwise().sum().maxCoeff());
    }
    case NormKind::op:
      if (r.rows() <= kSvdCutoff) {
        if (r.rows() == r.cols() && r == r.adjoint()) {
          Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
          return es.eigenvalues().cwiseAbs().maxCoeff();
        }
        Eigen::BDCSVD<Matrix> svd(r);
        return svd.singularValues()(0);
      }
      return op_norm_power(r);
  }
  return 0.0;
}

bool all_finite(const Matrix& r) { return r.allFinite(); }

Matrix hermitian_part(const Matrix& r) { return 0.5 * (r + r.adjoint()); }

Matrix imag_part(const Matrix& r) { return (r - r.adjoint()) / Complex(0.0, 2.0); }

Matrix real_part(const Matrix& r) { return hermitian_part(r); }

RealVector hermitian_eigenvalues(const Matrix& r) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(r), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Matrix& r) { return hermitian_eigenvalues(r)(0); }

double max_eigenvalue(const Matrix& r) {
  const RealVector ev = hermitian_eigenvalues(r);
  return ev(ev.size() - 1);
}

bool is_psd(const Matrix& r, double tol) { return min_eigenvalue(r) >= -tol; }

Matrix hermitian_function(const Matrix& r, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(r));
  RealVector fv = es.eigenvalues().unaryExpr(f);
  const Matrix& v = es.eigenvectors();
  return v * fv.cast<Complex>().asDiagonal() * v.adjoint();
}

Matrix project_psd(const Matrix& r) {
  return hermitian_function(r, [](double x) { return x > 0.0 ? x : 0.0; });
}

Matrix identity(int n) { return Matrix::Identity(n, n); }

}  // namespace mdelab
