#pragma once
#include <complex>
#include <functional>

#include <Eigen/Dense>

namespace mdelab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Self-adjoint N x N matrix. Built from the upper triangle of its input,
// so r_xy == conj(r_yx) holds bit-for-bit.
class HermMatrix {
 public:
  HermMatrix() = default;
  explicit HermMatrix(const Matrix& m);
  explicit HermMatrix(const RealMatrix& m);

  static HermMatrix zero(int n);
  static HermMatrix identity(int n);
  static HermMatrix diagonal(const RealVector& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  operator const Matrix&() const { return m_; }
  Complex operator()(int x, int y) const { return m_(x, y); }

 private:
  Matrix m_;
};

enum class NormKind { op, hs, max, one_vee_inf };

Complex avg_trace(const Matrix& r);
// <R,T> = tr(R* T) / N
Complex inner(const Matrix& r, const Matrix& t);
double matrix_norm(const Matrix& r, NormKind kind);
inline double op_norm(const Matrix& r) { return matrix_norm(r, NormKind::op); }
inline double max_norm(const Matrix& r) { return matrix_norm(r, NormKind::max); }
inline double hs_norm(const Matrix& r) { return matrix_norm(r, NormKind::hs); }

bool all_finite(const Matrix& r);
Matrix hermitian_part(const Matrix& r);  // (R + R*) / 2
Matrix imag_part(const Matrix& r);       // (R - R*) / 2i
Matrix real_part(const Matrix& r);

// Eigenvalues of the Hermitian part, ascending.
RealVector hermitian_eigenvalues(const Matrix& r);
double min_eigenvalue(const Matrix& r);
double max_eigenvalue(const Matrix& r);
bool is_psd(const Matrix& r, double tol);

// f(R) for Hermitian R through its eigendecomposition.
Matrix hermitian_function(const Matrix& r, const std::function<double(double)>& f);
// Eigenvalues of R clipped at zero.
Matrix project_psd(const Matrix& r);

Matrix identity(int n);

}  // namespace mdelab
