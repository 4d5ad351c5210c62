#pragma once
// Reference computations that do not go through the library's solvers.
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;

// Stieltjes transform of the semicircle on [-2, 2], upper half plane branch.
inline Complex m_sc(Complex z) { return (-z + std::sqrt(z - 2.0) * std::sqrt(z + 2.0)) / 2.0; }

inline double rho_sc(double t) { return t * t >= 4.0 ? 0.0 : std::sqrt(4.0 - t * t) / (2.0 * std::numbers::pi); }

inline double semicircle_cdf(double t) {
  if (t <= -2.0) return 0.0;
  if (t >= 2.0) return 1.0;
  return 0.5 + (t * std::sqrt(4.0 - t * t) / 2.0 + 2.0 * std::asin(t / 2.0)) / (2.0 * std::numbers::pi);
}

// (sqrt 5 - 1) / 2, so that m_sc(i) = i b
inline double golden_b() { return (std::sqrt(5.0) - 1.0) / 2.0; }

// Diagonal data (a_x, s_xy), complex symmetry:
//   m_x = -1 / (z - a_x + (1/N) sum_y s_xy m_y),
// solved by damped scalar iteration.
inline std::vector<Complex> vector_dyson(const std::vector<double>& a, const Eigen::MatrixXd& s, Complex z,
                                         double tol = 1e-15, int max_iter = 2000000) {
  const int n = static_cast<int>(a.size());
  std::vector<Complex> m(n, -1.0 / z), next(n);
  for (int it = 0; it < max_iter; ++it) {
    double change = 0.0;
    for (int x = 0; x < n; ++x) {
      Complex acc = 0.0;
      for (int y = 0; y < n; ++y) acc += s(x, y) * m[y];
      next[x] = -1.0 / (z - a[x] + acc / static_cast<double>(n));
    }
    for (int x = 0; x < n; ++x) {
      const Complex upd = 0.5 * m[x] + 0.5 * next[x];
      change = std::max(change, std::abs(upd - m[x]));
      m[x] = upd;
    }
    if (change < tol) break;
  }
  return m;
}

// vec(R T R) = (R^T kron R) vec T, column-major vec.
inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd k(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

inline Eigen::MatrixXcd sandwich_kron(const Eigen::MatrixXcd& r) { return kron(r.transpose(), r); }

// S[R] = <R> 1 as an N^2 x N^2 matrix.
inline Eigen::MatrixXcd mean_field_dense(int n) {
  Eigen::VectorXcd one = Eigen::VectorXcd::Zero(n * n);
  for (int x = 0; x < n; ++x) one(x * n + x) = 1.0;
  return one * one.transpose() / static_cast<double>(n);
}

// Sample mean and standard error of a scalar series.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  double s = 0.0, s2 = 0.0;
  for (double x : v) s += x;
  const double n = static_cast<double>(v.size());
  const double mean = s / n;
  for (double x : v) s2 += (x - mean) * (x - mean);
  return {mean, std::sqrt(s2 / (n - 1.0) / n)};
}

}  // namespace oracle
