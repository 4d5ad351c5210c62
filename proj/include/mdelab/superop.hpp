#pragma once
#include <functional>

#include "mdelab/herm.hpp"

namespace mdelab {

// Matrices larger than this are never materialized as N^2 x N^2 superoperators.
inline constexpr int kBruteForceCutoff = 16;

// Linear map on N x N matrices together with its adjoint for <R,T> = tr(R*T)/N.
class SuperOperator {
 public:
  using Map = std::function<Matrix(const Matrix&)>;

  SuperOperator() = default;
  SuperOperator(int n, Map apply, Map adjoint);

  static SuperOperator identity(int n);
  static SuperOperator zero(int n);

  int dim() const { return n_; }
  Matrix operator()(const Matrix& r) const;
  Matrix apply_adjoint(const Matrix& r) const;
  SuperOperator adjoint() const;

 private:
  int n_ = 0;
  Map apply_;
  Map adjoint_;
};

SuperOperator compose(const SuperOperator& a, const SuperOperator& b);  // a o b
SuperOperator operator+(const SuperOperator& a, const SuperOperator& b);
SuperOperator operator-(const SuperOperator& a, const SuperOperator& b);
SuperOperator operator*(Complex c, const SuperOperator& a);

// C_R[T] = R T R, adjoint C_{R*}.
SuperOperator sandwich(const Matrix& r);
// K_R[T] = R* T R, adjoint K_{R*}.
SuperOperator conjugate_sandwich(const Matrix& r);
// C_R^{-1} = C_{R^{-1}}; throws SingularMatrix.
SuperOperator inverse_sandwich(const Matrix& r);

Vector vec(const Matrix& r);
Matrix unvec(const Vector& v, int n);

// Column k = vec(T[E_k]), column-major vec. The normalized inner product is a
// scalar multiple of the vec inner product, so adjoints and induced norms carry over.
Matrix dense_superop(const SuperOperator& t);

// ||T||_sp: norm induced by the hs norm.
double dense_sp_norm(const SuperOperator& t);
double dense_inverse_sp_norm(const SuperOperator& t);  // +inf when singular
// Spectrum of a self-adjoint T, ascending.
RealVector dense_self_adjoint_spectrum(const SuperOperator& t);

// Krylov estimates, usable above the brute-force cutoff.
double sp_norm_iterative(const SuperOperator& t, bool self_adjoint);
double inverse_sp_norm_iterative(const SuperOperator& t, double tol = 1e-10);

// Spot checks of linearity and adjoint consistency on random inputs.
double adjoint_defect(const SuperOperator& t, unsigned seed, int probes = 4);
double linearity_defect(const SuperOperator& t, unsigned seed, int probes = 4);

// Random matrices from a seeded Mersenne twister; for probes and test data.
Matrix random_matrix(int n, unsigned long long seed);
Matrix random_hermitian(int n, unsigned long long seed);
Vector random_vector(int n, unsigned long long seed);

}  // namespace mdelab
