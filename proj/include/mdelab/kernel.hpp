#pragma once
#include <functional>
#include <optional>
#include <vector>

#include "mdelab/herm.hpp"

namespace mdelab {

enum class Symmetry { real = 1, complex = 2 };

inline int beta_of(Symmetry s) { return static_cast<int>(s); }

// Signed offset to the representative in (-n/2, n/2].
inline int wrap_offset(int d, int n) {
  d %= n;
  if (d < 0) d += n;
  if (2 * d > n) d -= n;
  return d;
}

// Complex table over offsets (p, q) in [-r, r]^2, zero outside.
struct OffsetTable {
  int range = 0;
  Matrix values = Matrix::Zero(1, 1);

  static OffsetTable zeros(int range);
  Complex at(int p, int q) const {
    if (p < -range || p > range || q < -range || q > range) return 0.0;
    return values(p + range, q + range);
  }
  Complex& ref(int p, int q) { return values(p + range, q + range); }
  bool is_zero() const { return values.cwiseAbs().maxCoeff() == 0.0; }
};

// kappa(x,u;v,y) = E[w_xu w_vy] for the fluctuation W.
//
// Stored as a translation-invariant part on the circle,
//   kappa_ti = Dir(y-x, v-u) + Exc(v-x, y-u),
// plus an optional factor part W_f = sum_k g_k B_k with Hermitian B_k and iid
// standard Gaussians g_k, contributing sum_k B_k(x,u) B_k(v,y).
class CovarianceKernel {
 public:
  CovarianceKernel() = default;

  static CovarianceKernel zero(int n, Symmetry sym);
  // GUE (complex) or GOE (real) with E|w_xy|^2 = scale
  static CovarianceKernel mean_field(int n, Symmetry sym, double scale = 1.0);
  // Y = phi * X (circular convolution of iid Gaussians), W = (Y + Y*)/sqrt 2.
  // phi is (2a+1) x (2a+1) centred at (a, a). Requires n >= 4a + 1.
  static CovarianceKernel moving_average(int n, Symmetry sym, const RealMatrix& filter);
  static CovarianceKernel translation_invariant(int n, Symmetry sym, OffsetTable direct,
                                                OffsetTable exchange);
  static CovarianceKernel from_factors(int n, Symmetry sym, std::vector<Matrix> factors);
  // Assembles the real covariance (n <= 64), checks it is PSD and consistent
  // with Hermitian W, and stores the factorization.
  static CovarianceKernel from_function(int n, Symmetry sym,
                                        const std::function<Complex(int, int, int, int)>& kappa);

  // Adds the factor part of other to this kernel (same n and symmetry).
  CovarianceKernel plus_factors(const std::vector<Matrix>& factors) const;

  int dim() const { return n_; }
  Symmetry symmetry() const { return sym_; }
  bool translation_invariant() const { return factors_.empty(); }
  // Largest circle distance carrying a nonzero pairing.
  int range() const;
  const OffsetTable& direct() const { return dir_; }
  const OffsetTable& exchange() const { return exc_; }
  const std::optional<RealMatrix>& filter() const { return filter_; }
  const std::vector<Matrix>& factors() const { return factors_; }
  bool is_zero() const;

  Complex operator()(int x, int u, int v, int y) const;
  // (1/N) sum_{u,v} kappa(x,u;v,y) r_uv
  Matrix contract(const Matrix& r) const;
  // contract() on a circulant r with first row mu (r_xy = mu[(y-x) mod N]);
  // returns the first row of the (circulant) result. Translation-invariant only.
  Vector contract_circulant(const Vector& mu) const;

  // Covariance of the real degrees of freedom of W (n <= 64). Order: for x <= y,
  // Re w_xy then (complex, x < y) Im w_xy.
  RealMatrix real_covariance() const;
  // Hermitian factors reproducing the translation-invariant part (n <= 64).
  std::vector<Matrix> factorize_translation_invariant() const;
  // max_xy (1/N) sum_uv |kappa(x,u;v,y)|
  double row_magnitude() const;

 private:
  void check_offset_symmetry() const;

  int n_ = 0;
  Symmetry sym_ = Symmetry::complex;
  OffsetTable dir_;
  OffsetTable exc_;
  std::optional<RealMatrix> filter_;
  std::vector<Matrix> factors_;
};

inline constexpr int kDenseCovarianceCutoff = 64;

// Factors of a real covariance over the degrees of freedom of a Hermitian matrix.
std::vector<Matrix> factors_from_real_covariance(int n, Symmetry sym, const RealMatrix& cov);

}  // namespace mdelab
