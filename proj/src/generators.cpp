#include "mdelab/generators.hpp"

#include <random>

#include "mdelab/error.hpp"

namespace mdelab {

DataPair wigner_data(int n) { return DataPair(HermMatrix::zero(n), SelfEnergy::mean_field(n)); }

DataPair random_flat_data(int n, std::uint64_t seed, FlatKind kind, double a_norm) {
  if (n <= 0) throw InvalidArgument("random_flat_data: N must be positive");
  Matrix a = random_hermitian(n, seed);
  const double na = op_norm(a);
  if (na > 0.0) a *= a_norm / na;

  std::mt19937_64 gen(seed ^ 0x51f7ULL);
  if (kind == FlatKind::variance_profile) {
    std::uniform_real_distribution<double> u(0.5, 1.5);
    RealMatrix s(n, n);
    for (int x = 0; x < n; ++x)
      for (int y = x; y < n; ++y) s(x, y) = s(y, x) = u(gen);
    return DataPair(HermMatrix(a), SelfEnergy::variance_profile(s, Symmetry::complex));
  }
  std::vector<Matrix> factors;
  for (int k = 0; k < 3; ++k) {
    Matrix b = random_hermitian(n, gen());
    // (1/N) B^2 has operator norm 1/2
    b *= std::sqrt(0.5 * n) / op_norm(b);
    factors.push_back(b);
  }
  const CovarianceKernel k =
      CovarianceKernel::mean_field(n, Symmetry::complex, 0.5).plus_factors(factors);
  return DataPair(HermMatrix(a), SelfEnergy::kernel(k));
}

}  // namespace mdelab
