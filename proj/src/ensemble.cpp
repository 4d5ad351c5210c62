#include "mdelab/ensemble.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mdelab/error.hpp"
#include "mdelab/rng.hpp"

namespace mdelab {

namespace {

// separates the factor-part Gaussians from the entry field
constexpr std::uint64_t kFactorSalt = 0xfac7'0000'0000ULL;

}  // namespace

BareSpec BareSpec::diagonal_profile(std::vector<double> levels) {
  if (levels.empty()) throw InvalidArgument("diagonal_profile: no levels");
  BareSpec b;
  b.kind = Kind::diagonal_profile;
  b.levels = std::move(levels);
  return b;
}

BareSpec BareSpec::banded(double amplitude, double length, int bandwidth) {
  if (!(length > 0.0) || bandwidth < 0) throw InvalidArgument("banded: length > 0, bandwidth >= 0");
  BareSpec b;
  b.kind = Kind::banded;
  b.amplitude = amplitude;
  b.length = length;
  b.bandwidth = bandwidth;
  return b;
}

HermMatrix BareSpec::build(int n) const {
  switch (kind) {
    case Kind::zero:
      return HermMatrix::zero(n);
    case Kind::diagonal_profile: {
      const int k = static_cast<int>(levels.size());
      RealVector d(n);
      for (int x = 0; x < n; ++x) d(x) = levels[static_cast<std::size_t>(x * k / n)];
      return HermMatrix::diagonal(d);
    }
    case Kind::banded: {
      RealMatrix a = RealMatrix::Zero(n, n);
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
          const int d = std::abs(wrap_offset(y - x, n));
          if (d <= bandwidth) a(x, y) = amplitude * std::exp(-d / length);
        }
      return HermMatrix(a);
    }
  }
  return HermMatrix::zero(n);
}

KernelSpec KernelSpec::zero() {
  KernelSpec k;
  k.kind = Kind::zero;
  k.scale = 0.0;
  return k;
}

KernelSpec KernelSpec::mean_field(double scale) {
  KernelSpec k;
  k.kind = Kind::mean_field;
  k.scale = scale;
  return k;
}

KernelSpec KernelSpec::moving_average(RealMatrix filter) {
  KernelSpec k;
  k.kind = Kind::moving_average;
  k.filter = std::move(filter);
  return k;
}

KernelSpec KernelSpec::from_kernel(CovarianceKernel kernel) {
  KernelSpec k;
  k.kind = Kind::custom;
  k.custom = std::move(kernel);
  return k;
}

CovarianceKernel KernelSpec::build(int n, Symmetry sym) const {
  switch (kind) {
    case Kind::zero:
      return CovarianceKernel::zero(n, sym);
    case Kind::mean_field:
      return CovarianceKernel::mean_field(n, sym, scale);
    case Kind::moving_average:
      return CovarianceKernel::moving_average(n, sym, filter);
    case Kind::custom:
      if (!custom || custom->dim() != n || custom->symmetry() != sym)
        throw InvalidSpec("custom kernel does not match the ensemble dimension or symmetry");
      return *custom;
  }
  return CovarianceKernel::zero(n, sym);
}

RealMatrix default_correlated_filter() {
  RealMatrix phi(3, 3);
  phi << 0.15, 0.3, 0.15, 0.3, 1.0, 0.3, 0.15, 0.3, 0.15;
  return phi / phi.norm();
}

EnsembleSpec EnsembleSpec::gue(int n, std::uint64_t seed) {
  EnsembleSpec e;
  e.n = n;
  e.symmetry = Symmetry::complex;
  e.kernel = KernelSpec::mean_field();
  e.seed = seed;
  return e;
}

EnsembleSpec EnsembleSpec::goe(int n, std::uint64_t seed) {
  EnsembleSpec e = gue(n, seed);
  e.symmetry = Symmetry::real;
  return e;
}

EnsembleSpec EnsembleSpec::correlated(int n, std::uint64_t seed) {
  EnsembleSpec e = gue(n, seed);
  e.kernel = KernelSpec::moving_average(default_correlated_filter());
  return e;
}

EnsembleSpec EnsembleSpec::with_dim(int m) const {
  EnsembleSpec e = *this;
  e.n = m;
  return e;
}

EnsembleSpec EnsembleSpec::with_seed(std::uint64_t s) const {
  EnsembleSpec e = *this;
  e.seed = s;
  return e;
}

std::optional<IndexMetric> EnsembleSpec::build_metric() const {
  switch (metric) {
    case MetricKind::none:
      return std::nullopt;
    case MetricKind::circle:
      return IndexMetric::circle(n);
    case MetricKind::line:
      return IndexMetric::line(n);
  }
  return std::nullopt;
}

DataPair EnsembleSpec::data_pair() const {
  if (n <= 0) throw InvalidArgument("EnsembleSpec: N must be positive");
  // GUE: E W R W = scale <R> exactly, keep the cheap representation
  SelfEnergy s = kernel.kind == KernelSpec::Kind::mean_field && symmetry == Symmetry::complex
                     ? SelfEnergy::mean_field(n, kernel.scale)
                     : SelfEnergy::kernel(kernel.build(n, symmetry));
  return DataPair(bare.build(n), std::move(s), build_metric());
}

Sampler::Sampler(const EnsembleSpec& spec)
    : spec_(spec), bare_(spec.bare.build(spec.n)), kernel_(spec.kernel.build(spec.n, spec.symmetry)) {
  const bool has_ti = !kernel_.direct().is_zero() || !kernel_.exchange().is_zero();
  if (has_ti && !kernel_.filter()) {
    if (spec.n > kDenseCovarianceCutoff)
      throw InvalidSpec("Sampler: translation-invariant kernel without a filter needs N <= 64");
    ti_factors_ = kernel_.factorize_translation_invariant();
  }
}

Matrix Sampler::fluctuation(int trial) const {
  const int n = spec_.n;
  const std::uint64_t seed = spec_.seed;
  const auto stream = static_cast<std::uint64_t>(trial);
  const bool complex = spec_.symmetry == Symmetry::complex;
  Matrix w = Matrix::Zero(n, n);

  if (kernel_.filter() && !(kernel_.direct().is_zero() && kernel_.exchange().is_zero())) {
    const RealMatrix& phi = *kernel_.filter();
    const int a = static_cast<int>(phi.rows()) / 2;
    Matrix x(n, n);
    const double c = complex ? std::sqrt(0.5) : 1.0;
    for (int col = 0; col < n; ++col)
      for (int row = 0; row < n; ++row) {
        const std::uint64_t k = static_cast<std::uint64_t>(row) * n + col;
        if (complex)
          x(row, col) = c * Complex(CounterRng::normal(seed, stream, 2 * k),
                                    CounterRng::normal(seed, stream, 2 * k + 1));
        else
          x(row, col) = CounterRng::normal(seed, stream, k);
      }
    Matrix y;
    if (a == 0) {
      y = phi(0, 0) * x;
    } else {
      // Y_xu = sum_ij phi(i,j) X_{x+i, u+j}
      y = Matrix::Zero(n, n);
      for (int i = -a; i <= a; ++i)
        for (int j = -a; j <= a; ++j) {
          const double f = phi(i + a, j + a);
          if (f == 0.0) continue;
          for (int u = 0; u < n; ++u) {
            const int uj = ((u + j) % n + n) % n;
            for (int xr = 0; xr < n; ++xr) y(xr, u) += f * x(((xr + i) % n + n) % n, uj);
          }
        }
    }
    w = (y + y.adjoint()) * std::sqrt(0.5);
  } else if (!ti_factors_.empty()) {
    for (std::size_t k = 0; k < ti_factors_.size(); ++k)
      w += CounterRng::normal(seed, stream, kFactorSalt + k) * ti_factors_[k];
  }

  const std::vector<Matrix>& fac = kernel_.factors();
  for (std::size_t k = 0; k < fac.size(); ++k)
    w += CounterRng::normal(seed ^ kFactorSalt, stream, k) * fac[k];
  return w;
}

SampleDraw Sampler::sample(int trial) const {
  if (trial < 0) throw InvalidArgument("sample: trial must be nonnegative");
  SampleDraw d;
  d.seed = spec_.seed;
  d.trial = trial;
  if (kernel_.is_zero()) {
    d.h = bare_;
    return d;
  }
  const Matrix w = fluctuation(trial);
  d.h = HermMatrix(Matrix(bare_.matrix() + w / std::sqrt(static_cast<double>(spec_.n))));
  return d;
}

SampleDraw sample(const EnsembleSpec& spec, int trial) { return Sampler(spec).sample(trial); }

double kernel_flatness(const CovarianceKernel& k, int probes, std::uint64_t seed) {
  const int n = k.dim();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  auto unit = [&]() {
    Vector v(n);
    for (int i = 0; i < n; ++i)
      v(i) = k.symmetry() == Symmetry::complex ? Complex(g(gen), g(gen)) : Complex(g(gen), 0.0);
    return Vector(v.normalized());
  };
  double worst = std::numeric_limits<double>::infinity();
  for (int p = 0; p < probes; ++p) {
    const Vector u = unit();
    const Vector v = unit();
    const Matrix sv = k.contract(v * v.adjoint());
    worst = std::min(worst, n * (u.adjoint() * sv * u)(0, 0).real());
  }
  return worst;
}

}  // namespace mdelab
