#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdelab/kernel.hpp"
#include "mdelab/mde.hpp"

namespace mdelab {

struct BareSpec {
  enum class Kind { zero, diagonal_profile, banded };
  Kind kind = Kind::zero;
  // diagonal_profile: N split into levels.size() consecutive blocks
  std::vector<double> levels;
  // banded: amplitude * exp(-d/length) for circle distance d <= bandwidth
  double amplitude = 0.0;
  double length = 1.0;
  int bandwidth = 0;

  static BareSpec zero() { return {}; }
  static BareSpec diagonal_profile(std::vector<double> levels);
  static BareSpec banded(double amplitude, double length, int bandwidth);

  HermMatrix build(int n) const;
};

struct KernelSpec {
  enum class Kind { zero, mean_field, moving_average, custom };
  Kind kind = Kind::mean_field;
  double scale = 1.0;
  RealMatrix filter;
  std::optional<CovarianceKernel> custom;

  static KernelSpec zero();
  static KernelSpec mean_field(double scale = 1.0);
  static KernelSpec moving_average(RealMatrix filter);
  static KernelSpec from_kernel(CovarianceKernel k);

  CovarianceKernel build(int n, Symmetry sym) const;
};

// 3x3 nearest-neighbour smoothing filter with unit autocorrelation at the origin.
RealMatrix default_correlated_filter();

enum class MetricKind { none, circle, line };

struct EnsembleSpec {
  int n = 0;
  Symmetry symmetry = Symmetry::complex;
  BareSpec bare;
  KernelSpec kernel;
  MetricKind metric = MetricKind::circle;
  std::uint64_t seed = 1;

  static EnsembleSpec gue(int n, std::uint64_t seed = 1);
  static EnsembleSpec goe(int n, std::uint64_t seed = 1);
  // finite-range moving-average kernel, beta = 2, A = 0
  static EnsembleSpec correlated(int n, std::uint64_t seed = 1);

  EnsembleSpec with_dim(int n) const;
  EnsembleSpec with_seed(std::uint64_t seed) const;
  std::optional<IndexMetric> build_metric() const;
  // (A, S) with S[R] = E W R W
  DataPair data_pair() const;
};

struct SampleDraw {
  HermMatrix h;
  std::uint64_t seed = 0;
  int trial = 0;
};

// Draws H = A + W / sqrt N. Every entry is a pure function of (seed, trial,
// entry index).
class Sampler {
 public:
  explicit Sampler(const EnsembleSpec& spec);

  const EnsembleSpec& spec() const { return spec_; }
  const CovarianceKernel& kernel() const { return kernel_; }
  const HermMatrix& bare() const { return bare_; }
  SampleDraw sample(int trial) const;
  // the fluctuation W alone (unscaled)
  Matrix fluctuation(int trial) const;

 private:
  EnsembleSpec spec_;
  HermMatrix bare_;
  CovarianceKernel kernel_;
  std::vector<Matrix> ti_factors_;  // translation-invariant part without a filter, N <= 64
};

SampleDraw sample(const EnsembleSpec& spec, int trial);

// min over random unit u, v of N u* S[v v*] u = E|u* W v|^2
double kernel_flatness(const CovarianceKernel& k, int probes = 32, std::uint64_t seed = 0xf1a7);

}  // namespace mdelab
