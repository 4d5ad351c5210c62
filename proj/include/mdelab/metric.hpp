#pragma once
#include <vector>

#include "mdelab/herm.hpp"

namespace mdelab {

// Pseudometric on {0..N-1} with a volume exponent P.
class IndexMetric {
 public:
  IndexMetric() = default;
  // Validates symmetry, zero diagonal, triangle inequality.
  IndexMetric(RealMatrix distance, double volume_exponent);

  // d(x,y) = min(|x-y|, N-|x-y|)
  static IndexMetric circle(int n, double volume_exponent = 3.0);
  // d(x,y) = |x-y|
  static IndexMetric line(int n, double volume_exponent = 3.0);
  // d(x,y) = 0 if x == y else +inf
  static IndexMetric discrete(int n, double volume_exponent = 3.0);

  int dim() const { return static_cast<int>(d_.rows()); }
  double operator()(int x, int y) const { return d_(x, y); }
  const RealMatrix& distances() const { return d_; }
  double volume_exponent() const { return p_; }
  // |B_tau(x)| <= tau^P for tau >= 2
  bool ball_growth_ok() const;

 private:
  RealMatrix d_;
  double p_ = 3.0;
};

class DecayProfile {
 public:
  static constexpr int kDefaultNuMax = 8;

  DecayProfile() = default;
  // Throws InvalidProfile on a non-positive or non-finite entry.
  explicit DecayProfile(std::vector<double> values);

  static DecayProfile constant(double c, int nu_max = kDefaultNuMax);
  static DecayProfile factorial(int nu_max = kDefaultNuMax);
  // pi(nu) = scale * base^nu
  static DecayProfile geometric(double scale, double base, int nu_max = kDefaultNuMax);

  int nu_max() const { return static_cast<int>(pi_.size()) - 1; }
  double operator()(int nu) const { return pi_[nu]; }
  const std::vector<double>& values() const { return pi_; }
  DecayProfile scaled(double factor) const;

 private:
  std::vector<double> pi_;
};

double decay_norm(const Matrix& r, const IndexMetric& metric, const DecayProfile& profile);
// Same norm on a real envelope of absolute values.
double decay_norm_abs(const RealMatrix& envelope, const IndexMetric& metric, const DecayProfile& profile);

// Smallest profile with decay_norm_abs(envelope) <= 1 (tight up to rounding).
DecayProfile fit_decay_profile(const RealMatrix& envelope, const IndexMetric& metric,
                               int nu_max = DecayProfile::kDefaultNuMax);

}  // namespace mdelab
