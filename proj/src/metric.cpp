#include "mdelab/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdelab/error.hpp"

namespace mdelab {

IndexMetric::IndexMetric(RealMatrix distance, double volume_exponent)
    : d_(std::move(distance)), p_(volume_exponent) {
  const Eigen::Index n = d_.rows();
  if (d_.cols() != n) throw DimensionMismatch("IndexMetric: distance matrix is not square");
  if (!(p_ > 0.0)) throw InvalidArgument("IndexMetric: volume exponent must be positive");
  for (Eigen::Index x = 0; x < n; ++x) {
    if (d_(x, x) != 0.0) throw InvalidArgument("IndexMetric: d(x,x) != 0");
    for (Eigen::Index y = 0; y < n; ++y) {
      if (!(d_(x, y) >= 0.0)) throw InvalidArgument("IndexMetric: negative distance");
      if (d_(x, y) != d_(y, x)) throw InvalidArgument("IndexMetric: asymmetric distance");
    }
  }
  if (n <= 128) {
    for (Eigen::Index z = 0; z < n; ++z)
      for (Eigen::Index x = 0; x < n; ++x)
        for (Eigen::Index y = 0; y < n; ++y)
          if (d_(x, y) > d_(x, z) + d_(z, y) + 1e-12)
            throw InvalidArgument("IndexMetric: triangle inequality violated");
  }
}

IndexMetric IndexMetric::circle(int n, double volume_exponent) {
  RealMatrix d(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      const int a = std::abs(x - y);
      d(x, y) = std::min(a, n - a);
    }
  IndexMetric m;
  m.d_ = std::move(d);
  m.p_ = volume_exponent;
  return m;
}

IndexMetric IndexMetric::line(int n, double volume_exponent) {
  RealMatrix d(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) d(x, y) = std::abs(x - y);
  IndexMetric m;
  m.d_ = std::move(d);
  m.p_ = volume_exponent;
  return m;
}

IndexMetric IndexMetric::discrete(int n, double volume_exponent) {
  RealMatrix d = RealMatrix::Constant(n, n, std::numeric_limits<double>::infinity());
  d.diagonal().setZero();
  IndexMetric m;
  m.d_ = std::move(d);
  m.p_ = volume_exponent;
  return m;
}

bool IndexMetric::ball_growth_ok() const {
  const int n = dim();
  // ball sizes only change when tau crosses a distance value; tau^P is increasing,
  // so checking tau = 2 and every distance value >= 2 is enough
  std::vector<double> taus{2.0};
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (std::isfinite(d_(x, y)) && d_(x, y) > 2.0) taus.push_back(d_(x, y));
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  for (double tau : taus) {
    const double bound = std::pow(tau, p_);
    for (int x = 0; x < n; ++x) {
      const int ball = static_cast<int>((d_.row(x).array() <= tau).count());
      if (ball > bound) return false;
    }
  }
  return true;
}

DecayProfile::DecayProfile(std::vector<double> values) : pi_(std::move(values)) {
  if (pi_.empty()) throw InvalidProfile("DecayProfile: empty profile");
  for (std::size_t nu = 0; nu < pi_.size(); ++nu)
    if (!(pi_[nu] > 0.0) || !std::isfinite(pi_[nu]))
      throw InvalidProfile("DecayProfile: pi(" + std::to_string(nu) + ") must be positive");
}

DecayProfile DecayProfile::constant(double c, int nu_max) {
  return DecayProfile(std::vector<double>(nu_max + 1, c));
}

DecayProfile DecayProfile::factorial(int nu_max) {
  std::vector<double> v(nu_max + 1);
  for (int nu = 0; nu <= nu_max; ++nu) v[nu] = std::tgamma(nu + 1.0);
  return DecayProfile(std::move(v));
}

DecayProfile DecayProfile::geometric(double scale, double base, int nu_max) {
  std::vector<double> v(nu_max + 1);
  for (int nu = 0; nu <= nu_max; ++nu) v[nu] = scale * std::pow(base, nu);
  return DecayProfile(std::move(v));
}

DecayProfile DecayProfile::scaled(double factor) const {
  std::vector<double> v = pi_;
  for (double& x : v) x *= factor;
  return DecayProfile(std::move(v));
}

double decay_norm_abs(const RealMatrix& envelope, const IndexMetric& metric,
                      const DecayProfile& profile) {
  const int n = static_cast<int>(envelope.rows());
  if (metric.dim() != n || envelope.cols() != n) throw DimensionMismatch("decay_norm: metric dimension");
  const double floor = profile(0) / n;
  double worst = 0.0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double a = envelope(x, y);
      if (a == 0.0) continue;
      const double base = 1.0 + metric(x, y);
      for (int nu = 0; nu <= profile.nu_max(); ++nu) {
        const double weight = (std::isfinite(base) ? profile(nu) / std::pow(base, nu)
                                                   : (nu == 0 ? profile(0) : 0.0)) +
                              floor;
        worst = std::max(worst, a / weight);
      }
    }
  return worst;
}

double decay_norm(const Matrix& r, const IndexMetric& metric, const DecayProfile& profile) {
  return decay_norm_abs(r.cwiseAbs(), metric, profile);
}

DecayProfile fit_decay_profile(const RealMatrix& envelope, const IndexMetric& metric, int nu_max) {
  const int n = static_cast<int>(envelope.rows());
  if (metric.dim() != n) throw DimensionMismatch("fit_decay_profile: metric dimension");
  std::vector<double> pi(nu_max + 1, 0.0);
  pi[0] = std::max(envelope.maxCoeff() / (1.0 + 1.0 / n), 1e-300);
  const double floor = pi[0] / n;
  for (int nu = 1; nu <= nu_max; ++nu) {
    double need = 0.0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double excess = envelope(x, y) - floor;
        if (excess <= 0.0 || !std::isfinite(metric(x, y))) continue;
        need = std::max(need, excess * std::pow(1.0 + metric(x, y), nu));
      }
    pi[nu] = std::max(need, 1e-300);
  }
  // tiny relative slack so rounding never pushes the fitted norm above 1
  for (double& v : pi) v *= 1.0 + 1e-12;
  return DecayProfile(std::move(pi));
}

}  // namespace mdelab
