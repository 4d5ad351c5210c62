#include "mdelab/dos.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "mdelab/error.hpp"
#include "mdelab/io.hpp"
#include "mdelab/parallel.hpp"

namespace mdelab {

double harmonic_dos(const MdeSolution& sol) { return avg_trace(sol.m).imag() / std::numbers::pi; }

double support_bound(const DataPair& data) {
  return data.bare_norm() + 2.0 * std::sqrt(self_energy_op_norm(data.self_energy));
}

double DosCurve::value(std::size_t i) const {
  const DosPoint& p = points[i];
  if (!p.converged) return 0.0;
  return extrapolated ? p.rho_extrapolated : p.rho;
}

double DosCurve::interpolate(double tau) const {
  if (points.empty() || tau < points.front().tau || tau > points.back().tau) return 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (tau <= points[i].tau) {
      const double t0 = points[i - 1].tau, t1 = points[i].tau;
      const double w = t1 > t0 ? (tau - t0) / (t1 - t0) : 0.0;
      return (1.0 - w) * value(i - 1) + w * value(i);
    }
  }
  return value(points.size() - 1);
}

double DosCurve::total_mass() const {
  double mass = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    mass += 0.5 * (value(i) + value(i - 1)) * (points[i].tau - points[i - 1].tau);
  return mass;
}

void DosCurve::write_csv(std::ostream& os) const {
  os << "tau,eta,rho,rho_extrapolated,converged\r\n";
  for (const DosPoint& p : points) {
    os << fmt17(p.tau) << ',' << fmt17(p.eta) << ',' << fmt17(p.rho) << ','
       << fmt17(p.rho_extrapolated) << ',' << (p.converged ? 1 : 0) << "\r\n";
  }
}

DosCurve dos_on_real_line(const DataPair& data, std::span<const double> tau_grid, double eta_target,
                          Extrapolation extrapolation, const SolverConfig& cfg, int threads) {
  if (!(eta_target > 0.0)) throw InvalidArgument("dos_on_real_line: eta must be positive");
  for (std::size_t i = 1; i < tau_grid.size(); ++i)
    if (!(tau_grid[i] > tau_grid[i - 1])) throw InvalidArgument("dos_on_real_line: tau grid must ascend");
  const std::vector<double> grid = default_eta_grid(support_bound(data), eta_target);
  DosCurve curve;
  curve.extrapolated = extrapolation == Extrapolation::richardson3;
  curve.points.resize(tau_grid.size());
  parallel_for(static_cast<int>(tau_grid.size()), threads, [&](int i) {
    DosPoint& p = curve.points[i];
    p.tau = tau_grid[i];
    p.eta = eta_target;
    try {
      const std::vector<MdeSolution> sweep = continuation_sweep(data, p.tau, grid, cfg);
      const std::size_t k = sweep.size();
      p.rho = harmonic_dos(sweep[k - 1]);
      if (curve.extrapolated && k >= 3) {
        // quadratic in eta through (eta, 2 eta, 4 eta), evaluated at 0
        const double r = (8.0 * p.rho - 6.0 * harmonic_dos(sweep[k - 2]) + harmonic_dos(sweep[k - 3])) / 3.0;
        p.rho_extrapolated = std::max(r, 0.0);
      } else {
        p.rho_extrapolated = p.rho;
      }
      p.converged = true;
    } catch (const ConvergenceFailure&) {
      p.rho = std::numeric_limits<double>::quiet_NaN();
      p.rho_extrapolated = std::numeric_limits<double>::quiet_NaN();
      p.converged = false;
    }
  });
  return curve;
}

SupportEstimate estimate_support(const DosCurve& curve, double delta, std::optional<double> kappa) {
  if (!(delta > 0.0)) throw InvalidArgument("estimate_support: delta must be positive");
  SupportEstimate est;
  est.delta = delta;
  std::vector<std::size_t> bulk;
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (curve.value(i) >= delta) bulk.push_back(i);
  if (bulk.empty()) {
    est.empty = true;
    return est;
  }
  est.kappa_minus = curve.points[bulk.front()].tau;
  est.kappa_plus = curve.points[bulk.back()].tau;
  for (std::size_t j = 1; j < bulk.size(); ++j) {
    if (bulk[j] > bulk[j - 1] + 1)
      est.gaps.emplace_back(curve.points[bulk[j - 1] + 1].tau, curve.points[bulk[j] - 1].tau);
  }
  if (kappa) {
    double step = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
      step = std::max(step, curve.points[i].tau - curve.points[i - 1].tau);
    est.within_bound = est.kappa_minus >= -*kappa - step && est.kappa_plus <= *kappa + step;
  }
  return est;
}

int quantile_index(const DosCurve& curve, double tau, int n) {
  if (curve.size() < 2) throw InvalidArgument("quantile_index: curve needs at least two points");
  const double mass = curve.total_mass();
  if (!(mass > 0.0)) throw InvalidArgument("quantile_index: curve has no mass");
  if (tau <= curve.points.front().tau) return 0;
  if (tau >= curve.points.back().tau) return n;
  double acc = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double t0 = curve.points[i - 1].tau, t1 = curve.points[i].tau;
    if (tau <= t1) {
      const double v_tau = curve.interpolate(tau);
      acc += 0.5 * (curve.value(i - 1) + v_tau) * (tau - t0);
      break;
    }
    acc += 0.5 * (curve.value(i - 1) + curve.value(i)) * (t1 - t0);
  }
  // normalized by the grid mass so that the index runs exactly from 0 to N
  const double f = std::clamp(acc / mass, 0.0, 1.0);
  const int idx = static_cast<int>(std::ceil(n * f - 1e-6));
  return std::clamp(idx, 0, n);
}

namespace {

double holder_constant(const DosCurve& curve, double c, std::size_t stride) {
  double best = 0.0;
  for (std::size_t i = stride; i < curve.size(); i += stride) {
    const double dt = curve.points[i].tau - curve.points[i - stride].tau;
    if (dt <= 0.0) continue;
    best = std::max(best, std::abs(curve.value(i) - curve.value(i - stride)) / std::pow(dt, c));
  }
  return best;
}

}  // namespace

HolderReport holder_check(const DosCurve& curve) {
  if (curve.size() < 10) throw InvalidArgument("holder_check: need at least 10 grid points");
  HolderReport rep;
  for (int k = 0; k < 3; ++k) {
    const double c = rep.exponents[k];
    rep.constants[k] = holder_constant(curve, c, 1);
    rep.coarse_constants[k] = holder_constant(curve, c, 2);
    // halving the step multiplies the constant by about 2^(c - c_true) once c > c_true
    rep.bounded[k] = rep.constants[k] <= 1.2 * rep.coarse_constants[k] + 1e-14;
    if (rep.bounded[k]) rep.best_exponent = c;
  }
  return rep;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

}  // namespace mdelab
