#pragma once
#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mdelab/mde.hpp"

namespace mdelab {

// (1/pi) Im <M>
double harmonic_dos(const MdeSolution& sol);

// ||A||_op + 2 sqrt(||S||)
double support_bound(const DataPair& data);

enum class Extrapolation { none, richardson3 };

struct DosPoint {
  double tau = 0.0;
  double eta = 0.0;
  double rho = 0.0;               // at eta
  double rho_extrapolated = 0.0;  // eta -> 0, clamped at 0
  bool converged = false;
};

struct DosCurve {
  std::vector<DosPoint> points;
  bool extrapolated = false;

  std::size_t size() const { return points.size(); }
  // extrapolated value when available, else rho at eta; 0 for missing points
  double value(std::size_t i) const;
  // linear interpolation of value() in tau; 0 outside the grid
  double interpolate(double tau) const;
  // trapezoid integral of value() over the whole grid
  double total_mass() const;
  void write_csv(std::ostream& os) const;
};

DosCurve dos_on_real_line(const DataPair& data, std::span<const double> tau_grid, double eta_target,
                          Extrapolation extrapolation = Extrapolation::richardson3,
                          const SolverConfig& cfg = {}, int threads = 1);

struct SupportEstimate {
  bool empty = false;
  double kappa_minus = 0.0;
  double kappa_plus = 0.0;
  std::vector<std::pair<double, double>> gaps;
  double delta = 0.01;
  // containment in [-kappa - step, kappa + step], when kappa was supplied
  std::optional<bool> within_bound;
};

SupportEstimate estimate_support(const DosCurve& curve, double delta = 0.01,
                                 std::optional<double> kappa = std::nullopt);

// ceil(N * int_{-inf}^tau rho), trapezoid rule
int quantile_index(const DosCurve& curve, double tau, int n);

struct HolderReport {
  std::array<double, 3> exponents{1.0 / 3.0, 0.5, 1.0};
  std::array<double, 3> constants{};
  std::array<double, 3> coarse_constants{};  // same fit on every second grid point
  std::array<bool, 3> bounded{};
  double best_exponent = 0.0;
};

HolderReport holder_check(const DosCurve& curve);

std::vector<double> linspace(double a, double b, int n);

}  // namespace mdelab
