#pragma once
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdelab/metric.hpp"
#include "mdelab/self_energy.hpp"

namespace mdelab {

class SpectralParam {
 public:
  // Throws InvalidArgument unless Im z > 0.
  explicit SpectralParam(Complex z);
  SpectralParam(double tau, double eta) : SpectralParam(Complex(tau, eta)) {}

  Complex value() const { return z_; }
  double tau() const { return z_.real(); }
  double eta() const { return z_.imag(); }

 private:
  Complex z_;
};

struct DataPair {
  HermMatrix bare;
  SelfEnergy self_energy;
  std::optional<IndexMetric> metric;

  DataPair() = default;
  DataPair(HermMatrix a, SelfEnergy s, std::optional<IndexMetric> m = std::nullopt);
  int dim() const { return bare.dim(); }
  double bare_norm() const { return op_norm(bare.matrix()); }
};

struct SolverConfig {
  double tol = 1e-11;
  int max_iter = 10000;
  double damping = 0.5;
  double newton_switch = 1e-3;
  bool newton = true;
  // below this N the circulant (FFT) path is never used
  int circulant_min_dim = 64;
  bool allow_circulant = true;

  void validate() const;
};

enum class SolveMethod { fixed_point, newton, circulant_fixed_point, circulant_newton };
std::string to_string(SolveMethod m);

struct MdeSolution {
  Matrix m;
  SpectralParam zeta{Complex(0.0, 1.0)};
  double residual = 0.0;
  int iterations = 0;
  SolveMethod method = SolveMethod::fixed_point;
  double im_min_eig = 0.0;

  int dim() const { return static_cast<int>(m.rows()); }
};

// ||1 + (z - A + S[M]) M + D||_max
double residual(const Matrix& m, const DataPair& data, SpectralParam zeta);
double residual(const Matrix& m, const DataPair& data, SpectralParam zeta, const Matrix& defect);

MdeSolution solve_at(const DataPair& data, SpectralParam zeta, const SolverConfig& cfg = {},
                     const std::optional<Matrix>& warm_start = std::nullopt);

// Solution G of -1 = (z - A + S[G]) G + D near M, positivity gate off.
Matrix solve_perturbed(const DataPair& data, SpectralParam zeta, const Matrix& defect,
                       const Matrix& start, const SolverConfig& cfg = {});

// eta_target * 2^k, k = K..0, with the first entry >= max(10, 2 kappa).
std::vector<double> default_eta_grid(double kappa, double eta_target);

std::vector<MdeSolution> continuation_sweep(const DataPair& data, double tau,
                                            std::span<const double> eta_grid,
                                            const SolverConfig& cfg = {});

// R -> R - M S[R] M
SuperOperator stability_operator(const Matrix& m, const SelfEnergy& s);
// Smallest singular value w.r.t. the hs norm (dense up to the cutoff, Krylov above).
double smallest_singular_value(const SuperOperator& t);

// ||Im M - eta M*M - M* S[Im M] M||_max
double imaginary_identity_residual(const MdeSolution& sol, const SelfEnergy& s);

bool is_circulant(const Matrix& a);

}  // namespace mdelab
