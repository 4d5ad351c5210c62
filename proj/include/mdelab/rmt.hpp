#pragma once
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mdelab/dos.hpp"
#include "mdelab/ensemble.hpp"

namespace mdelab {

// H = V diag(lambda) V*, eigenvalues ascending.
struct SpectralDecomposition {
  RealVector values;
  Matrix vectors;

  static SpectralDecomposition of(const HermMatrix& h);
  // (H - z)^{-1}
  Matrix resolvent(SpectralParam zeta) const;
};

Matrix resolvent(const HermMatrix& h, SpectralParam zeta);
// (H - z)^{-1} by LU
Matrix resolvent_direct(const HermMatrix& h, SpectralParam zeta);

// max_x |sum_u |G_xu|^2 - Im G_xx / Im z|
double ward_check(const Matrix& g, SpectralParam zeta);

struct ErrorMatrix {
  Matrix d;                   // -(S[G] + H - A) G
  double identity_residual;   // ||1 + (z - A + S[G]) G + D||_max
};

ErrorMatrix error_matrix(const HermMatrix& h, const Matrix& g, const HermMatrix& a, const SelfEnergy& s,
                         SpectralParam zeta);
// Same D through H G = 1 + z G, O(N^2) when S[G] - A is sparse.
Matrix error_matrix_fast(const Matrix& g, const HermMatrix& a, const SelfEnergy& s, SpectralParam zeta);

struct MinorResolvent {
  std::vector<int> kept;  // X \ B, ascending
  Matrix g_b;             // ((H - z)|_{X\B})^{-1}
  double schur_residual;  // ||G^B - (G_XX - G_XB G_BB^{-1} G_BX)||_max
};

// Throws InvalidArgument when B is the full index set or has out-of-range entries.
MinorResolvent minor_resolvent(const HermMatrix& h, std::span<const int> removed, SpectralParam zeta);
// M^B = ((M^{-1})|_{X\B})^{-1}
Matrix minor_solution(const Matrix& m, std::span<const int> removed);

// Solution at zeta reached by continuation in eta from above.
MdeSolution solve_continued(const DataPair& data, SpectralParam zeta, const SolverConfig& cfg = {});

struct ScalingFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  double lo = 0.0;  // slope -/+ 2 stderr
  double hi = 0.0;
  int points = 0;
};

// least squares slope of log y against log x
ScalingFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct LocalLawTarget {
  int n = 0;
  Complex zeta;
  int trials = 0;  // 0: use the experiment default
};

struct LocalLawRow {
  int n = 0;
  Complex zeta;
  int trial = 0;
  double lambda_max = 0.0;  // ||G - M||_max
  double trace_err = 0.0;   // |<G> - <M>|
  double d_max = 0.0;       // ||D||_max
  double ward_resid = 0.0;
};

struct LocalLawPoint {
  int n = 0;
  Complex zeta;
  double rho = 0.0;  // harmonic dos at zeta
  bool bulk = false;
  bool failed = false;
  std::string failure;
  int trials = 0;
  double median_lambda = 0.0;
  double median_trace_err = 0.0;
  double median_d = 0.0;
  double max_lambda = 0.0;
  double max_ward = 0.0;
};

struct LocalLawReport {
  std::vector<LocalLawRow> rows;
  std::vector<LocalLawPoint> points;
  ScalingFit entrywise;  // log median Lambda vs log(N eta)
  ScalingFit trace;      // log median trace error vs log(N eta)
  bool monotone = false; // median Lambda nonincreasing in N eta
};

LocalLawReport local_law_experiment(const EnsembleSpec& spec, std::span<const LocalLawTarget> schedule,
                                    int trials, double delta = 0.05, int threads = 1,
                                    const SolverConfig& cfg = {});

// DOS of the ensemble's data pair on [-kappa - 0.1, kappa + 0.1].
DosCurve ensemble_dos(const EnsembleSpec& spec, int points = 881, double eta = 1e-3, int threads = 1,
                      const SolverConfig& cfg = {});

struct RigidityReport {
  std::vector<double> taus;               // bulk grid
  std::vector<int> indices;               // i(tau)
  std::vector<std::vector<double>> deviations;  // [trial][tau]
  std::vector<RealVector> eigenvalues;    // kept when requested
  std::vector<double> thresholds;         // 5/N, 10 log N / N, N^-0.9
  std::vector<double> fraction_within;    // per threshold
};

RigidityReport rigidity_experiment(const EnsembleSpec& spec, const DosCurve& curve, double delta, int trials,
                                   int tau_points = 121, int threads = 1, bool keep_eigenvalues = false);

struct DelocalizationReport {
  int n = 0;
  int vectors = 0;           // bulk eigenvectors examined
  double max_value = 0.0;    // max N max_x |u_x|^2
  double constant = 0.0;     // max_value / (log N)^2
  std::vector<double> values;
  double fraction_below(double bound) const;
};

DelocalizationReport delocalization_check(const EnsembleSpec& spec, const DosCurve& curve, double delta,
                                          int trials, int threads = 1);

struct GapRecord {
  int trial = 0;
  int index = 0;
  double gap = 0.0;
  double unfolded = 0.0;
};

struct GapSample {
  std::vector<GapRecord> records;
  double mean_unfolded() const;
  std::vector<double> unfolded() const;
};

// Consecutive gaps with both eigenvalues in [lo, hi], unfolded by N rho(lambda_i).
// Throws InsufficientStatistics below 50 pooled gaps, InvalidArgument when the
// window leaves the bulk (rho < delta at an end point).
GapSample gap_statistics(const EnsembleSpec& spec, const DosCurve& curve, int trials, double lo, double hi,
                         double delta = 0.05, int first_trial = 0, int threads = 1);

// sup |F_a - F_b| of two empirical distributions
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace mdelab
