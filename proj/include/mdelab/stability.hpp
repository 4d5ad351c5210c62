#pragma once
#include <vector>
#include <cstdint>

#include <json.hpp>

#include "mdelab/mde.hpp"

namespace mdelab {

struct SaturationData {
  HermMatrix w;           // (1 + X^2)^{1/4}, X = C_{sqrt Im M}^{-1}[Re M]
  Matrix u;               // (X - i)/|X - i|
  SuperOperator f;        // C_W C_{sqrt Im M} S C_{sqrt Im M} C_W
  Matrix perron;          // PSD, hs-normalized
  double sp_radius = 0.0;
  double gap = 0.0;       // 1 - max |other eigenvalue| / sp_radius
  int perron_iterations = 0;
  double polar_residual = 0.0;     // ||M - C_{sqrt Im M} C_W [U*]||_max
  double identity_residual = 0.0;  // ||W^-2 - eta C_W[Im M] - F[W^-2]||_max
  Matrix im_m;
  Matrix sqrt_im_m;
};

// Throws IllConditioned when min eig Im M < 1e-10, ConvergenceFailure when the
// Perron iteration does not settle within 1e5 steps.
SaturationData compute_saturation(const MdeSolution& sol, const SelfEnergy& s);

struct RadiusIdentityCheck {
  double relative_error = 0.0;
  double predicted = 0.0;  // 1 - <F, C_W[Im M]>/<F, W^-2> Im z
  bool hypotheses_met = false;  // ||F||_sp >= 1/2 and |z| <= 3(1 + kappa)
};

RadiusIdentityCheck spectral_radius_identity_check(const SaturationData& sat, const MdeSolution& sol,
                                                   double kappa);

struct SandwichBounds {
  double gamma = 0.0;
  double Gamma = 0.0;
};

inline constexpr std::uint64_t kProbeSeed = 0x9a9;

// Identity, canonical projectors and 64 random rank-one projections drawn from `seed`.
std::vector<Matrix> sandwich_probes(int n, std::uint64_t seed = kProbeSeed);

// gamma <R>1 <= T[R] <= Gamma <R>1 fitted on sandwich_probes(n, seed).
SandwichBounds fit_sandwich_bounds(const SuperOperator& t, std::uint64_t seed = kProbeSeed);

struct GapBounds {
  double gamma = 0.0;
  double Gamma = 0.0;
  double theta_predicted = 0.0;  // gamma^6 / (2 Gamma^4)
  double theta_observed = 0.0;
  bool hypotheses_hold = false;
  bool spectrum_ok = false;
  bool top_simple = false;
  bool eigenmatrix_ok = false;
  double top_eigenvalue = 0.0;
  double eigenmatrix_min = 0.0;
  double eigenmatrix_max = 0.0;

  bool passed() const { return hypotheses_hold && spectrum_ok && top_simple && eigenmatrix_ok; }
};

// The sandwich hypothesis is checked on sandwich_probes(n, probe_seed), the family the bounds are fitted on.
GapBounds spectral_gap_verify(const SuperOperator& t, double gamma, double Gamma,
                              std::uint64_t probe_seed = kProbeSeed);

struct RotationInversion {
  double lhs = 0.0;             // ||(U - T)^{-1}||_sp, +inf if singular
  double rhs_without_c = 0.0;   // (1/theta) |1 - ||T||_sp <T_mat, U[T_mat]>|^{-1}
  double ratio = 0.0;
};

// U is a unitary superoperator.
RotationInversion rotation_inversion_bound(const SuperOperator& rotation, const SuperOperator& t,
                                           double theta);
// Rotation C_U for a unitary matrix U.
RotationInversion rotation_inversion_bound(const Matrix& u, const SuperOperator& t, double theta);

struct LinearStability {
  double norm = 0.0;  // ||(Id - C_M S)^{-1}||_sp
  bool far_regime = false;  // |z| >= 3(1 + kappa)
  double cms_norm = 0.0;    // ||C_M S||_sp, computed in the far regime
  bool far_bound_ok = true;
  bool singular = false;
  double condition = 0.0;
};

LinearStability linear_stability_norm(const MdeSolution& sol, const SelfEnergy& s, double kappa);

struct DerivativeOperator {
  SuperOperator z;  // C_M S (Id - C_M S)^{-1} [M .]
  Matrix m;
  Matrix derivative(const Matrix& r) const { return z(r) + m * r; }
};

DerivativeOperator derivative_operator(const MdeSolution& sol, const SelfEnergy& s);

// E_xy = sum_uv |Z_(xy),(uv)|, dense (N <= 16).
RealMatrix derivative_envelope(const DerivativeOperator& d);
// ||R -> Z[R] + M R||_{max -> max}, dense (N <= 16).
double derivative_max_norm(const DerivativeOperator& d);

struct DecayReport {
  bool passed = false;
  double worst = 0.0;
};

// decay_norm(Z[R]) <= 1 on probes with ||R||_max = 1.
DecayReport derivative_decay_report(const DerivativeOperator& d, const IndexMetric& metric,
                                    const DecayProfile& profile);

struct StabilityReport {
  double sp_radius = 0.0;
  double gap_predicted = 0.0;
  double gap_observed = 0.0;
  double stability_norm = 0.0;
  double polar_residual = 0.0;
  double identity_residual = 0.0;
};

StabilityReport stability_report(const MdeSolution& sol, const SelfEnergy& s, double kappa);
nlohmann::json to_json(const StabilityReport& r);

}  // namespace mdelab
