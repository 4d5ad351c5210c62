#pragma once
#include <cstdint>
#include <variant>

#include "mdelab/kernel.hpp"
#include "mdelab/metric.hpp"
#include "mdelab/superop.hpp"

namespace mdelab {

class SelfEnergy {
 public:
  struct MeanField {
    double scale = 1.0;
  };
  struct VarianceProfile {
    RealMatrix s;
    Symmetry beta = Symmetry::complex;
  };
  struct Kernel {
    CovarianceKernel kernel;
  };
  using Variant = std::variant<MeanField, VarianceProfile, Kernel>;

  SelfEnergy() = default;
  static SelfEnergy mean_field(int n, double scale = 1.0);
  // s must be symmetric with nonnegative entries.
  static SelfEnergy variance_profile(const RealMatrix& s, Symmetry beta);
  static SelfEnergy kernel(const CovarianceKernel& k);
  static SelfEnergy zero(int n) { return mean_field(n, 0.0); }

  int dim() const { return n_; }
  const Variant& variant() const { return v_; }
  Matrix operator()(const Matrix& r) const;
  SuperOperator as_superoperator() const;  // self-adjoint
  // True when S commutes with cyclic shifts of the index set.
  bool translation_invariant() const;
  // Action on a circulant argument given by its first row (translation-invariant only).
  Vector apply_circulant(const Vector& mu) const;

 private:
  int n_ = 0;
  Variant v_ = MeanField{};
};

Matrix apply_self_energy(const SelfEnergy& s, const Matrix& r);

struct FlatnessBounds {
  double p1 = 0.0;
  double P1 = 0.0;
  bool flat = false;
};

// Probes: identity, canonical projectors e_x e_x*, 64 random rank-one PSD matrices.
FlatnessBounds flatness_bounds(const SelfEnergy& s, std::uint64_t seed = 0x5a17);

struct SelfEnergyNorms {
  double op_norm = 0.0;  // induced by the operator norm on matrices
  double sp_norm = 0.0;  // induced by the hs norm
  bool ordering_holds = true;  // sp_norm <= op_norm
};

SelfEnergyNorms self_energy_norms(const SelfEnergy& s);
// ||S|| alone: ||S[1]||_op, exact for positivity-preserving S.
double self_energy_op_norm(const SelfEnergy& s);

struct DecayCheck {
  bool passed = false;
  double worst_norm = 0.0;
};

// decay_norm(S[R]) <= 1 over probes with ||R||_max = 1 (identity, all-ones, random signs).
DecayCheck decay_check(const SelfEnergy& s, const IndexMetric& metric, const DecayProfile& profile);

}  // namespace mdelab
