#pragma once
#include <functional>

#include "mdelab/herm.hpp"

namespace mdelab {

using LinearMap = std::function<Vector(const Vector&)>;

struct GmresResult {
  Vector x;
  double relative_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Restarted GMRES for a x = b.
GmresResult gmres(const LinearMap& a, const Vector& b, double rel_tol, int max_iter = 600,
                  int restart = 60, const Vector* x0 = nullptr);

struct LanczosExtremes {
  double min = 0.0;
  double max = 0.0;
  int steps = 0;
};

// Extreme eigenvalues of a Hermitian map by Lanczos with full reorthogonalization.
LanczosExtremes lanczos_extremes(const LinearMap& herm, const Vector& start, int max_steps = 80,
                                 double tol = 1e-12);

}  // namespace mdelab
