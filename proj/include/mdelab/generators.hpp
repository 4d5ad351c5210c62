#pragma once
#include <cstdint>

#include "mdelab/mde.hpp"

namespace mdelab {

enum class FlatKind { variance_profile, kernel };

// A = 0, S = <.>1
DataPair wigner_data(int n);

// Random flat data pair: A Hermitian with ||A||_op = a_norm, and either a
// symmetric variance profile with entries in [0.5, 1.5] or a mean-field kernel
// (scale 1/2) plus three random Hermitian factors.
DataPair random_flat_data(int n, std::uint64_t seed, FlatKind kind = FlatKind::variance_profile,
                          double a_norm = 1.0);

}  // namespace mdelab
