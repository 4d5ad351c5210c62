#pragma once
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mdelab {

// Counter-based Gaussian streams: every value is a pure function of
// (seed, stream, counter), so draws do not depend on evaluation order.
class CounterRng {
 public:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t h = mix(seed);
    h = mix(h ^ (stream * 0xd1b54a32d192ed03ULL));
    return mix(h ^ (counter * 0x8cb92ba72f3d8dd7ULL));
  }

  // uniform in (0, 1)
  static double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return (static_cast<double>(bits(seed, stream, counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal via Box-Muller on the counter pair (2k, 2k+1)
  static double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
    const double u1 = uniform(seed, stream, 2 * k);
    const double u2 = uniform(seed, stream, 2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

}  // namespace mdelab
