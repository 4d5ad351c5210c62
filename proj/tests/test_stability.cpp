#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mdelab/dos.hpp"
#include "mdelab/ensemble.hpp"
#include "mdelab/error.hpp"
#include "mdelab/generators.hpp"
#include "mdelab/rmt.hpp"
#include "mdelab/stability.hpp"
#include "oracles.hpp"

using namespace mdelab;

namespace {

SuperOperator mean_field_projection(int n) {
  const SelfEnergy s = SelfEnergy::mean_field(n);
  return s.as_superoperator();
}

struct Solved {
  DataPair data;
  MdeSolution sol;
};

Solved solved_flat(int n, std::uint64_t seed, Complex z, FlatKind kind = FlatKind::variance_profile) {
  DataPair d = random_flat_data(n, seed, kind);
  MdeSolution s = solve_continued(d, SpectralParam(z));
  return {std::move(d), std::move(s)};
}

// Central difference of the perturbed solution map in direction d.
double fd_error(const DataPair& data, const MdeSolution& sol, const DerivativeOperator& op, const Matrix& d, double t) {
  SolverConfig cfg;
  cfg.tol = 1e-14;
  const Matrix plus = solve_perturbed(data, sol.zeta, t * d, sol.m, cfg);
  const Matrix minus = solve_perturbed(data, sol.zeta, -t * d, sol.m, cfg);
  return max_norm((plus - minus) / (2.0 * t) - op.derivative(d));
}

Matrix unit_max_hermitian(int n, unsigned seed) {
  const Matrix h = random_hermitian(n, seed);
  return h / max_norm(h);
}

}  // namespace

TEST_SUITE("stability") {
  TEST_CASE("Wigner saturation at z = i") {
    const int n = 5;
    const DataPair w = wigner_data(n);
    const MdeSolution sol = solve_at(w, SpectralParam(0.0, 1.0));
    const SaturationData sat = compute_saturation(sol, w.self_energy);
    const double b = oracle::golden_b();
    CHECK(max_norm(sat.w.matrix() - identity(n)) <= 1e-10);
    CHECK(max_norm(sat.u + Complex(0.0, 1.0) * identity(n)) <= 1e-10);
    CHECK(sat.sp_radius == doctest::Approx(b * b).epsilon(1e-10));
    CHECK(sat.sp_radius == doctest::Approx(0.38197).epsilon(1e-5));
    CHECK(max_norm(sat.perron - identity(n)) <= 1e-10);
    const Matrix r = random_matrix(n, 4);
    CHECK(max_norm(sat.f(r) - b * b * avg_trace(r) * identity(n)) <= 1e-10);
    CHECK(sat.polar_residual <= 1e-12);

    const RadiusIdentityCheck rc = spectral_radius_identity_check(sat, sol, support_bound(w));
    CHECK(rc.relative_error <= 1e-12);
    CHECK(b * b + b - 1.0 == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("Perron pair against the dense spectrum") {
    const Solved s = solved_flat(8, 17, Complex(0.2, 0.3));
    const SaturationData sat = compute_saturation(s.sol, s.data.self_energy);
    const RealVector spec = dense_self_adjoint_spectrum(sat.f);
    CHECK(std::abs(sat.sp_radius - spec(spec.size() - 1)) <= 1e-8);
    CHECK(min_eigenvalue(sat.perron) > 0.0);
    CHECK(hs_norm(sat.perron) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("spectral radius identity on flat kernel data") {
    for (double eta : {0.1, 0.3, 1.0}) {
      const Solved s = solved_flat(8, 23, Complex(0.1, eta), FlatKind::kernel);
      const SaturationData sat = compute_saturation(s.sol, s.data.self_energy);
      const RadiusIdentityCheck rc = spectral_radius_identity_check(sat, s.sol, support_bound(s.data));
      CHECK(rc.relative_error <= 1e-8);
    }
    const Solved far = solved_flat(6, 5, Complex(0.0, 40.0));
    const SaturationData sat = compute_saturation(far.sol, far.data.self_energy);
    CHECK(sat.sp_radius < 0.5);
    CHECK_FALSE(spectral_radius_identity_check(sat, far.sol, support_bound(far.data)).hypotheses_met);
  }

  TEST_CASE("spectral gap bound on the mean-field projection") {
    const int n = 4;
    const SuperOperator p = mean_field_projection(n);
    const SandwichBounds sb = fit_sandwich_bounds(p);
    CHECK(sb.gamma == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sb.Gamma == doctest::Approx(1.0).epsilon(1e-12));
    const GapBounds g = spectral_gap_verify(p, 1.0, 1.0);
    CHECK(g.theta_predicted == doctest::Approx(0.5));
    CHECK(g.theta_observed == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(g.passed());
  }

  TEST_CASE("spectral gap bound on random saturations") {
    int count = 0;
    for (int n : {4, 6, 8}) {
      for (unsigned k = 0; k < 7 && count < 20; ++k, ++count) {
        const Complex z(-0.6 + 0.2 * k, 0.05 + 0.15 * k);
        const Solved s = solved_flat(n, 300 + 10 * n + k, z, k % 2 ? FlatKind::kernel : FlatKind::variance_profile);
        const SaturationData sat = compute_saturation(s.sol, s.data.self_energy);
        const SuperOperator t = Complex(1.0 / sat.sp_radius) * sat.f;
        const SandwichBounds sb = fit_sandwich_bounds(t);
        const GapBounds g = spectral_gap_verify(t, sb.gamma, sb.Gamma);
        INFO("n=" << n << " k=" << k << " theta pred " << g.theta_predicted << " obs " << g.theta_observed);
        CHECK(g.passed());
      }
    }
    CHECK(count == 20);
  }

  TEST_CASE("fitted bounds hold on their own probe family for any seed") {
    const Solved s = solved_flat(4, 417, Complex(0.05, 0.75), FlatKind::variance_profile);
    const SaturationData sat = compute_saturation(s.sol, s.data.self_energy);
    const SuperOperator t = Complex(1.0 / sat.sp_radius) * sat.f;
    for (std::uint64_t seed : {1ULL, 401ULL, 0xfeedULL}) {
      const SandwichBounds sb = fit_sandwich_bounds(t, seed);
      const GapBounds g = spectral_gap_verify(t, sb.gamma, sb.Gamma, seed);
      CHECK(g.hypotheses_hold);
      CHECK(g.passed());
    }
    CHECK(sandwich_probes(5, 7).size() == 1 + 5 + 64);
  }

  TEST_CASE("spectral gap bound reports a failed sandwich hypothesis") {
    const int n = 4;
    RealMatrix s = RealMatrix::Ones(n, n);
    s.row(0).setZero();
    s.col(0).setZero();
    const SuperOperator t = SelfEnergy::variance_profile(s, Symmetry::complex).as_superoperator();
    const GapBounds g = spectral_gap_verify(t, 0.5, 1.0);
    CHECK_FALSE(g.hypotheses_hold);
    CHECK_FALSE(g.passed());
  }

  TEST_CASE("rotation inversion on rank-one operators") {
    const int n = 4;
    const double t = 0.6, theta = 0.5;
    const SuperOperator tp = Complex(t) * mean_field_projection(n);

    const RotationInversion same = rotation_inversion_bound(identity(n), tp, theta);
    CHECK(same.lhs == doctest::Approx(1.0 / (1.0 - t)).epsilon(1e-10));
    CHECK(same.rhs_without_c == doctest::Approx(1.0 / (theta * (1.0 - t))).epsilon(1e-10));
    CHECK(same.ratio == doctest::Approx(theta).epsilon(1e-10));

    // the matrix -1 conjugates to the identity rotation
    const RotationInversion minus_one = rotation_inversion_bound(Matrix(-identity(n)), tp, theta);
    CHECK(minus_one.lhs == doctest::Approx(1.0 / (1.0 - t)).epsilon(1e-10));

    // the rotation -Id: (-Id - tP)^{-1} has eigenvalues -1 and -1/(1+t)
    const SuperOperator flip = Complex(-1.0) * SuperOperator::identity(n);
    const RotationInversion neg = rotation_inversion_bound(flip, tp, theta);
    CHECK(neg.lhs == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(neg.rhs_without_c == doctest::Approx(1.0 / (theta * (1.0 + t))).epsilon(1e-10));
    CHECK(neg.ratio <= 1.0);
  }

  TEST_CASE("rotation inversion ratios from solved equations") {
    double worst = 0.0;
    for (unsigned k = 0; k < 20; ++k) {
      const Complex z(-1.0 + 0.1 * k, 0.02 + 0.05 * (k % 5));
      const Solved s = solved_flat(6, 900 + k, z, k % 2 ? FlatKind::kernel : FlatKind::variance_profile);
      const SaturationData sat = compute_saturation(s.sol, s.data.self_energy);
      const RotationInversion r = rotation_inversion_bound(sat.u, sat.f, sat.gap);
      worst = std::max(worst, r.ratio);
    }
    MESSAGE("largest rotation-inversion ratio " << worst);
    CHECK(worst <= 10.0);
  }

  TEST_CASE("linear stability") {
    const int n = 4;
    const DataPair w = wigner_data(n);
    const MdeSolution sol = solve_at(w, SpectralParam(0.0, 1.0));
    CHECK(linear_stability_norm(sol, w.self_energy, 2.0).norm == doctest::Approx(1.0).epsilon(1e-10));

    const DataPair data = random_flat_data(6, 8);
    const double kappa = support_bound(data);
    const double r = 3.0 * (1.0 + kappa);
    for (double phi : {0.2, 1.0, std::numbers::pi / 2, 2.5}) {
      const Complex z = std::polar(r, phi);
      const LinearStability ls = linear_stability_norm(solve_continued(data, SpectralParam(z)), data.self_energy, kappa);
      CHECK(ls.far_regime);
      CHECK(ls.cms_norm <= 0.25);
      CHECK(ls.norm <= 4.0 / 3.0 + 1e-8);
      CHECK(ls.far_bound_ok);
    }

    double prev = 0.0;
    for (double eta : {1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001}) {
      const MdeSolution e = solve_continued(w, SpectralParam(2.0, eta));
      const double norm = linear_stability_norm(e, w.self_energy, 2.0).norm;
      CHECK(norm > prev);
      prev = norm;
    }
  }

  TEST_CASE("derivative of the solution map") {
    const int n = 6;
    const DataPair bare(HermMatrix(random_hermitian(n, 2)), SelfEnergy::zero(n));
    const MdeSolution s0 = solve_at(bare, SpectralParam(0.1, 0.5));
    const DerivativeOperator d0 = derivative_operator(s0, bare.self_energy);
    const Matrix r = random_matrix(n, 3);
    CHECK(max_norm(d0.z(r)) == 0.0);
    CHECK(max_norm(d0.derivative(r) - s0.m * r) == 0.0);

    const DataPair w = wigner_data(8);
    const MdeSolution sol = solve_at(w, SpectralParam(0.3, 0.4));
    const DerivativeOperator op = derivative_operator(sol, w.self_energy);
    for (unsigned k = 0; k < 5; ++k) {
      const Matrix d = unit_max_hermitian(8, 40 + k);
      const double e1 = fd_error(w, sol, op, d, 1e-2);
      const double e2 = fd_error(w, sol, op, d, 5e-3);
      const double e3 = fd_error(w, sol, op, d, 2.5e-3);
      const double order = 0.5 * (std::log2(e1 / e2) + std::log2(e2 / e3));
      CHECK(order >= 1.9);
      CHECK(fd_error(w, sol, op, d, 1e-4) <= 1e-6);
      CHECK(fd_error(w, sol, op, d, 1e-5) <= 1e-6);
    }
  }

  TEST_CASE("derivative decay on circle-metric kernel data") {
    const DataPair data = EnsembleSpec::correlated(16).data_pair();
    const MdeSolution sol = solve_continued(data, SpectralParam(0.1, 0.1));
    const DerivativeOperator op = derivative_operator(sol, data.self_energy);
    const DecayProfile fitted = fit_decay_profile(derivative_envelope(op), *data.metric);
    CHECK(derivative_decay_report(op, *data.metric, fitted).passed);
  }

  TEST_CASE("perturbation stability in the bulk") {
    for (unsigned seed : {1u, 2u, 3u}) {
      const Solved s = solved_flat(8, seed, Complex(0.0, 0.2), seed % 2 ? FlatKind::kernel : FlatKind::variance_profile);
      const DerivativeOperator op = derivative_operator(s.sol, s.data.self_energy);
      const double c = derivative_max_norm(op);
      const Matrix d = 1e-3 * unit_max_hermitian(8, 70 + seed);
      const Matrix g = solve_perturbed(s.data, s.sol.zeta, d, s.sol.m);
      CHECK(max_norm(g - s.sol.m) <= 1.5 * c * max_norm(d));
    }
  }

  TEST_CASE("saturation invariants") {
    for (unsigned k = 0; k < 8; ++k) {
      const int n = 4 + (k % 3) * 2;
      const Complex z(-0.5 + 0.15 * k, 0.05 + 0.1 * k);
      const Solved s = solved_flat(n, 1200 + k, z, k % 2 ? FlatKind::kernel : FlatKind::variance_profile);
      const SaturationData sat = compute_saturation(s.sol, s.data.self_energy);
      CHECK(max_norm(sat.u.adjoint() * sat.u - identity(n)) <= 1e-12);
      CHECK(min_eigenvalue(sat.w.matrix()) > 0.0);
      CHECK(sat.polar_residual <= 1e-10);
      CHECK(sat.identity_residual <= 1e-8);
      double worst = 0.0;
      for (unsigned t = 0; t < 100; ++t) {
        const Vector v = random_vector(n, 5000 + t);
        worst = std::min(worst, min_eigenvalue(sat.f(v * v.adjoint())));
      }
      CHECK(worst >= -1e-12);
    }
  }

  TEST_CASE("ill-conditioned imaginary part is refused") {
    MdeSolution sol;
    sol.m = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(compute_saturation(sol, SelfEnergy::mean_field(3)), IllConditioned);
  }

  TEST_CASE("report serialization") {
    const DataPair w = wigner_data(4);
    const StabilityReport rep = stability_report(solve_at(w, SpectralParam(0.0, 1.0)), w.self_energy, 2.0);
    const nlohmann::json j = to_json(rep);
    for (const char* key :
         {"sp_radius", "gap_predicted", "gap_observed", "stability_norm", "polar_residual", "identity_residual"})
      CHECK(j.contains(key));
  }
}
