#include <doctest.h>

#include <cmath>
#include <vector>

#include "mdelab/dos.hpp"
#include "mdelab/ensemble.hpp"
#include "mdelab/error.hpp"
#include "mdelab/generators.hpp"
#include "mdelab/mde.hpp"
#include "mdelab/rmt.hpp"
#include "oracles.hpp"

using namespace mdelab;

namespace {

void check_solution_invariants(const MdeSolution& sol, const DataPair& data, const SolverConfig& cfg) {
  CHECK(sol.residual <= cfg.tol);
  CHECK(residual(sol.m, data, sol.zeta) <= cfg.tol);
  CHECK(min_eigenvalue(imag_part(sol.m)) > 0.0);
  CHECK(op_norm(sol.m) <= 1.0 / sol.zeta.eta() + 1e-10);
  CHECK(imaginary_identity_residual(sol, data.self_energy) <= 10 * cfg.tol);
}

}  // namespace

TEST_SUITE("mde") {
  TEST_CASE("spectral parameter must lie in the upper half plane") {
    CHECK_THROWS_AS(SpectralParam(0.3, 0.0), InvalidArgument);
    CHECK_THROWS_AS(SpectralParam(0.3, -1.0), InvalidArgument);
  }

  TEST_CASE("Wigner at z = i") {
    const DataPair w = wigner_data(10);
    const MdeSolution sol = solve_at(w, SpectralParam(0.0, 1.0));
    const Complex m = oracle::m_sc(Complex(0.0, 1.0));
    CHECK(std::abs(m - Complex(0.0, 0.6180339887498949)) <= 1e-15);
    CHECK(max_norm(sol.m - m * identity(10)) <= 1e-10);
    check_solution_invariants(sol, w, {});
  }

  TEST_CASE("large eta asymptotics") {
    const int n = 12;
    RealMatrix s = RealMatrix::Constant(n, n, 0.25);
    for (int x = 0; x < n; ++x) s(x, (x + 1) % n) = s((x + 1) % n, x) = 0.5;
    const DataPair data(HermMatrix::zero(n), SelfEnergy::variance_profile(s, Symmetry::complex));
    CHECK(self_energy_op_norm(data.self_energy) <= 1.0);
    const Complex z(0.0, 100.0);
    const MdeSolution sol = solve_at(data, SpectralParam(z));
    CHECK(op_norm(sol.m + identity(n) / z) <= 2e-4);
  }

  TEST_CASE("diagonal data against the vector Dyson equation") {
    const int n = 16;
    std::vector<double> a(n);
    const RealVector ar = random_hermitian(n, 71).real().diagonal();
    for (int x = 0; x < n; ++x) a[x] = ar(x);
    RealMatrix s(n, n);
    const RealMatrix u = random_hermitian(n, 72).real().cwiseAbs();
    s = RealMatrix::Constant(n, n, 0.5) + (u + u.transpose()) / (2.0 * u.maxCoeff());
    const DataPair data(HermMatrix::diagonal(ar), SelfEnergy::variance_profile(s, Symmetry::complex));
    const Complex z(0.3, 0.05);
    const std::vector<Complex> m = oracle::vector_dyson(a, s, z);
    const MdeSolution sol = solve_continued(data, SpectralParam(z));
    double worst = 0.0;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) worst = std::max(worst, std::abs(sol.m(x, y) - (x == y ? m[x] : 0.0)));
    CHECK(worst <= 1e-9);
  }

  TEST_CASE("residual examples") {
    const int n = 6;
    const DataPair w = wigner_data(n);
    const SpectralParam z(0.0, 1.0);
    const Matrix exact = oracle::m_sc(z.value()) * identity(n);
    CHECK(residual(exact, w, z) <= 1e-14);
    CHECK(residual(Matrix::Zero(n, n), w, z) == doctest::Approx(1.0));
    const double r = residual(exact + 1e-6 * identity(n), w, z);
    CHECK(r > 1e-7);
    CHECK(r < 1e-4);
  }

  TEST_CASE("continuation sweep") {
    const DataPair w = wigner_data(8);
    const std::vector<double> grid{10.0, 1.0, 0.1, 0.01, 0.001};
    const std::vector<MdeSolution> sweep = continuation_sweep(w, 0.0, grid);
    REQUIRE(sweep.size() == grid.size());
    for (std::size_t k = 1; k < sweep.size(); ++k) CHECK(harmonic_dos(sweep[k]) > harmonic_dos(sweep[k - 1]));
    CHECK(std::abs(harmonic_dos(sweep.back()) - 1.0 / std::numbers::pi) <= 1e-2);
    for (std::size_t k = 0; k < sweep.size(); ++k) {
      check_solution_invariants(sweep[k], w, {});
      const MdeSolution cold = solve_at(w, SpectralParam(0.0, grid[k]));
      CHECK(max_norm(cold.m - sweep[k].m) <= 1e-9);
    }

    const std::vector<MdeSolution> outside = continuation_sweep(w, 5.0, grid);
    for (std::size_t k = 2; k < outside.size(); ++k) CHECK(harmonic_dos(outside[k]) <= 2.0 * grid[k]);

    const std::vector<double> bad{1.0, 2.0};
    CHECK_THROWS_AS(continuation_sweep(w, 0.0, bad), InvalidArgument);
  }

  TEST_CASE("stability operator") {
    const int n = 4;
    const DataPair w = wigner_data(n);
    const MdeSolution sol = solve_at(w, SpectralParam(0.0, 1.0));
    const double b = oracle::golden_b();
    const SuperOperator l = stability_operator(sol.m, w.self_energy);
    const Matrix expect = Matrix::Identity(n * n, n * n) + b * b * oracle::mean_field_dense(n);
    CHECK(max_norm(dense_superop(l) - expect) <= 1e-10);
    CHECK(smallest_singular_value(l) == doctest::Approx(1.0).epsilon(1e-10));

    const SuperOperator id = stability_operator(sol.m, SelfEnergy::zero(n));
    CHECK(max_norm(dense_superop(id) - Matrix::Identity(n * n, n * n)) == 0.0);

    const DataPair flat = random_flat_data(6, 3);
    const MdeSolution fs = solve_continued(flat, SpectralParam(0.1, 0.2));
    const SuperOperator lf = stability_operator(fs.m, flat.self_energy);
    const double dense = dense_inverse_sp_norm(lf);
    const double iter = inverse_sp_norm_iterative(lf);
    CHECK(std::abs(dense - iter) <= 1e-6 * dense);
    CHECK(adjoint_defect(lf, 3) <= 1e-12);
  }

  TEST_CASE("uniqueness from a random start") {
    for (FlatKind kind : {FlatKind::variance_profile, FlatKind::kernel}) {
      const DataPair data = random_flat_data(8, 41, kind);
      const SpectralParam z(0.2, 0.4);
      const SolverConfig cfg;
      const MdeSolution cold = solve_at(data, z, cfg);
      const Matrix b = random_matrix(8, 5);
      const Matrix start = random_hermitian(8, 6) * 0.3 + Complex(0.0, 1.0) * (b * b.adjoint() / 8.0 + identity(8));
      const MdeSolution warm = solve_at(data, z, cfg, start);
      CHECK(max_norm(cold.m - warm.m) <= 10 * cfg.tol);
      check_solution_invariants(cold, data, cfg);
      check_solution_invariants(warm, data, cfg);
    }
  }

  TEST_CASE("imaginary part outside the support bound") {
    for (unsigned seed = 1; seed <= 4; ++seed) {
      const DataPair data = random_flat_data(8, seed, seed % 2 ? FlatKind::kernel : FlatKind::variance_profile);
      const double kappa = support_bound(data);
      const double s = self_energy_op_norm(data.self_energy);
      for (const Complex z : {Complex(kappa + 0.5, 0.1), Complex(-kappa - 1.0, 0.01), Complex(0.0, kappa + 2.0)}) {
        const MdeSolution sol = solve_continued(data, SpectralParam(z));
        const double gap = std::abs(z) - kappa + 2.0 * std::sqrt(s);
        const double bound = 4.0 * z.imag() / (gap * gap - 4.0 * s);
        CHECK(op_norm(imag_part(sol.m)) <= bound + 1e-11);
      }
    }
  }

  TEST_CASE("solution decay carries over to a larger dimension") {
    auto data_at = [](int n) {
      EnsembleSpec spec = EnsembleSpec::correlated(n);
      spec.bare = BareSpec::banded(0.3, 1.0, 2);
      return spec.data_pair();
    };
    const SpectralParam z(0.2, 0.05);
    const DataPair small = data_at(32);
    const MdeSolution ms = solve_continued(small, z);
    const DecayProfile fitted = fit_decay_profile(ms.m.cwiseAbs(), *small.metric);
    CHECK(decay_norm(ms.m, *small.metric, fitted) <= 1.0 + 1e-12);

    const DataPair large = data_at(64);
    const MdeSolution ml = solve_continued(large, z);
    CHECK(decay_norm(ml.m, *large.metric, fitted.scaled(1.5)) <= 1.0);
  }

  TEST_CASE("circulant path reports the dense residual") {
    const DataPair data = EnsembleSpec::correlated(96).data_pair();
    const SpectralParam z(0.4, 0.05);
    const MdeSolution sol = solve_continued(data, z);
    CHECK((sol.method == SolveMethod::circulant_newton || sol.method == SolveMethod::circulant_fixed_point));
    CHECK(std::abs(sol.residual - residual(sol.m, data, z)) <= 1e-14);
    CHECK(min_eigenvalue(imag_part(sol.m)) == doctest::Approx(sol.im_min_eig).epsilon(1e-9));
    CHECK_THROWS_AS(solve_at(data, z, {}, Matrix(sol.m.adjoint())), InvalidArgument);
  }

  TEST_CASE("solver configuration validation") {
    SolverConfig cfg;
    cfg.tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.damping = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
}
