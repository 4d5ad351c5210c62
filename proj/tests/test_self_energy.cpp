#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mdelab/ensemble.hpp"
#include "mdelab/self_energy.hpp"
#include "oracles.hpp"

using namespace mdelab;

namespace {

RealMatrix flat_profile(int n, unsigned seed) {
  const RealMatrix u = random_hermitian(n, seed).real().cwiseAbs();
  RealMatrix s = (u + u.transpose()) / 2.0;
  return (0.5 * RealMatrix::Ones(n, n) + s / s.maxCoeff()).eval();
}

std::vector<SelfEnergy> all_variants(int n) {
  std::vector<SelfEnergy> v;
  v.push_back(SelfEnergy::mean_field(n, 0.7));
  v.push_back(SelfEnergy::variance_profile(flat_profile(n, 3), Symmetry::complex));
  v.push_back(SelfEnergy::variance_profile(flat_profile(n, 4), Symmetry::real));
  v.push_back(SelfEnergy::kernel(CovarianceKernel::mean_field(n, Symmetry::real)));
  v.push_back(SelfEnergy::kernel(CovarianceKernel::moving_average(n, Symmetry::complex, default_correlated_filter())));
  v.push_back(SelfEnergy::kernel(CovarianceKernel::mean_field(n, Symmetry::complex, 0.5)
                                     .plus_factors({random_hermitian(n, 5), random_hermitian(n, 6)})));
  return v;
}

}  // namespace

TEST_SUITE("self_energy") {
  TEST_CASE("apply: closed-form cases") {
    const SelfEnergy mf = SelfEnergy::mean_field(6);
    CHECK(max_norm(mf(identity(6)) - identity(6)) == 0.0);

    const int n = 7;
    const SelfEnergy vp = SelfEnergy::variance_profile(RealMatrix::Ones(n, n), Symmetry::complex);
    const RealVector d = RealVector::LinSpaced(n, -2.0, 5.0);
    const Matrix r = d.cast<Complex>().asDiagonal();
    CHECK(max_norm(vp(r) - avg_trace(r) * identity(n)) <= 1e-15);
  }

  TEST_CASE("real symmetric mean field adds the transpose term") {
    const int n = 3;
    const Matrix r = random_matrix(n, 21);
    Matrix hand = Matrix::Zero(n, n);
    for (int x = 0; x < n; ++x) {
      for (int y = 0; y < n; ++y) {
        if (x == y)
          for (int u = 0; u < n; ++u) hand(x, y) += r(u, u) / double(n);
        hand(x, y) += r(y, x) / double(n);
      }
    }
    const SelfEnergy vp = SelfEnergy::variance_profile(RealMatrix::Ones(n, n), Symmetry::real);
    const SelfEnergy goe = SelfEnergy::kernel(CovarianceKernel::mean_field(n, Symmetry::real));
    CHECK(max_norm(vp(r) - hand) <= 1e-15);
    CHECK(max_norm(goe(r) - hand) <= 1e-15);
    CHECK(max_norm(hand - (avg_trace(r) * identity(n) + r.transpose() / double(n))) <= 1e-15);
  }

  TEST_CASE("moving-average kernel matches the Monte-Carlo average of W R W") {
    const int n = 24;
    const int draws = 100000;
    const EnsembleSpec spec = EnsembleSpec::correlated(n, 4242);
    const Sampler sampler(spec);
    const SelfEnergy s = spec.data_pair().self_energy;
    const Matrix r = random_hermitian(n, 31);
    const Matrix exact = s(r);

    RealMatrix sum_re = RealMatrix::Zero(n, n), sum_im = RealMatrix::Zero(n, n);
    RealMatrix sq_re = RealMatrix::Zero(n, n), sq_im = RealMatrix::Zero(n, n);
    for (int t = 0; t < draws; ++t) {
      const Matrix w = sampler.fluctuation(t);
      const Matrix x = w * r * w / double(n);
      sum_re += x.real();
      sum_im += x.imag();
      sq_re += x.real().cwiseAbs2();
      sq_im += x.imag().cwiseAbs2();
    }
    const double m = draws;
    int within3 = 0, total = 0;
    double worst = 0.0;
    auto score = [&](double sum, double sq, double truth) {
      const double mean = sum / m;
      const double se = std::sqrt(std::max(sq / m - mean * mean, 0.0) / (m - 1.0));
      if (se == 0.0) {
        CHECK(mean == doctest::Approx(truth).epsilon(1e-12));
        return;
      }
      const double z = std::abs(mean - truth) / se;
      worst = std::max(worst, z);
      within3 += z <= 3.0;
      ++total;
    };
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        score(sum_re(x, y), sq_re(x, y), exact(x, y).real());
        // W R W is Hermitian, so its diagonal is real in every draw
        if (x == y) {
          CHECK(std::abs(sum_im(x, x) / m) <= 1e-12);
          CHECK(std::abs(exact(x, x).imag()) <= 1e-12);
        } else {
          score(sum_im(x, y), sq_im(x, y), exact(x, y).imag());
        }
      }
    INFO("worst z-score " << worst << ", " << within3 << " of " << total << " within 3 s.e.");
    // 1128 simultaneous comparisons: 3 s.e. per entry, with the family-wise bound for the maximum.
    CHECK(double(within3) / total >= 0.99);
    CHECK(worst <= 4.5);
  }

  TEST_CASE("flatness bounds") {
    const FlatnessBounds mf = flatness_bounds(SelfEnergy::mean_field(6));
    CHECK(mf.p1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mf.P1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mf.flat);

    const int n = 6;
    const SelfEnergy vp = SelfEnergy::variance_profile(RealMatrix::Ones(n, n), Symmetry::complex);
    const FlatnessBounds fv = flatness_bounds(vp);
    CHECK(fv.p1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fv.P1 == doctest::Approx(1.0).epsilon(1e-12));
    const Vector v = random_vector(n, 12);
    const Matrix vv = v * v.adjoint();
    CHECK(max_norm(vp(vv) - v.squaredNorm() / n * identity(n)) <= 1e-14);

    // variance profile with row 0 switched off, written as a full covariance kernel
    auto kappa = [](int x, int u, int v, int y) -> Complex {
      if (x != y || u != v || x == 0 || u == 0) return 0.0;
      return 1.0;
    };
    const SelfEnergy degenerate = SelfEnergy::kernel(CovarianceKernel::from_function(5, Symmetry::complex, kappa));
    const FlatnessBounds fd = flatness_bounds(degenerate);
    CHECK(fd.p1 <= 1e-15);
    CHECK_FALSE(fd.flat);
  }

  TEST_CASE("self-energy norms") {
    const SelfEnergyNorms mf = self_energy_norms(SelfEnergy::mean_field(5));
    CHECK(mf.sp_norm == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(mf.op_norm == doctest::Approx(1.0).epsilon(1e-10));
    const SelfEnergyNorms mc = self_energy_norms(SelfEnergy::mean_field(5, 2.5));
    CHECK(mc.sp_norm == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(mc.op_norm == doctest::Approx(2.5).epsilon(1e-10));

    const int n = 8;
    const SelfEnergy k = SelfEnergy::kernel(CovarianceKernel::mean_field(n, Symmetry::complex, 0.5)
                                                .plus_factors({random_hermitian(n, 61), random_hermitian(n, 62)}));
    const double dense = dense_sp_norm(k.as_superoperator());
    const double iter = sp_norm_iterative(k.as_superoperator(), true);
    CHECK(std::abs(dense - iter) <= 1e-8 * dense);
    const SelfEnergyNorms kn = self_energy_norms(k);
    CHECK(kn.ordering_holds);
    CHECK(kn.sp_norm <= kn.op_norm * (1 + 1e-10));
  }

  TEST_CASE("decay check") {
    const int n = 24;
    const IndexMetric circle = IndexMetric::circle(n);
    CHECK(decay_check(SelfEnergy::mean_field(n), circle, DecayProfile::constant(1.0)).passed);

    const CovarianceKernel local = CovarianceKernel::moving_average(n, Symmetry::complex, default_correlated_filter());
    CHECK(local.range() <= 3);
    const DecayProfile pi = DecayProfile::geometric(local.row_magnitude(), 4.0);
    CHECK(decay_check(SelfEnergy::kernel(local), circle, pi).passed);

    // W = g J with J the all-ones matrix: every pair of entries is fully correlated
    const CovarianceKernel dense = CovarianceKernel::from_factors(n, Symmetry::complex, {Matrix::Ones(n, n)});
    const DecayProfile small = DecayProfile::geometric(local.row_magnitude(), 4.0);
    CHECK_FALSE(decay_check(SelfEnergy::kernel(dense), circle, small).passed);
  }

  TEST_CASE("self-adjointness and positivity for every variant") {
    const int n = 8;
    for (const SelfEnergy& s : all_variants(n)) {
      for (unsigned t = 0; t < 5; ++t) {
        const Matrix r = random_hermitian(n, 500 + t);
        const Matrix q = random_hermitian(n, 600 + t);
        const Complex lhs = inner(r, s(q));
        const Complex rhs = inner(s(r), q);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1 + std::abs(lhs)));
      }
      double worst = 0.0;
      for (unsigned t = 0; t < 100; ++t) {
        const Vector v = random_vector(n, 700 + t);
        worst = std::min(worst, min_eigenvalue(s(v * v.adjoint())));
      }
      CHECK(worst >= -1e-12);
    }
  }

  TEST_CASE("real covariance of assembled kernels is positive semidefinite") {
    const CovarianceKernel k = CovarianceKernel::moving_average(9, Symmetry::complex, default_correlated_filter());
    const Eigen::SelfAdjointEigenSolver<RealMatrix> es(k.real_covariance());
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}
