#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mdelab/error.hpp"
#include "mdelab/rmt.hpp"
#include "oracles.hpp"

using namespace mdelab;

namespace {

EnsembleSpec diagonal_spec(int n) {
  EnsembleSpec spec;
  spec.n = n;
  std::vector<double> levels(n);
  for (int x = 0; x < n; ++x) levels[x] = -1.0 + 2.0 * x / (n - 1);
  spec.bare = BareSpec::diagonal_profile(levels);
  spec.kernel = KernelSpec::zero();
  return spec;
}

DosCurve uniform_curve(double lo, double hi, int points) {
  DosCurve c;
  for (double t : linspace(lo - 0.5, hi + 0.5, points)) {
    const double r = (t >= lo && t <= hi) ? 1.0 / (hi - lo) : 0.0;
    c.points.push_back({t, 1e-3, r, r, true});
  }
  return c;
}

}  // namespace

TEST_SUITE("rmt") {
  TEST_CASE("zero kernel draws the bare matrix") {
    const EnsembleSpec spec = diagonal_spec(12);
    const Sampler sampler(spec);
    for (int t = 0; t < 3; ++t) CHECK(max_norm(sampler.sample(t).h.matrix() - spec.bare.build(12).matrix()) == 0.0);
  }

  TEST_CASE("draws are exactly Hermitian and reproducible") {
    for (const EnsembleSpec& spec : {EnsembleSpec::gue(32, 5), EnsembleSpec::goe(32, 5), EnsembleSpec::correlated(32, 5)}) {
      const Sampler a(spec);
      const Sampler b(spec);
      for (int t : {0, 7, 3}) {
        const Matrix h = a.sample(t).h.matrix();
        CHECK(max_norm(h - h.adjoint()) == 0.0);
        CHECK(max_norm(h - b.sample(t).h.matrix()) == 0.0);
      }
      CHECK(max_norm(a.sample(1).h.matrix() - a.sample(2).h.matrix()) > 0.0);
    }
  }

  TEST_CASE("GUE entry moments") {
    const int draws = 10000;
    const Sampler sampler(EnsembleSpec::gue(8, 77));
    std::vector<double> abs2, re2, im2;
    for (int t = 0; t < draws; ++t) {
      const Complex w = sampler.fluctuation(t)(1, 3);
      abs2.push_back(std::norm(w));
      re2.push_back((w * w).real());
      im2.push_back((w * w).imag());
    }
    const oracle::MeanSe a = oracle::mean_se(abs2), r = oracle::mean_se(re2), i = oracle::mean_se(im2);
    CHECK(std::abs(a.mean - 1.0) <= 3 * a.se);
    CHECK(std::abs(r.mean) <= 3 * r.se);
    CHECK(std::abs(i.mean) <= 3 * i.se);
  }

  TEST_CASE("moving-average draws reproduce the declared neighbour covariance") {
    const int n = 16, draws = 20000, x = 3, y = 9;
    const Sampler sampler(EnsembleSpec::correlated(n, 19));
    const Complex declared = sampler.kernel()(x, y, y, x + 1);
    CHECK(std::abs(declared) > 0.05);
    std::vector<double> re, im;
    for (int t = 0; t < draws; ++t) {
      const Matrix w = sampler.fluctuation(t);
      const Complex c = w(x, y) * std::conj(w(x + 1, y));
      re.push_back(c.real());
      im.push_back(c.imag());
    }
    const oracle::MeanSe r = oracle::mean_se(re), i = oracle::mean_se(im);
    CHECK(std::abs(r.mean - declared.real()) <= 3 * r.se);
    CHECK(std::abs(i.mean - declared.imag()) <= 3 * i.se);
  }

  TEST_CASE("resolvent") {
    const SpectralParam z(0.0, 1.0);
    CHECK(max_norm(resolvent(HermMatrix::zero(5), z) - Complex(0.0, 1.0) * identity(5)) <= 1e-15);

    const HermMatrix h = sample(EnsembleSpec::gue(64, 3), 0).h;
    const SpectralParam w(0.2, 0.05);
    const Matrix g = resolvent(h, w);
    CHECK(max_norm(g - g.adjoint() - Complex(0.0, 2.0 * w.eta()) * g.adjoint() * g) <= 1e-12 * max_norm(g));
    CHECK(max_norm(g - resolvent_direct(h, w)) <= 1e-10);
  }

  TEST_CASE("Ward identity") {
    const SpectralParam z(0.0, 1.0);
    CHECK(ward_check(resolvent(HermMatrix::zero(4), z), z) <= 1e-15);
    const SpectralParam w(0.1, 0.01);
    for (const EnsembleSpec& spec : {EnsembleSpec::gue(64, 8), EnsembleSpec::correlated(64, 8)}) {
      Matrix g = resolvent(sample(spec, 2).h, w);
      CHECK(ward_check(g, w) <= 1e-10);
      g(3, 5) += 1e-3;
      CHECK(ward_check(g, w) >= 1e-7);
    }
  }

  TEST_CASE("error matrix") {
    const int n = 5;
    const SpectralParam z(0.0, 1.0);
    const HermMatrix zero = HermMatrix::zero(n);
    const SelfEnergy mf = SelfEnergy::mean_field(n);
    const Matrix g = resolvent(zero, z);
    const ErrorMatrix e = error_matrix(zero, g, zero, mf, z);
    CHECK(max_norm(e.d - identity(n)) <= 1e-15);
    CHECK(e.identity_residual <= 1e-15);

    for (const EnsembleSpec& spec : {EnsembleSpec::gue(64, 4), EnsembleSpec::correlated(64, 4)}) {
      const DataPair data = spec.data_pair();
      const SpectralParam w(-0.3, 0.02);
      for (int t = 0; t < 3; ++t) {
        const HermMatrix h = sample(spec, t).h;
        const Matrix gt = resolvent(h, w);
        const ErrorMatrix et = error_matrix(h, gt, data.bare, data.self_energy, w);
        CHECK(et.identity_residual <= 1e-12);
        CHECK(max_norm(et.d - error_matrix_fast(gt, data.bare, data.self_energy, w)) <= 1e-10);
      }
    }
  }

  TEST_CASE("error matrix is small near the real axis" * doctest::description("slow")) {
    const int n = 1024;
    const EnsembleSpec spec = EnsembleSpec::gue(n, 11);
    const DataPair data = spec.data_pair();
    const SpectralParam z(0.1, 1.0 / std::sqrt(double(n)));
    const double bound = 5.0 / std::sqrt(n * z.eta());
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const Matrix g = resolvent_direct(sample(spec, t).h, z);
      worst = std::max(worst, max_norm(error_matrix_fast(g, data.bare, data.self_energy, z)));
    }
    MESSAGE("max ||D||_max " << worst << " against " << bound);
    CHECK(worst <= bound);
  }

  TEST_CASE("local law away from the real axis") {
    const EnsembleSpec spec = EnsembleSpec::gue(256, 21);
    const std::vector<LocalLawTarget> schedule{{256, Complex(0.0, 2.0), 5}};
    const LocalLawReport rep = local_law_experiment(spec, schedule, 5);
    REQUIRE(rep.points.size() == 1);
    CHECK_FALSE(rep.points[0].failed);
    CHECK(rep.points[0].max_lambda * std::sqrt(256.0) <= 5.0);
    CHECK(rep.rows.size() == 5);
  }

  TEST_CASE("rigidity on a deterministic diagonal ensemble") {
    const int n = 101;
    const EnsembleSpec spec = diagonal_spec(n);
    const DosCurve curve = uniform_curve(-1.0, 1.0, 2001);
    const RigidityReport rep = rigidity_experiment(spec, curve, 0.05, 2, 41);
    REQUIRE_FALSE(rep.taus.empty());
    double worst = 0.0;
    for (const auto& row : rep.deviations)
      for (double d : row) worst = std::max(worst, d);
    CHECK(worst <= 2.0 / (n - 1) + 1e-9);
    for (double t : rep.taus) CHECK(curve.interpolate(t) >= 0.05);
  }

  TEST_CASE("rigidity mask excludes the edge") {
    const EnsembleSpec spec = EnsembleSpec::gue(128, 3);
    const DosCurve curve = ensemble_dos(spec, 441, 1e-3);
    const RigidityReport rep = rigidity_experiment(spec, curve, 0.05, 1);
    REQUIRE_FALSE(rep.taus.empty());
    CHECK(*std::max_element(rep.taus.begin(), rep.taus.end()) < 1.99);
    CHECK(*std::min_element(rep.taus.begin(), rep.taus.end()) > -1.99);
    CHECK(rep.thresholds.size() == 3);
  }

  TEST_CASE("delocalization") {
    const DelocalizationReport diag = delocalization_check(diagonal_spec(64), uniform_curve(-1.0, 1.0, 401), 0.05, 1);
    CHECK(diag.max_value == doctest::Approx(64.0));
  }

  TEST_CASE("banded kernel delocalizes like GUE" * doctest::description("slow")) {
    const int n = 1024;
    const EnsembleSpec gue = EnsembleSpec::gue(n, 31);
    const EnsembleSpec cor = EnsembleSpec::correlated(n, 31);
    const DelocalizationReport a = delocalization_check(gue, ensemble_dos(gue, 441), 0.05, 3);
    const DelocalizationReport b = delocalization_check(cor, ensemble_dos(cor, 441), 0.05, 3);
    MESSAGE("GUE max " << a.max_value << ", correlated max " << b.max_value);
    CHECK(a.max_value <= 30.0);
    CHECK(b.max_value <= 2.0 * a.max_value);
  }

  TEST_CASE("gap statistics") {
    const EnsembleSpec spec = EnsembleSpec::gue(256, 41);
    const DosCurve curve = ensemble_dos(spec, 441);
    const GapSample s = gap_statistics(spec, curve, 30, -1.0, 1.0);
    CHECK(s.records.size() >= 50);
    CHECK(std::abs(s.mean_unfolded() - 1.0) <= 0.05);
    CHECK_THROWS_AS(gap_statistics(spec, curve, 1, -0.01, 0.01), InsufficientStatistics);
    CHECK_THROWS_AS(gap_statistics(spec, curve, 5, -2.1, 1.0), InvalidArgument);
  }

  TEST_CASE("Kolmogorov-Smirnov distance") {
    CHECK(ks_distance({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(ks_distance({0.0, 0.1}, {5.0, 6.0}) == 1.0);
    CHECK(ks_distance({0.0, 1.0}, {0.5, 1.5}) == doctest::Approx(0.5));
  }

  TEST_CASE("minor resolvent") {
    const SpectralParam z(0.1, 0.05);
    const HermMatrix h = sample(EnsembleSpec::gue(8, 2), 0).h;
    const std::vector<int> none;
    const MinorResolvent full = minor_resolvent(h, none, z);
    CHECK(max_norm(full.g_b - resolvent(h, z)) <= 1e-12);

    const std::vector<int> two{1, 6};
    const MinorResolvent m = minor_resolvent(h, two, z);
    CHECK(m.kept == std::vector<int>{0, 2, 3, 4, 5, 7});
    CHECK(m.schur_residual <= 1e-12);
    std::vector<int> all(8);
    for (int x = 0; x < 8; ++x) all[x] = x;
    CHECK_THROWS_AS(minor_resolvent(h, all, z), InvalidArgument);
  }

  TEST_CASE("removed resolvent tracks the removed solution") {
    const int n = 512;
    const EnsembleSpec spec = EnsembleSpec::gue(n, 13);
    const SpectralParam z(0.1, std::pow(double(n), -0.5));
    const MdeSolution sol = solve_continued(spec.data_pair(), z);
    const std::vector<int> b{17};
    const Matrix mb = minor_solution(sol.m, b);
    for (int t = 0; t < 2; ++t) {
      const HermMatrix h = sample(spec, t).h;
      const double lambda = max_norm(resolvent(h, z) - sol.m);
      const MinorResolvent gb = minor_resolvent(h, b, z);
      CHECK(gb.schur_residual <= 1e-10);
      CHECK(max_norm(gb.g_b - mb) <= 3.0 * lambda);
    }
  }

  TEST_CASE("log-log fit") {
    const std::vector<double> x{1.0, 2.0, 4.0, 8.0};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 / std::sqrt(v));
    const ScalingFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(f.stderr_ <= 1e-12);
    CHECK(f.points == 4);
  }
}
