#include "mdelab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <random>

#include "mdelab/dos.hpp"
#include "mdelab/error.hpp"
#include "mdelab/generators.hpp"
#include "mdelab/rmt.hpp"
#include "mdelab/stability.hpp"

namespace mdelab {

namespace {

using nlohmann::json;

struct Entry {
  const char* id;
  const char* title;
};

constexpr Entry kCriteria[] = {
    {"AC1", "semicircle oracle"},
    {"AC2", "residual contract"},
    {"AC3", "support containment"},
    {"AC4", "spectral gap lemma"},
    {"AC5", "spectral radius identity"},
    {"AC6", "derivative of the solution map"},
    {"AC7", "exact identities"},
    {"AC8", "entrywise local law scaling"},
    {"AC9", "averaged local law scaling"},
    {"AC10", "rigidity"},
    {"AC11", "delocalization"},
    {"AC12", "gap universality"},
};

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json fit_json(const ScalingFit& f) {
  return {{"slope", f.slope}, {"stderr", f.stderr_}, {"lo", f.lo}, {"hi", f.hi}, {"points", f.points}};
}

// Deformed Wigner: A = diag(+-1) in two blocks, mean-field S.
DataPair deformed_wigner(int n) {
  RealVector d(n);
  for (int x = 0; x < n; ++x) d(x) = x < n / 2 ? -1.0 : 1.0;
  return DataPair(HermMatrix::diagonal(d), SelfEnergy::mean_field(n));
}

class Battery {
 public:
  explicit Battery(const BatteryConfig& cfg) : cfg_(cfg) {}

  CriterionResult run(const std::string& id) {
    CriterionResult r;
    r.id = id;
    for (const Entry& e : kCriteria)
      if (id == e.id) r.title = e.title;
    const auto start = std::chrono::steady_clock::now();
    try {
      if (id == "AC1") ac1(r);
      else if (id == "AC2") ac2(r);
      else if (id == "AC3") ac3(r);
      else if (id == "AC4") ac4(r);
      else if (id == "AC5") ac5(r);
      else if (id == "AC6") ac6(r);
      else if (id == "AC7") ac7(r);
      else if (id == "AC8") ac8(r);
      else if (id == "AC9") ac9(r);
      else if (id == "AC10") ac10(r);
      else if (id == "AC11") ac11(r);
      else if (id == "AC12") ac12(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // criteria with a stated runtime budget
    if (id == "AC1" && r.seconds >= 10.0) {
      r.passed = false;
      r.detail += " runtime over 10 s;";
    }
    if (id == "AC4" && r.seconds >= 30.0) {
      r.passed = false;
      r.detail += " runtime over 30 s;";
    }
    r.measured["seconds"] = r.seconds;
    return r;
  }

 private:
  void ac1(CriterionResult& r) {
    const DataPair data = wigner_data(50);
    const std::vector<double> grid = linspace(-1.8, 1.8, 73);
    const DosCurve curve = dos_on_real_line(data, grid, 1e-3, Extrapolation::richardson3, {}, cfg_.threads);
    double worst = 0.0;
    bool converged = true;
    double rho0 = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
      const double tau = curve.points[i].tau;
      const double exact = std::sqrt(4.0 - tau * tau) / (2.0 * std::numbers::pi);
      worst = std::max(worst, std::abs(curve.value(i) - exact));
      converged = converged && curve.points[i].converged;
      if (std::abs(tau) < 1e-12) rho0 = curve.value(i);
    }
    const double err0 = std::abs(rho0 - 1.0 / std::numbers::pi);
    r.measured = {{"max_abs_error", worst}, {"rho0", rho0}, {"rho0_error", err0}, {"points", curve.size()}};
    r.passed = converged && worst <= 1e-2 && err0 <= 1e-2;
  }

  void ac2(CriterionResult& r) {
    struct Case {
      std::string name;
      DataPair data;
      std::vector<Complex> zetas;
    };
    std::vector<Case> cases;
    cases.push_back({"wigner8", wigner_data(8), {{0.0, 1.0}, {0.5, 0.1}, {1.9, 0.01}, {3.0, 1e-3}}});
    for (int n : {8, 16})
      for (std::uint64_t s = 1; s <= 3; ++s)
        cases.push_back({"flat_profile_" + std::to_string(n) + "_" + std::to_string(s),
                         random_flat_data(n, cfg_.seed + s), {{0.2, 0.3}, {-0.5, 0.01}, {0.0, 1e-3}}});
    for (std::uint64_t s = 1; s <= 2; ++s)
      cases.push_back({"flat_kernel_8_" + std::to_string(s), random_flat_data(8, cfg_.seed + s, FlatKind::kernel),
                       {{0.2, 0.3}, {-0.5, 0.01}, {0.0, 1e-3}}});
    cases.push_back({"deformed32", deformed_wigner(32), {{0.0, 0.01}, {1.0, 0.01}}});
    cases.push_back({"correlated128", EnsembleSpec::correlated(128).data_pair(), {{0.0, 1e-3}, {1.0, 0.01}}});
    cases.push_back({"goe64", EnsembleSpec::goe(64).data_pair(), {{0.5, 0.01}}});

    double worst_res = 0.0;
    double min_im = std::numeric_limits<double>::infinity();
    int solves = 0;
    json failures = json::array();
    for (const Case& c : cases)
      for (Complex z : c.zetas) {
        try {
          const MdeSolution sol = solve_continued(c.data, SpectralParam(z));
          ++solves;
          worst_res = std::max(worst_res, sol.residual);
          min_im = std::min(min_im, sol.im_min_eig);
          if (!(sol.residual <= 1e-10) || !(sol.im_min_eig > 0.0))
            failures.push_back({{"case", c.name}, {"zeta", complex_json(z)}, {"residual", sol.residual}});
        } catch (const Error& e) {
          failures.push_back({{"case", c.name}, {"zeta", complex_json(z)}, {"error", e.what()}});
        }
      }
    r.measured = {{"solves", solves}, {"max_residual", worst_res}, {"min_im_eig", min_im}, {"failures", failures}};
    r.passed = failures.empty() && solves > 0;
  }

  void ac3(CriterionResult& r) {
    json pairs = json::array();
    bool ok = true;
    for (int k = 0; k < 10; ++k) {
      const DataPair data =
          random_flat_data(32, cfg_.seed + 100 + k, k % 2 == 0 ? FlatKind::variance_profile : FlatKind::kernel);
      const double kappa = support_bound(data);
      const int points = static_cast<int>(std::ceil((2.0 * kappa + 1.0) / 0.05)) + 1;
      const std::vector<double> grid = linspace(-kappa - 0.5, kappa + 0.5, points);
      const DosCurve curve = dos_on_real_line(data, grid, 2e-3, Extrapolation::richardson3, {}, cfg_.threads);
      const SupportEstimate est = estimate_support(curve, 0.01, kappa);
      const bool inside = !est.empty && est.kappa_minus >= -kappa - 0.05 && est.kappa_plus <= kappa + 0.05;
      ok = ok && inside;
      pairs.push_back({{"kappa", kappa},
                       {"kappa_minus", est.kappa_minus},
                       {"kappa_plus", est.kappa_plus},
                       {"gaps", est.gaps.size()},
                       {"contained", inside}});
    }
    r.measured = {{"pairs", pairs}};
    r.passed = ok;
  }

  void ac4(CriterionResult& r) {
    std::mt19937_64 gen(cfg_.seed + 400);
    std::uniform_real_distribution<double> tau(-1.0, 1.0), eta(0.05, 1.0);
    const int dims[] = {4, 6, 8};
    json ops = json::array();
    bool ok = true;
    double min_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
      const int n = dims[k % 3];
      const DataPair data =
          random_flat_data(n, cfg_.seed + 400 + k, k % 2 == 0 ? FlatKind::variance_profile : FlatKind::kernel);
      const SpectralParam z(tau(gen), eta(gen));
      const MdeSolution sol = solve_continued(data, z);
      const SaturationData sat = compute_saturation(sol, data.self_energy);
      const SuperOperator t = Complex(1.0 / sat.sp_radius) * sat.f;
      const SandwichBounds b = fit_sandwich_bounds(t, cfg_.seed + k);
      const GapBounds g = spectral_gap_verify(t, b.gamma, b.Gamma, cfg_.seed + k);
      ok = ok && g.passed();
      min_margin = std::min(min_margin, g.theta_observed - g.theta_predicted);
      ops.push_back({{"n", n},
                     {"zeta", complex_json(z.value())},
                     {"gamma", g.gamma},
                     {"Gamma", g.Gamma},
                     {"theta_predicted", g.theta_predicted},
                     {"theta_observed", g.theta_observed},
                     {"top_eigenvalue", g.top_eigenvalue},
                     {"eigenmatrix_min", g.eigenmatrix_min},
                     {"eigenmatrix_max", g.eigenmatrix_max},
                     {"passed", g.passed()}});
    }
    r.measured = {{"operators", ops}, {"min_gap_margin", min_margin}};
    r.passed = ok;
  }

  void ac5(CriterionResult& r) {
    const DataPair w = wigner_data(8);
    const MdeSolution ws = solve_at(w, SpectralParam(0.0, 1.0));
    const SaturationData wsat = compute_saturation(ws, w.self_energy);
    const double wig_err = spectral_radius_identity_check(wsat, ws, support_bound(w)).relative_error;

    int checked = 0, skipped = 0;
    double worst = 0.0;
    for (int n : {4, 8, 12})
      for (int s = 0; s < 3; ++s)
        for (FlatKind kind : {FlatKind::variance_profile, FlatKind::kernel}) {
          const DataPair data = random_flat_data(n, cfg_.seed + 500 + 10 * n + s, kind);
          const double kappa = support_bound(data);
          for (double tau : {-0.5, 0.0, 0.5})
            for (double eta : {0.1, 0.3, 1.0}) {
              const MdeSolution sol = solve_continued(data, SpectralParam(tau, eta));
              const SaturationData sat = compute_saturation(sol, data.self_energy);
              const RadiusIdentityCheck c = spectral_radius_identity_check(sat, sol, kappa);
              if (!c.hypotheses_met) {
                ++skipped;
                continue;
              }
              ++checked;
              worst = std::max(worst, c.relative_error);
            }
        }
    r.measured = {{"wigner_relative_error", wig_err},
                  {"checked", checked},
                  {"skipped_hypothesis_not_met", skipped},
                  {"max_relative_error", worst}};
    r.passed = wig_err <= 1e-12 && checked > 0 && worst <= 1e-8;
  }

  // minimum observed order over directions and consecutive step pairs
  double fd_order(const DataPair& data, SpectralParam z, std::uint64_t seed, json& log) {
    const int n = data.dim();
    const MdeSolution sol = solve_continued(data, z);
    const DerivativeOperator d = derivative_operator(sol, data.self_energy);
    const double steps[] = {1e-2, 5e-3, 2.5e-3};
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 5; ++k) {
      Matrix dir = random_hermitian(n, seed + k);
      dir /= max_norm(dir);
      const Matrix exact = d.derivative(dir);
      std::vector<double> err;
      for (double t : steps) {
        const Matrix gp = solve_perturbed(data, z, t * dir, sol.m);
        const Matrix gm = solve_perturbed(data, z, -t * dir, sol.m);
        err.push_back(max_norm((gp - gm) / (2.0 * t) - exact));
      }
      json orders = json::array();
      for (std::size_t i = 0; i + 1 < err.size(); ++i) {
        const double p = std::log(err[i] / err[i + 1]) / std::log(steps[i] / steps[i + 1]);
        orders.push_back(p);
        worst = std::min(worst, p);
      }
      log.push_back({{"n", n}, {"zeta", complex_json(z.value())}, {"errors", err}, {"orders", orders}});
    }
    return worst;
  }

  void ac6(CriterionResult& r) {
    json log = json::array();
    const double o1 = fd_order(wigner_data(8), SpectralParam(0.3, 0.4), cfg_.seed + 600, log);
    const double o2 =
        fd_order(random_flat_data(8, cfg_.seed + 601), SpectralParam(-0.2, 0.3), cfg_.seed + 610, log);
    r.measured = {{"wigner_min_order", o1}, {"flat_min_order", o2}, {"directions", log}};
    r.passed = o1 >= 1.9 && o2 >= 1.9;
  }

  void ac7(CriterionResult& r) {
    const SpectralParam z(0.3, 0.1);
    double ward = 0.0, ident = 0.0, schur = 0.0;
    for (int which = 0; which < 2; ++which) {
      const EnsembleSpec spec = which == 0 ? EnsembleSpec::gue(64, cfg_.seed + 700)
                                           : EnsembleSpec::correlated(64, cfg_.seed + 701);
      const DataPair data = spec.data_pair();
      const Sampler sampler(spec);
      for (int t = 0; t < 10; ++t) {
        const HermMatrix h = sampler.sample(t).h;
        const Matrix g = resolvent(h, z);
        ward = std::max(ward, ward_check(g, z));
        ident = std::max(ident, error_matrix(h, g, data.bare, data.self_energy, z).identity_residual);
        const int removed[] = {t % 64, (7 * t + 3) % 64};
        schur = std::max(schur, minor_resolvent(h, removed, z).schur_residual);
      }
    }
    r.measured = {{"draws", 20}, {"max_ward", ward}, {"max_identity", ident}, {"max_schur", schur}};
    r.passed = ward <= 1e-10 && ident <= 1e-12 && schur <= 1e-10;
  }

  struct LocalLawPair {
    LocalLawReport gue;
    LocalLawReport correlated;
  };

  const LocalLawPair& local_law() {
    if (local_law_) return *local_law_;
    std::vector<LocalLawTarget> schedule;
    const std::map<int, int> trials{{256, 320}, {512, 160}, {1024, 60}, {2048, 40}};
    for (const auto& [n, count] : trials) schedule.push_back({n, Complex(0.0, std::pow(n, -0.6)), count});
    LocalLawPair p;
    p.gue = local_law_experiment(EnsembleSpec::gue(256, cfg_.seed + 800), schedule, 20, 0.05, cfg_.threads);
    p.correlated =
        local_law_experiment(EnsembleSpec::correlated(256, cfg_.seed + 801), schedule, 20, 0.05, cfg_.threads);
    local_law_ = std::move(p);
    return *local_law_;
  }

  static json points_json(const LocalLawReport& rep) {
    json a = json::array();
    for (const LocalLawPoint& p : rep.points)
      a.push_back({{"n", p.n},
                   {"eta", p.zeta.imag()},
                   {"trials", p.trials},
                   {"rho", p.rho},
                   {"failed", p.failed},
                   {"median_lambda", p.median_lambda},
                   {"median_trace_err", p.median_trace_err},
                   {"median_d", p.median_d},
                   {"max_ward", p.max_ward}});
    return a;
  }

  static bool all_ok(const LocalLawReport& rep) {
    for (const LocalLawPoint& p : rep.points)
      if (p.failed || !p.bulk) return false;
    return !rep.points.empty();
  }

  // Slope after dividing the max over N^2 entries by its Gaussian extreme-value scale sqrt(2 log N^2).
  // Reported for diagnosis only; the pass rule uses the raw fit.
  static ScalingFit extreme_value_normalized(const LocalLawReport& rep) {
    std::vector<double> x, y;
    for (const LocalLawPoint& p : rep.points) {
      if (p.failed) continue;
      x.push_back(p.n * p.zeta.imag());
      y.push_back(p.median_lambda / std::sqrt(4.0 * std::log(static_cast<double>(p.n))));
    }
    return fit_loglog(x, y);
  }

  void ac8(CriterionResult& r) {
    const LocalLawPair& p = local_law();
    auto in = [](const ScalingFit& f) { return f.slope >= -0.65 && f.slope <= -0.35; };
    r.measured = {{"gue",
                   {{"fit", fit_json(p.gue.entrywise)},
                    {"normalized_fit", fit_json(extreme_value_normalized(p.gue))},
                    {"monotone", p.gue.monotone},
                    {"points", points_json(p.gue)}}},
                  {"correlated",
                   {{"fit", fit_json(p.correlated.entrywise)},
                    {"normalized_fit", fit_json(extreme_value_normalized(p.correlated))},
                    {"monotone", p.correlated.monotone},
                    {"points", points_json(p.correlated)}}},
                  {"band", {-0.65, -0.35}}};
    r.passed = all_ok(p.gue) && all_ok(p.correlated) && in(p.gue.entrywise) && in(p.correlated.entrywise);
    if (!r.passed && all_ok(p.gue) && all_ok(p.correlated))
      r.detail += " raw slopes " + fmt_slope(p.gue.entrywise) + " (GUE), " + fmt_slope(p.correlated.entrywise) +
                  " (correlated); divided by sqrt(2 log N^2): " + fmt_slope(extreme_value_normalized(p.gue)) + ", " +
                  fmt_slope(extreme_value_normalized(p.correlated)) + ";";
  }

  static std::string fmt_slope(const ScalingFit& f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", f.slope);
    return buf;
  }

  void ac9(CriterionResult& r) {
    const LocalLawPair& p = local_law();
    auto in = [](const ScalingFit& f) { return f.slope >= -1.3 && f.slope <= -0.7; };
    r.measured = {{"gue", {{"fit", fit_json(p.gue.trace)}, {"points", points_json(p.gue)}}},
                  {"correlated", {{"fit", fit_json(p.correlated.trace)}, {"points", points_json(p.correlated)}}},
                  {"band", {-1.3, -0.7}}};
    r.passed = all_ok(p.gue) && all_ok(p.correlated) && in(p.gue.trace) && in(p.correlated.trace);
  }

  const DosCurve& gue_curve() {
    if (!gue_curve_) gue_curve_ = ensemble_dos(EnsembleSpec::gue(1024), 881, 1e-3, cfg_.threads);
    return *gue_curve_;
  }

  void ac10(CriterionResult& r) {
    const int n = 1024;
    const RigidityReport rep =
        rigidity_experiment(EnsembleSpec::gue(n, cfg_.seed + 1000), gue_curve(), 0.05, 10, 121, cfg_.threads);
    double worst = 0.0;
    for (const auto& dev : rep.deviations)
      for (double d : dev) worst = std::max(worst, d);
    r.measured = {{"taus", rep.taus.size()},
                  {"thresholds", rep.thresholds},
                  {"fraction_within", rep.fraction_within},
                  {"max_deviation", worst}};
    r.passed = !rep.taus.empty() && rep.fraction_within[1] >= 0.9;
  }

  void ac11(CriterionResult& r) {
    const DelocalizationReport rep =
        delocalization_check(EnsembleSpec::gue(1024, cfg_.seed + 1100), gue_curve(), 0.05, 10, cfg_.threads);
    const double frac = rep.fraction_below(30.0);
    r.measured = {{"vectors", rep.vectors},
                  {"max_value", rep.max_value},
                  {"constant_over_log2", rep.constant},
                  {"fraction_below_30", frac}};
    r.passed = rep.vectors > 0 && frac >= 0.99;
  }

  void ac12(CriterionResult& r) {
    const int n = 1024, trials = 50;
    const EnsembleSpec corr = EnsembleSpec::correlated(n, cfg_.seed + 1200);
    const DosCurve corr_curve = ensemble_dos(corr, 881, 1e-3, cfg_.threads);
    const GapSample c = gap_statistics(corr, corr_curve, trials, -1.0, 1.0, 0.05, 0, cfg_.threads);
    const GapSample ref =
        gap_statistics(EnsembleSpec::gue(n, cfg_.seed + 1201), gue_curve(), trials, -1.0, 1.0, 0.05, 0, cfg_.threads);
    const GapSample null =
        gap_statistics(EnsembleSpec::gue(n, cfg_.seed + 1202), gue_curve(), trials, -1.0, 1.0, 0.05, 0, cfg_.threads);
    const double ks = ks_distance(c.unfolded(), ref.unfolded());
    const double ks_null = ks_distance(null.unfolded(), ref.unfolded());
    r.measured = {{"gaps_correlated", c.records.size()},
                  {"gaps_reference", ref.records.size()},
                  {"gaps_null", null.records.size()},
                  {"mean_unfolded_correlated", c.mean_unfolded()},
                  {"mean_unfolded_reference", ref.mean_unfolded()},
                  {"ks_correlated_vs_gue", ks},
                  {"ks_gue_vs_gue", ks_null}};
    r.passed = c.records.size() >= 5000 && ref.records.size() >= 5000 && null.records.size() >= 5000 &&
               ks <= 0.1 && ks_null <= 0.03;
  }

  BatteryConfig cfg_;
  std::optional<LocalLawPair> local_law_;
  std::optional<DosCurve> gue_curve_;
};

}  // namespace

std::vector<std::string> criterion_ids() {
  std::vector<std::string> ids;
  for (const Entry& e : kCriteria) ids.emplace_back(e.id);
  return ids;
}

std::vector<CriterionResult> run_acceptance(const BatteryConfig& cfg,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  const std::vector<std::string> all = criterion_ids();
  for (const std::string& id : cfg.only)
    if (std::find(all.begin(), all.end(), id) == all.end())
      throw InvalidArgument("unknown criterion id: " + id);
  Battery battery(cfg);
  std::vector<CriterionResult> out;
  for (const std::string& id : all) {
    if (!cfg.only.empty() && std::find(cfg.only.begin(), cfg.only.end(), id) == cfg.only.end()) continue;
    out.push_back(battery.run(id));
    if (on_result) on_result(out.back());
  }
  return out;
}

json scoreboard(const std::vector<CriterionResult>& results) {
  json board = json::object();
  bool all = true;
  for (const CriterionResult& r : results) {
    board[r.id] = {{"title", r.title}, {"passed", r.passed}, {"measured", r.measured}, {"detail", r.detail}};
    all = all && r.passed;
  }
  return {{"criteria", board}, {"all_passed", all}};
}

}  // namespace mdelab
