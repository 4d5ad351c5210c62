#include "mdelab/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "mdelab/acceptance.hpp"
#include "mdelab/error.hpp"
#include "mdelab/io.hpp"
#include "mdelab/stability.hpp"

namespace mdelab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kCommands{"solve", "dos", "stability", "locallaw", "rigidity", "gaps", "verify"};

const std::set<std::string> kTopLevel{"command", "ensemble", "zeta",   "tau",   "eta",
                                      "extrapolation", "schedule", "solver", "trials", "delta",
                                      "window", "seed", "output", "dump_eigenvalues", "only"};

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ValidationError(path + it.key(), "unknown field");
}

const json& object_at(const json& j, const std::string& key, const std::string& path) {
  const json& v = j.at(key);
  if (!v.is_object()) throw ValidationError(path + key, "must be an object");
  return v;
}

double number(const json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError(path + key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(path + key, "must be finite");
  return x;
}

std::string text(const json& j, const std::string& key, const std::string& path, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string()) throw ValidationError(path + key, "must be a string");
  return v.get<std::string>();
}

long long integer(const json& j, const std::string& key, const std::string& path, long long fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(path + key, "must be an integer");
  return v.get<long long>();
}

int ranged_int(const json& j, const std::string& key, const std::string& path, long long fallback, long long lo,
               long long hi) {
  const long long v = integer(j, key, path, fallback);
  if (v < lo || v > hi)
    throw ValidationError(path + key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

double positive(const json& j, const std::string& key, const std::string& path, double fallback) {
  const double v = number(j, key, path, fallback);
  if (!(v > 0.0)) throw ValidationError(path + key, "must be positive");
  return v;
}

BareSpec parse_bare(const json& j) {
  const std::string p = "ensemble.bare.";
  reject_unknown(j, {"kind", "levels", "amplitude", "length", "bandwidth"}, p);
  const std::string kind = text(j, "kind", p, "zero");
  if (kind == "zero") return BareSpec::zero();
  if (kind == "diagonal_profile") {
    if (!j.contains("levels") || !j.at("levels").is_array() || j.at("levels").empty())
      throw ValidationError(p + "levels", "must be a non-empty array of numbers");
    std::vector<double> levels;
    for (const json& v : j.at("levels")) {
      if (!v.is_number()) throw ValidationError(p + "levels", "must contain numbers only");
      levels.push_back(v.get<double>());
    }
    return BareSpec::diagonal_profile(levels);
  }
  if (kind == "banded")
    return BareSpec::banded(number(j, "amplitude", p, 1.0), positive(j, "length", p, 1.0),
                            ranged_int(j, "bandwidth", p, 1, 0, kMaxConfigDim));
  throw ValidationError(p + "kind", "expected zero, diagonal_profile or banded");
}

KernelSpec parse_kernel(const json& j) {
  const std::string p = "ensemble.kernel.";
  reject_unknown(j, {"kind", "scale", "filter"}, p);
  const std::string kind = text(j, "kind", p, "mean_field");
  if (kind == "zero") return KernelSpec::zero();
  if (kind == "mean_field") {
    const double s = number(j, "scale", p, 1.0);
    if (s < 0.0) throw ValidationError(p + "scale", "must be nonnegative");
    return KernelSpec::mean_field(s);
  }
  if (kind == "moving_average") {
    if (!j.contains("filter")) return KernelSpec::moving_average(default_correlated_filter());
    const json& f = j.at("filter");
    if (!f.is_array() || f.empty()) throw ValidationError(p + "filter", "must be a square array of rows");
    const auto side = static_cast<Eigen::Index>(f.size());
    if (side % 2 == 0) throw ValidationError(p + "filter", "side must be odd");
    RealMatrix phi(side, side);
    for (Eigen::Index i = 0; i < side; ++i) {
      const json& row = f.at(static_cast<std::size_t>(i));
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != side)
        throw ValidationError(p + "filter", "must be square");
      for (Eigen::Index k = 0; k < side; ++k) {
        const json& v = row.at(static_cast<std::size_t>(k));
        if (!v.is_number()) throw ValidationError(p + "filter", "must contain numbers only");
        phi(i, k) = v.get<double>();
      }
    }
    return KernelSpec::moving_average(phi);
  }
  throw ValidationError(p + "kind", "expected zero, mean_field or moving_average");
}

EnsembleSpec parse_ensemble(const json& j) {
  const std::string p = "ensemble.";
  reject_unknown(j, {"n", "beta", "bare", "kernel", "metric"}, p);
  if (!j.contains("n")) throw ValidationError(p + "n", "required");
  EnsembleSpec e;
  e.n = ranged_int(j, "n", p, 0, 1, kMaxConfigDim);
  const int beta = ranged_int(j, "beta", p, 2, 1, 2);
  e.symmetry = beta == 1 ? Symmetry::real : Symmetry::complex;
  if (j.contains("bare")) e.bare = parse_bare(object_at(j, "bare", p));
  if (j.contains("kernel")) e.kernel = parse_kernel(object_at(j, "kernel", p));
  const std::string metric = text(j, "metric", p, "circle");
  if (metric == "circle") e.metric = MetricKind::circle;
  else if (metric == "line") e.metric = MetricKind::line;
  else if (metric == "none") e.metric = MetricKind::none;
  else throw ValidationError(p + "metric", "expected circle, line or none");
  if (e.bare.kind == BareSpec::Kind::diagonal_profile && static_cast<int>(e.bare.levels.size()) > e.n)
    throw ValidationError(p + "bare.levels", "more levels than N");
  return e;
}

std::vector<LocalLawTarget> parse_schedule(const json& j) {
  const std::string p = "schedule.";
  reject_unknown(j, {"n", "tau", "eta_exponent", "trials", "points"}, p);
  std::vector<LocalLawTarget> out;
  if (j.contains("points")) {
    if (!j.at("points").is_array()) throw ValidationError(p + "points", "must be an array");
    int idx = 0;
    for (const json& pt : j.at("points")) {
      const std::string q = p + "points[" + std::to_string(idx++) + "].";
      if (!pt.is_object()) throw ValidationError(q, "must be an object");
      reject_unknown(pt, {"n", "re", "im", "trials"}, q);
      LocalLawTarget t;
      t.n = ranged_int(pt, "n", q, 0, 1, kMaxConfigDim);
      t.zeta = Complex(number(pt, "re", q, 0.0), positive(pt, "im", q, 0.0));
      t.trials = ranged_int(pt, "trials", q, 0, 0, kMaxTrials);
      out.push_back(t);
    }
    return out;
  }
  if (!j.contains("n") || !j.at("n").is_array() || j.at("n").empty())
    throw ValidationError(p + "n", "must be a non-empty array of dimensions");
  const double tau = number(j, "tau", p, 0.0);
  const double expo = number(j, "eta_exponent", p, -0.6);
  if (!(expo < 0.0)) throw ValidationError(p + "eta_exponent", "must be negative");
  std::vector<int> trials;
  if (j.contains("trials")) {
    if (!j.at("trials").is_array() || j.at("trials").size() != j.at("n").size())
      throw ValidationError(p + "trials", "must be an array matching schedule.n");
    for (const json& v : j.at("trials")) {
      if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > kMaxTrials)
        throw ValidationError(p + "trials", "entries must be integers in [1, 100000]");
      trials.push_back(v.get<int>());
    }
  }
  for (std::size_t i = 0; i < j.at("n").size(); ++i) {
    const json& v = j.at("n").at(i);
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > kMaxConfigDim)
      throw ValidationError(p + "n", "entries must be integers in [1, 8192]");
    const int n = v.get<int>();
    out.push_back({n, Complex(tau, std::pow(static_cast<double>(n), expo)), trials.empty() ? 0 : trials[i]});
  }
  return out;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string s;
  bool first = true;
  for (const std::string& c : cells) {
    if (!first) s += ',';
    s += c;
    first = false;
  }
  return s + "\r\n";
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory " + dir_.string());
  }

  void write(const std::string& name, const std::string& bytes) {
    const fs::path p = dir_ / name;
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + p.string());
    os << bytes;
    os.close();
    if (!os) throw IoError("write failed for " + p.string());
    checksums_[name] = sha256_hex(bytes);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  const std::map<std::string, std::string>& checksums() const { return checksums_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::map<std::string, std::string> checksums_;
};

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json fit_json(const ScalingFit& f) {
  return {{"slope", f.slope}, {"stderr", f.stderr_}, {"lo", f.lo}, {"hi", f.hi}, {"points", f.points}};
}

SpectralParam zeta_of(const ExperimentConfig& cfg) {
  if (!cfg.zeta) throw ValidationError("zeta", "required for " + cfg.command);
  return SpectralParam(*cfg.zeta);
}

int cmd_solve(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const DataPair data = cfg.ensemble.data_pair();
  const SpectralParam z = zeta_of(cfg);
  const MdeSolution sol = solve_continued(data, z, cfg.solver);
  json diag = json::array();
  for (Eigen::Index i = 0; i < sol.m.rows(); ++i) diag.push_back(complex_json(sol.m(i, i)));
  w.write_json("solve.json", {{"n", data.dim()},
                              {"zeta", complex_json(z.value())},
                              {"m_diag", diag},
                              {"avg_trace", complex_json(avg_trace(sol.m))},
                              {"residual", sol.residual},
                              {"iterations", sol.iterations},
                              {"method", to_string(sol.method)},
                              {"im_min_eig", sol.im_min_eig},
                              {"kappa", support_bound(data)},
                              {"dos", harmonic_dos(sol)}});
  return kExitOk;
}

int cmd_dos(const ExperimentConfig& cfg, ArtifactWriter& w, int threads) {
  const DataPair data = cfg.ensemble.data_pair();
  const std::vector<double> grid = linspace(cfg.tau_min, cfg.tau_max, cfg.tau_points);
  const DosCurve curve = dos_on_real_line(data, grid, cfg.eta, cfg.extrapolation, cfg.solver, threads);
  std::ostringstream csv;
  curve.write_csv(csv);
  w.write("dos.csv", csv.str());
  const double kappa = support_bound(data);
  const SupportEstimate est = estimate_support(curve, cfg.delta, kappa);
  const HolderReport h = holder_check(curve);
  json gaps = json::array();
  for (const auto& g : est.gaps) gaps.push_back({g.first, g.second});
  int failed = 0;
  for (const DosPoint& p : curve.points) failed += p.converged ? 0 : 1;
  w.write_json("dos.json", {{"kappa", kappa},
                            {"total_mass", curve.total_mass()},
                            {"support",
                             {{"empty", est.empty},
                              {"kappa_minus", est.kappa_minus},
                              {"kappa_plus", est.kappa_plus},
                              {"gaps", gaps},
                              {"within_bound", est.within_bound.value_or(false)}}},
                            {"holder", {{"exponents", h.exponents}, {"constants", h.constants}, {"best_exponent", h.best_exponent}}},
                            {"unconverged_points", failed}});
  return failed == 0 ? kExitOk : kExitNumerical;
}

int cmd_stability(const ExperimentConfig& cfg, ArtifactWriter& w) {
  const DataPair data = cfg.ensemble.data_pair();
  const MdeSolution sol = solve_continued(data, zeta_of(cfg), cfg.solver);
  json j = to_json(stability_report(sol, data.self_energy, support_bound(data)));
  j["zeta"] = complex_json(sol.zeta.value());
  j["n"] = data.dim();
  w.write_json("stability.json", j);
  return kExitOk;
}

int cmd_locallaw(const ExperimentConfig& cfg, ArtifactWriter& w, int threads) {
  if (cfg.schedule.empty()) throw ValidationError("schedule", "required for locallaw");
  const LocalLawReport rep =
      local_law_experiment(cfg.ensemble, cfg.schedule, cfg.trials, cfg.delta, threads, cfg.solver);
  std::string csv = csv_row({"N", "re_zeta", "im_zeta", "trial", "lambda_max", "trace_err", "d_max", "ward_resid"});
  for (const LocalLawRow& r : rep.rows)
    csv += csv_row({std::to_string(r.n), fmt17(r.zeta.real()), fmt17(r.zeta.imag()), std::to_string(r.trial),
                    fmt17(r.lambda_max), fmt17(r.trace_err), fmt17(r.d_max), fmt17(r.ward_resid)});
  w.write("locallaw.csv", csv);
  json pts = json::array();
  bool failed = false;
  for (const LocalLawPoint& p : rep.points) {
    failed = failed || p.failed;
    pts.push_back({{"n", p.n},
                   {"zeta", complex_json(p.zeta)},
                   {"rho", p.rho},
                   {"bulk", p.bulk},
                   {"failed", p.failed},
                   {"failure", p.failure},
                   {"trials", p.trials},
                   {"median_lambda", p.median_lambda},
                   {"median_trace_err", p.median_trace_err},
                   {"median_d", p.median_d},
                   {"max_ward", p.max_ward}});
  }
  w.write_json("locallaw.json", {{"points", pts},
                                 {"entrywise_fit", fit_json(rep.entrywise)},
                                 {"trace_fit", fit_json(rep.trace)},
                                 {"monotone", rep.monotone}});
  return failed ? kExitNumerical : kExitOk;
}

int cmd_rigidity(const ExperimentConfig& cfg, ArtifactWriter& w, int threads) {
  const DosCurve curve = ensemble_dos(cfg.ensemble, cfg.tau_points, cfg.eta, threads, cfg.solver);
  const RigidityReport rep =
      rigidity_experiment(cfg.ensemble, curve, cfg.delta, cfg.trials, 121, threads, cfg.dump_eigenvalues);
  std::string csv = csv_row({"trial", "tau", "index", "deviation"});
  for (std::size_t t = 0; t < rep.deviations.size(); ++t)
    for (std::size_t k = 0; k < rep.taus.size(); ++k)
      csv += csv_row({std::to_string(t), fmt17(rep.taus[k]), std::to_string(rep.indices[k]),
                      fmt17(rep.deviations[t][k])});
  w.write("rigidity.csv", csv);
  if (cfg.dump_eigenvalues) {
    std::string ev = csv_row({"trial", "index", "lambda"});
    for (std::size_t t = 0; t < rep.eigenvalues.size(); ++t)
      for (Eigen::Index i = 0; i < rep.eigenvalues[t].size(); ++i)
        ev += csv_row({std::to_string(t), std::to_string(i + 1), fmt17(rep.eigenvalues[t](i))});
    w.write("eigenvalues.csv", ev);
  }
  w.write_json("rigidity.json", {{"thresholds", rep.thresholds},
                                 {"fraction_within", rep.fraction_within},
                                 {"taus", rep.taus.size()},
                                 {"trials", rep.deviations.size()}});
  return kExitOk;
}

int cmd_gaps(const ExperimentConfig& cfg, ArtifactWriter& w, int threads) {
  const DosCurve curve = ensemble_dos(cfg.ensemble, cfg.tau_points, cfg.eta, threads, cfg.solver);
  const GapSample sample =
      gap_statistics(cfg.ensemble, curve, cfg.trials, cfg.window_lo, cfg.window_hi, cfg.delta, 0, threads);
  // reference: mean-field ensemble of the same N and symmetry, independent seed
  EnsembleSpec ref = cfg.ensemble.symmetry == Symmetry::complex ? EnsembleSpec::gue(cfg.ensemble.n)
                                                                : EnsembleSpec::goe(cfg.ensemble.n);
  ref.seed = cfg.ensemble.seed + 1;
  const DosCurve ref_curve = ensemble_dos(ref, cfg.tau_points, cfg.eta, threads, cfg.solver);
  const GapSample reference =
      gap_statistics(ref, ref_curve, cfg.trials, cfg.window_lo, cfg.window_hi, cfg.delta, 0, threads);
  std::string csv = csv_row({"trial", "index", "gap", "unfolded_gap"});
  for (const GapRecord& r : sample.records)
    csv += csv_row({std::to_string(r.trial), std::to_string(r.index), fmt17(r.gap), fmt17(r.unfolded)});
  w.write("gaps.csv", csv);
  w.write_json("gaps.json", {{"gaps", sample.records.size()},
                             {"reference_gaps", reference.records.size()},
                             {"mean_unfolded", sample.mean_unfolded()},
                             {"reference_mean_unfolded", reference.mean_unfolded()},
                             {"ks_distance", ks_distance(sample.unfolded(), reference.unfolded())}});
  return kExitOk;
}

int cmd_verify(const ExperimentConfig& cfg, ArtifactWriter& w, int threads, std::ostream& log) {
  BatteryConfig b;
  b.threads = threads;
  b.seed = cfg.ensemble.seed;
  b.only = cfg.only;
  const auto results = run_acceptance(b, [&log](const CriterionResult& r) {
    log << (r.passed ? "PASS " : "FAIL ") << r.id << " " << r.title << " (" << std::fixed << std::setprecision(1)
        << r.seconds << " s)" << std::defaultfloat << "\n";
    log.flush();
  });
  const json board = scoreboard(results);
  w.write_json("scoreboard.json", board);
  return board.at("all_passed").get<bool>() ? kExitOk : kExitNumerical;
}

}  // namespace

bool is_known_command(const std::string& command) { return kCommands.count(command) > 0; }

ExperimentConfig parse_config(const json& j, const std::string& command) {
  if (!j.is_object()) throw ValidationError("config", "must be a JSON object");
  if (!is_known_command(command)) throw ValidationError("command", "unknown command " + command);
  reject_unknown(j, kTopLevel, "");
  if (j.contains("command") && (!j.at("command").is_string() || j.at("command").get<std::string>() != command))
    throw ValidationError("command", "config is for a different command");
  ExperimentConfig cfg;
  cfg.command = command;
  if (j.contains("ensemble")) {
    cfg.ensemble = parse_ensemble(object_at(j, "ensemble", ""));
  } else if (command != "verify") {
    throw ValidationError("ensemble", "required");
  }
  if (j.contains("zeta")) {
    const json& z = object_at(j, "zeta", "");
    reject_unknown(z, {"re", "im"}, "zeta.");
    cfg.zeta = Complex(number(z, "re", "zeta.", 0.0), positive(z, "im", "zeta.", 0.0));
  }
  if (j.contains("tau")) {
    const json& t = object_at(j, "tau", "");
    reject_unknown(t, {"min", "max", "points"}, "tau.");
    cfg.tau_min = number(t, "min", "tau.", cfg.tau_min);
    cfg.tau_max = number(t, "max", "tau.", cfg.tau_max);
    cfg.tau_points = ranged_int(t, "points", "tau.", cfg.tau_points, 2, 100000);
    if (!(cfg.tau_min < cfg.tau_max)) throw ValidationError("tau.max", "must exceed tau.min");
  }
  cfg.eta = positive(j, "eta", "", cfg.eta);
  if (j.contains("extrapolation")) {
    const json& e = j.at("extrapolation");
    if (e == "none") cfg.extrapolation = Extrapolation::none;
    else if (e == "richardson3") cfg.extrapolation = Extrapolation::richardson3;
    else throw ValidationError("extrapolation", "expected none or richardson3");
  }
  if (j.contains("schedule")) cfg.schedule = parse_schedule(object_at(j, "schedule", ""));
  if (j.contains("solver")) {
    const json& s = object_at(j, "solver", "");
    reject_unknown(s, {"tol", "max_iter", "damping", "newton", "newton_switch"}, "solver.");
    cfg.solver.tol = positive(s, "tol", "solver.", cfg.solver.tol);
    cfg.solver.max_iter = ranged_int(s, "max_iter", "solver.", cfg.solver.max_iter, 1, 10000000);
    cfg.solver.damping = number(s, "damping", "solver.", cfg.solver.damping);
    cfg.solver.newton_switch = positive(s, "newton_switch", "solver.", cfg.solver.newton_switch);
    if (s.contains("newton")) {
      if (!s.at("newton").is_boolean()) throw ValidationError("solver.newton", "must be a boolean");
      cfg.solver.newton = s.at("newton").get<bool>();
    }
    try {
      cfg.solver.validate();
    } catch (const Error& e) {
      throw ValidationError("solver", e.what());
    }
  }
  cfg.trials = ranged_int(j, "trials", "", cfg.trials, 1, kMaxTrials);
  cfg.delta = positive(j, "delta", "", cfg.delta);
  if (j.contains("window")) {
    const json& w = object_at(j, "window", "");
    reject_unknown(w, {"lo", "hi"}, "window.");
    cfg.window_lo = number(w, "lo", "window.", cfg.window_lo);
    cfg.window_hi = number(w, "hi", "window.", cfg.window_hi);
    if (!(cfg.window_lo < cfg.window_hi)) throw ValidationError("window.hi", "must exceed window.lo");
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ValidationError("seed", "must be a nonnegative integer");
    cfg.ensemble.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("output")) {
    if (!j.at("output").is_string() || j.at("output").get<std::string>().empty())
      throw ValidationError("output", "must be a non-empty string");
    cfg.output = j.at("output").get<std::string>();
  }
  if (j.contains("dump_eigenvalues")) {
    if (!j.at("dump_eigenvalues").is_boolean()) throw ValidationError("dump_eigenvalues", "must be a boolean");
    cfg.dump_eigenvalues = j.at("dump_eigenvalues").get<bool>();
  }
  if (j.contains("only")) {
    if (!j.at("only").is_array()) throw ValidationError("only", "must be an array of criterion ids");
    for (const json& v : j.at("only")) {
      if (!v.is_string()) throw ValidationError("only", "must contain strings");
      const std::vector<std::string> ids = criterion_ids();
      if (std::find(ids.begin(), ids.end(), v.get<std::string>()) == ids.end())
        throw ValidationError("only", "unknown criterion " + v.get<std::string>());
      cfg.only.push_back(v.get<std::string>());
    }
  }
  if (command == "solve" || command == "stability") zeta_of(cfg);
  if (command == "locallaw" && cfg.schedule.empty()) throw ValidationError("schedule", "required for locallaw");
  // the output directory does not change results, so it stays out of the hash
  cfg.canonical = j;
  cfg.canonical.erase("output");
  cfg.canonical["command"] = command;
  return cfg;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return sha256_hex(ss.str());
}

json RunManifest::to_json() const {
  return {{"config_hash", config_hash},
          {"version", version},
          {"started", started},
          {"finished", finished},
          {"artifacts", artifacts}};
}

RunResult run_experiment(const ExperimentConfig& cfg, int threads, std::ostream& log) {
  RunResult res;
  res.manifest.version = MDELAB_VERSION;
  res.manifest.config_hash = sha256_hex(cfg.canonical.dump());
  res.manifest.started = utc_now();
  ArtifactWriter w(cfg.output);
  try {
    if (cfg.command == "solve") res.exit_code = cmd_solve(cfg, w);
    else if (cfg.command == "dos") res.exit_code = cmd_dos(cfg, w, threads);
    else if (cfg.command == "stability") res.exit_code = cmd_stability(cfg, w);
    else if (cfg.command == "locallaw") res.exit_code = cmd_locallaw(cfg, w, threads);
    else if (cfg.command == "rigidity") res.exit_code = cmd_rigidity(cfg, w, threads);
    else if (cfg.command == "gaps") res.exit_code = cmd_gaps(cfg, w, threads);
    else if (cfg.command == "verify") res.exit_code = cmd_verify(cfg, w, threads, log);
  } catch (const ValidationError&) {
    throw;
  } catch (const InvalidSpec&) {
    throw;
  } catch (const Error& e) {
    json f = {{"command", cfg.command}, {"error", e.what()}};
    if (const auto* c = dynamic_cast<const ConvergenceFailure*>(&e)) {
      f["eta"] = c->eta();
      f["last_residual"] = c->last_residual();
    }
    if (cfg.zeta) f["zeta"] = complex_json(*cfg.zeta);
    w.write_json("failure.json", f);
    res.exit_code = kExitNumerical;
    res.message = e.what();
  }
  res.manifest.finished = utc_now();
  res.manifest.artifacts = w.checksums();
  w.write_json("manifest.json", res.manifest.to_json());
  return res;
}

int resolve_threads(std::optional<int> flag) {
  if (flag) return std::max(1, *flag);
  if (const char* env = std::getenv("MDELAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  return 1;
}

int run_cli(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  if (!is_known_command(opts.command)) {
    err << "unknown command: " << opts.command << "\n";
    return kExitUsage;
  }
  json j = json::object();
  if (opts.config_path) {
    std::ifstream is(*opts.config_path);
    if (!is) {
      err << "config: cannot read " << *opts.config_path << "\n";
      return kExitIo;
    }
    try {
      j = json::parse(is);
    } catch (const json::parse_error& e) {
      err << "config: malformed JSON: " << e.what() << "\n";
      return kExitValidation;
    }
  } else if (opts.command != "verify") {
    err << "--config is required for " << opts.command << "\n";
    return kExitUsage;
  }
  if (opts.seed && j.is_object()) j["seed"] = *opts.seed;
  if (opts.out && j.is_object()) j["output"] = *opts.out;
  if (!opts.only.empty() && j.is_object()) j["only"] = opts.only;
  ExperimentConfig cfg;
  try {
    cfg = parse_config(j, opts.command);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  }
  try {
    const RunResult r = run_experiment(cfg, resolve_threads(opts.threads), out);
    if (r.exit_code == kExitNumerical && !r.message.empty()) err << "numerical failure: " << r.message << "\n";
    out << "wrote " << (fs::path(cfg.output) / "manifest.json").string() << "\n";
    return r.exit_code;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InvalidSpec& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace mdelab
