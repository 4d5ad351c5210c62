#pragma once
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdelab/dos.hpp"
#include "mdelab/ensemble.hpp"
#include "mdelab/rmt.hpp"

namespace mdelab {

inline constexpr int kMaxConfigDim = 8192;
inline constexpr int kMaxTrials = 100000;

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitValidation = 2, kExitNumerical = 3, kExitIo = 4 };

struct ExperimentConfig {
  std::string command;
  EnsembleSpec ensemble;
  std::optional<Complex> zeta;
  double tau_min = -2.5;
  double tau_max = 2.5;
  int tau_points = 101;
  double eta = 1e-3;
  Extrapolation extrapolation = Extrapolation::richardson3;
  std::vector<LocalLawTarget> schedule;
  SolverConfig solver;
  int trials = 20;
  double delta = 0.05;
  double window_lo = -1.0;
  double window_hi = 1.0;
  bool dump_eigenvalues = false;
  std::string output = "out";
  std::vector<std::string> only;
  // effective config (after command-line overrides), hashed into the manifest
  nlohmann::json canonical;
};

bool is_known_command(const std::string& command);

// Throws ValidationError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j, const std::string& command);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

struct RunManifest {
  std::string config_hash;
  std::string version;
  std::string started;
  std::string finished;
  std::map<std::string, std::string> artifacts;  // file name -> sha256
  nlohmann::json to_json() const;
};

struct RunResult {
  RunManifest manifest;
  int exit_code = kExitOk;
  std::string message;
};

// Runs the command, writes artifacts and manifest.json into cfg.output.
// Numerical failures are recorded in failure.json and reported through exit_code.
RunResult run_experiment(const ExperimentConfig& cfg, int threads, std::ostream& log);

struct CliOptions {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::vector<std::string> only;
};

// --threads, else MDELAB_THREADS, else 1.
int resolve_threads(std::optional<int> flag);

// Loads, validates and runs; returns the process exit code.
int run_cli(const CliOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace mdelab
