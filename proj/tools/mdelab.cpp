#include <CLI11.hpp>
#include <iostream>

#include "mdelab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mdelab: matrix Dyson equation solver and random matrix experiments"};
  app.set_version_flag("--version", std::string(MDELAB_VERSION));
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;
    std::vector<std::string> only;
  };
  Flags f;

  const std::pair<const char*, const char*> commands[] = {
      {"solve", "solve the MDE at one spectral parameter"},
      {"dos", "self-consistent density of states on a tau grid"},
      {"stability", "saturation and stability diagnostics at one spectral parameter"},
      {"locallaw", "local law experiment over an (N, zeta) schedule"},
      {"rigidity", "eigenvalue rigidity against self-consistent quantiles"},
      {"gaps", "unfolded bulk gap statistics against a mean-field reference"},
      {"verify", "run the acceptance battery and write a scoreboard"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--seed", f.seed, "override the base seed");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--threads", f.threads, "worker threads (fallback: MDELAB_THREADS)")->check(CLI::PositiveNumber);
    if (std::string(name) == "verify")
      sub->add_option("--only", f.only, "criterion ids, e.g. AC7 or AC8,AC9")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mdelab::kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  mdelab::CliOptions opts;
  opts.command = sub->get_name();
  if (sub->count("--config")) opts.config_path = f.config;
  if (sub->count("--seed")) opts.seed = f.seed;
  if (sub->count("--out")) opts.out = f.out;
  if (sub->count("--threads")) opts.threads = f.threads;
  opts.only = f.only;
  return mdelab::run_cli(opts, std::cout, std::cerr);
}
