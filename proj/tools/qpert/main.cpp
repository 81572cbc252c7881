#include <iostream>

#include <CLI11.hpp>

#include "pipelines.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qpert: perturbative quasi-particles of weakly perturbed lattice systems"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  std::uint64_t seed = 0x5eed;
  app.add_option("--config", config_path, "Experiment configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads for contour nodes and time points")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", seed, "Seed for Lanczos start vectors")->capture_default_str();
  app.footer("Environment: QPERT_MAX_DIM overrides the full-space dimension ceiling.");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"validate", "Check the local Hamiltonian and perturbation"},
      {"solve-gs", "Ground-state collection by fixed-point iteration"},
      {"spectrum-check", "Exact spectrum against the free-level disks"},
      {"hoppings", "One-particle basis, hopping amplitudes and Gram decay"},
      {"dispersion", "Dispersion relation, band comparison and cone check"},
      {"scatter", "Cook integrand and isometry scan for wave packets"},
      {"report", "Aggregate all checks_*.csv files in the output directory"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);
  auto* ed = app.add_subcommand("ed", "Exact-diagonalization oracle");
  std::string ed_mode;
  ed->add_option("mode", ed_mode, "spectrum | band | evolve")
      ->required()
      ->check(CLI::IsMember({"spectrum", "band", "evolve"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  qpert::cli::RunContext ctx;
  ctx.out = out_dir;
  ctx.threads = threads;
  ctx.seed = seed;
  const std::string name = app.get_subcommands().front()->get_name();
  const std::string command = name == "ed" ? "ed " + ed_mode : name;
  if (name != "report") {
    if (config_path.empty()) {
      std::cerr << "qpert " << command << ": error: --config is required\n";
      return 1;
    }
    try {
      ctx.cfg = qpert::Config::load(config_path);
    } catch (const std::exception& e) {
      std::cerr << "qpert " << command << ": error: " << e.what() << "\n";
      return 1;
    }
  }
  return qpert::cli::run_command(std::move(ctx), command);
}
