// blockfa: runs the bundled experiments and invariant checks.
//
//   blockfa run --preset fig4 [--set contour.radius=2] [--outdir out] [--jobs 2]
//   blockfa run --config my.toml
//   blockfa list
//   blockfa check
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include "blockfa/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <mutex>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invalid = 2;
constexpr int exit_numerical = 3;

bool is_validation(blockfa::ErrorKind k) {
  using blockfa::ErrorKind;
  return k == ErrorKind::ParseError || k == ErrorKind::InvalidArgument || k == ErrorKind::DimensionMismatch;
}

int cmd_run(const std::string& preset, const std::string& config_path, const std::vector<std::string>& sets,
            const std::string& outdir, int jobs, bool quiet) {
  using namespace blockfa;
  Config cfg;
  if (!preset.empty() == !config_path.empty()) {
    std::cerr << "run: give exactly one of --preset or --config\n";
    return exit_invalid;
  }
  ExperimentConfig ec;
  try {
    cfg = preset.empty() ? Config::load(config_path) : Config::parse(find_preset(preset).text, preset);
    for (const auto& s : sets) cfg.apply_override(s);
    ec = ExperimentConfig::from_config(cfg);
  } catch (const Error& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return exit_invalid;
  }

  std::mutex io;
  RunOptions opts;
  opts.jobs = jobs;
  if (!quiet) {
    opts.progress = [&](const PointResult& p) {
      std::lock_guard lock(io);
      std::fprintf(stderr, "[%s] point %lld: %zu rows, final k %lld, %.1fs%s\n", ec.name.c_str(),
                   static_cast<long long>(p.point.index), p.rows.size(), static_cast<long long>(p.final_k), p.seconds,
                   p.failed() ? ", with errors" : "");
    };
  }

  ExperimentResult result;
  try {
    result = run_experiment(ec, opts);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return is_validation(e.kind()) ? exit_invalid : exit_numerical;
  }
  try {
    for (const auto& path : write_outputs(result, outdir))
      if (!quiet) std::cout << path.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "cannot write outputs: " << e.what() << "\n";
    return exit_invalid;
  }
  if (!result.skipped.empty()) {
    std::cerr << ec.name << " skipped: " << result.skipped << "\n";
    return exit_ok;
  }
  if (result.numerical_failure()) {
    for (const auto& p : result.points)
      for (const auto& e : p.errors) std::cerr << "point " << p.point.index << ": " << e << "\n";
    return exit_numerical;
  }
  return exit_ok;
}

int cmd_list() {
  for (const auto& p : blockfa::presets()) std::cout << p.name << "\t" << p.description << "\n";
  return exit_ok;
}

int cmd_check() {
  bool all = true;
  for (const auto& c : blockfa::run_checks()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    all = all && c.passed;
  }
  return all ? exit_ok : exit_numerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block Lanczos matrix-function approximation with a posteriori error bounds"};
  app.require_subcommand(1);

  std::string preset, config_path, outdir = "out";
  std::vector<std::string> sets;
  int jobs = 1;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a preset or a config file");
  run->add_option("--preset", preset, "Bundled preset name (see `blockfa list`)");
  run->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  run->add_option("--set", sets, "Override key=value (repeatable)");
  run->add_option("--outdir", outdir, "Output directory")->capture_default_str();
  run->add_option("--jobs", jobs, "Sweep points run concurrently")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_flag("--quiet", quiet, "No progress output");

  auto* list = app.add_subcommand("list", "List bundled presets");
  auto* check = app.add_subcommand("check", "Run the invariant checks on small instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_invalid;
  }

  if (*run) return cmd_run(preset, config_path, sets, outdir, jobs, quiet);
  if (*list) return cmd_list();
  if (*check) return cmd_check();
  return exit_invalid;
}
