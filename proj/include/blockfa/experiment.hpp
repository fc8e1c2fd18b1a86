#pragma once

#include "blockfa/bounds.hpp"
#include "blockfa/config.hpp"
#include "blockfa/problems.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace blockfa {

enum class ExperimentKind {
  /// Error, triangle integral and computable bound against k.
  convergence,
  /// Same for V^* f(H) V in the operator norm.
  quadratic_form,
  /// Lookahead estimate of the CG error against the true error.
  cg_estimate,
  /// Im of the top-left entry of f(z) err_k(z) on a grid.
  field_im,
  /// Slack ratio T(z) on a grid.
  field_slack,
  /// Sampled contour geometry.
  contour,
};

ExperimentKind parse_experiment_kind(const std::string& s);
const char* to_string(ExperimentKind k) noexcept;

struct ProblemSpec {
  /// linspace, model, indefinite, dense_random, matrix_market or wilson.
  std::string type = "linspace";
  Index n = 1000;
  Real lo = 1e-2;
  Real hi = 1;
  Real kappa = 1e3;
  Real rho = 0.9;
  Real gap = 0.05;
  std::string path;
  Real kappa_hopping = wilson_kappa_hopping;
  /// Problem type used when the wilson file is missing; empty means skip.
  std::string fallback;
};

struct GridSpec {
  Real re_min = 0;
  Real re_max = 1;
  Real im_min = 0;
  Real im_max = 1;
  Index nx = 60;
  Index ny = 60;
};

/// Validated experiment description. Numeric parameters that depend on the
/// problem (w, contour origin, radius, theta) stay as expressions until the
/// spectrum is known; they may use pi, lambda_min, lambda_max, origin and
/// span = lambda_max - origin.
struct ExperimentConfig {
  std::string name;
  std::string description;
  ExperimentKind kind = ExperimentKind::convergence;
  ProblemSpec problem;
  std::string function = "sqrt";
  Real function_param = 0;
  NormMode norm = NormMode::shifted;
  std::string w = "0";
  /// pacman, or two_sided (right Pac-Man plus a skipped mirror curve).
  std::string contour_shape = "pacman";
  std::string origin = "lambda_min/100";
  /// hull: [lambda_min, lambda_max]; split: one interval per sign.
  std::string spectrum = "hull";
  /// oracle: ||err_k(w)|| from the eigendecomposition; residual: the
  /// (lambda_min - w)^{-1} ||res_k(w)||_F bound.
  std::string linsys = "oracle";

  // Sweep axes, each non-empty.
  std::vector<Index> block_sizes{4};
  std::vector<bool> reorth{true};
  std::vector<std::string> radius{"4*span"};
  std::vector<std::string> theta{"0.75*pi"};
  std::vector<Index> lookahead{0};

  Index k_min = 1;
  Index k_max = 30;
  Index k_step = 1;
  Real rtol = 1e-6;
  /// Stop a sweep point once true_error <= stop_rtol ||reference||; 0 never.
  Real stop_rtol = 0;
  /// Add the floating-point perturbation columns.
  bool fp = false;
  /// Add the oracle columns (true error, triangle integral).
  bool oracle = true;
  GridSpec grid;
  /// lines, panels or heatmap.
  std::string plot = "lines";
  std::uint64_t seed = 1;

  /// The configuration this was built from, echoed into the JSON summary.
  Config source;

  /// Validates and converts; errors name the offending key.
  static ExperimentConfig from_config(const Config& c);
  Index sweep_size() const;
};

/// One point of the cartesian product of the sweep axes. Axes vary in the
/// order block_size, reorth, radius, theta, lookahead, the last fastest.
struct SweepPoint {
  Index index = 0;
  Index b = 1;
  bool reorth = true;
  std::string radius;
  std::string theta;
  Index lookahead = 0;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& c);

/// One CSV row: values aligned with the kind's columns (absent cells are
/// empty) and a status that is "ok" or an error kind.
struct Row {
  std::vector<std::optional<Real>> values;
  std::string status = "ok";
};

struct PointResult {
  SweepPoint point;
  Real radius = 0;
  Real theta = 0;
  std::vector<Row> rows;
  std::vector<std::string> errors;
  Index final_k = 0;
  std::optional<Real> final_true_error;
  bool converged = false;
  double seconds = 0;

  bool failed() const noexcept { return !errors.empty(); }
};

struct ResolvedProblem {
  std::string description;
  Index n = 0;
  Real lambda_min = 0;
  Real lambda_max = 0;
  Real w = 0;
  Real origin = 0;
  std::vector<SpectrumInterval> spectrum;
  /// Set when the requested problem was replaced by its fallback.
  std::string substitution;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<std::string> columns;
  ResolvedProblem problem;
  std::vector<PointResult> points;
  /// Non-empty when the experiment was skipped (missing external input).
  std::string skipped;

  bool numerical_failure() const noexcept;
};

/// Column names, in CSV order, for an experiment kind.
std::vector<std::string> experiment_columns(ExperimentKind kind);

struct RunOptions {
  /// Sweep points evaluated concurrently; results do not depend on it.
  int jobs = 1;
  /// Called after each finished sweep point, from the worker thread.
  std::function<void(const PointResult&)> progress;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opts = {});

/// Writes <name>.csv, <name>.json and <name>.svg to `outdir`, and one
/// <name>.p<i>.csv per sweep point when there are several. Returns the
/// paths written.
std::vector<std::filesystem::path> write_outputs(const ExperimentResult& r, const std::filesystem::path& outdir);

/// CSV text of all points; rows are emitted in sweep order.
std::string to_csv(const ExperimentResult& r);
std::string to_csv(const ExperimentResult& r, const PointResult& p);
std::string to_json(const ExperimentResult& r);
std::string to_svg(const ExperimentResult& r);

/// Shortest round-trip decimal form of x.
std::string format_real(Real x);

struct Preset {
  std::string name;
  std::string description;
  std::string text;
};

/// Bundled presets, in a fixed order.
const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);

/// Invariant checks on small instances, as run by `blockfa check`.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};
std::vector<CheckResult> run_checks();

}  // namespace blockfa
