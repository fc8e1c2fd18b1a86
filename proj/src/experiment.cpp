#include "blockfa/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

namespace blockfa {

ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "convergence") return ExperimentKind::convergence;
  if (s == "quadratic_form") return ExperimentKind::quadratic_form;
  if (s == "cg_estimate") return ExperimentKind::cg_estimate;
  if (s == "field_im") return ExperimentKind::field_im;
  if (s == "field_slack") return ExperimentKind::field_slack;
  if (s == "contour") return ExperimentKind::contour;
  throw Error(ErrorKind::ParseError, "kind: unknown experiment kind '" + s + "'");
}

const char* to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::quadratic_form: return "quadratic_form";
    case ExperimentKind::cg_estimate: return "cg_estimate";
    case ExperimentKind::field_im: return "field_im";
    case ExperimentKind::field_slack: return "field_slack";
    case ExperimentKind::contour: return "contour";
  }
  return "?";
}

std::vector<std::string> experiment_columns(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::convergence:
    case ExperimentKind::quadratic_form:
      return {"point",          "b",           "reorth",         "radius",       "theta",
              "k",              "true_error",  "triangle_integral", "computable_bound", "integral_term",
              "linsys_term",    "quad_error_estimate", "fp_extra_term", "recurrence_residual", "status"};
    case ExperimentKind::cg_estimate:
      return {"point", "b", "lookahead", "k", "true_error", "cg_estimate", "ratio", "status"};
    case ExperimentKind::field_im:
    case ExperimentKind::field_slack:
      return {"point", "b", "k", "re", "im", "value", "status"};
    case ExperimentKind::contour:
      return {"point", "radius", "theta", "curve", "piece", "t", "re", "im", "status"};
  }
  return {};
}

bool ExperimentResult::numerical_failure() const noexcept {
  return std::any_of(points.begin(), points.end(), [](const PointResult& p) { return p.failed(); });
}

// ---------------------------------------------------------------- config

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "name",        "description",    "kind",          "problem",       "problem.n",     "problem.lo",
      "problem.hi",  "problem.kappa",  "problem.rho",   "problem.gap",   "problem.path",  "problem.kappa_hopping",
      "problem.fallback", "function",  "function.param", "norm",         "w",             "contour",
      "contour.origin", "contour.radius", "contour.R", "contour.theta", "spectrum",   "linsys",        "block_size",
      "reorth",      "lookahead",      "k",             "k_min",         "k_max",         "k_step",
      "rtol",        "stop_rtol",      "fp",            "oracle",        "grid.re_min",   "grid.re_max",
      "grid.im_min", "grid.im_max",    "grid.nx",       "grid.ny",       "plot",          "seed"};
  return keys;
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::ParseError, key + ": " + why);
}

Real number(const Config& c, const std::string& key) {
  try {
    return eval_expression(c.get(key), {{"pi", std::numbers::pi}});
  } catch (const Error& e) {
    invalid(key, e.what());
  }
}

Index integer(const Config& c, const std::string& key, Index min) {
  const Real v = number(c, key);
  if (v != std::floor(v) || v < static_cast<Real>(min)) invalid(key, "expected an integer >= " + std::to_string(min));
  return static_cast<Index>(v);
}

std::vector<std::string> axis(const Config& c, const std::string& key) {
  auto items = split_list(c.get(key));
  if (items.empty()) invalid(key, "sweep axis '" + key + "' is empty");
  return items;
}

std::vector<Index> int_axis(const Config& c, const std::string& key, Index min) {
  std::vector<Index> out;
  for (const auto& item : axis(c, key)) {
    Config one;
    one.set(key, item);
    out.push_back(integer(one, key, min));
  }
  return out;
}

void check_one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  invalid(key, "'" + v + "' is not one of " + list);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
  for (const auto& [key, value] : c.entries()) {
    if (!known_keys().count(key)) invalid(key, "unknown key");
  }
  ExperimentConfig x;
  x.source = c;
  x.name = c.get("name");
  if (x.name.empty() || x.name.find_first_of("/\\ ") != std::string::npos) invalid("name", "must be a plain file stem");
  x.description = c.get_or("description", "");
  if (c.has("kind")) {
    try {
      x.kind = parse_experiment_kind(c.get("kind"));
    } catch (const Error& e) {
      invalid("kind", "unknown experiment kind '" + c.get("kind") + "'");
    }
  }

  auto& p = x.problem;
  p.type = c.get_or("problem", p.type);
  check_one_of("problem", p.type, {"linspace", "model", "indefinite", "dense_random", "matrix_market", "wilson"});
  if (c.has("problem.n")) p.n = integer(c, "problem.n", 2);
  if (c.has("problem.lo")) p.lo = number(c, "problem.lo");
  if (c.has("problem.hi")) p.hi = number(c, "problem.hi");
  if (c.has("problem.kappa")) p.kappa = number(c, "problem.kappa");
  if (c.has("problem.rho")) p.rho = number(c, "problem.rho");
  if (c.has("problem.gap")) p.gap = number(c, "problem.gap");
  if (c.has("problem.kappa_hopping")) p.kappa_hopping = number(c, "problem.kappa_hopping");
  p.path = c.get_or("problem.path", "");
  p.fallback = c.get_or("problem.fallback", "");
  if (!p.fallback.empty()) check_one_of("problem.fallback", p.fallback, {"linspace", "model", "indefinite", "dense_random"});
  if ((p.type == "matrix_market" || p.type == "wilson") && p.path.empty() && p.fallback.empty())
    invalid("problem.path", "required for problem = " + p.type);
  if (p.type == "linspace" && !(p.lo < p.hi)) invalid("problem.lo", "must be below problem.hi");

  x.function = c.get_or("function", x.function);
  if (c.has("function.param")) x.function_param = number(c, "function.param");
  try {
    (void)SpectralFunction::by_name(x.function, x.function_param);
  } catch (const Error&) {
    invalid("function", "unknown function '" + x.function + "'");
  }
  if (c.has("norm")) {
    try {
      x.norm = parse_norm_mode(c.get("norm"));
    } catch (const Error&) {
      invalid("norm", "unknown norm '" + c.get("norm") + "'");
    }
  }
  x.w = c.get_or("w", x.w);
  x.contour_shape = c.get_or("contour", x.contour_shape);
  check_one_of("contour", x.contour_shape, {"pacman", "two_sided"});
  x.origin = c.get_or("contour.origin", x.origin);
  x.spectrum = c.get_or("spectrum", x.spectrum);
  check_one_of("spectrum", x.spectrum, {"hull", "split"});
  x.linsys = c.get_or("linsys", x.linsys);
  check_one_of("linsys", x.linsys, {"oracle", "residual"});

  if (c.has("block_size")) x.block_sizes = int_axis(c, "block_size", 1);
  if (c.has("reorth")) {
    x.reorth.clear();
    for (const auto& item : axis(c, "reorth")) {
      try {
        x.reorth.push_back(parse_bool(item));
      } catch (const Error& e) {
        invalid("reorth", e.what());
      }
    }
  }
  if (c.has("contour.radius") && c.has("contour.R")) invalid("contour.R", "alias of contour.radius; give only one");
  if (c.has("contour.radius")) x.radius = axis(c, "contour.radius");
  if (c.has("contour.R")) x.radius = axis(c, "contour.R");
  if (c.has("contour.theta")) x.theta = axis(c, "contour.theta");
  if (c.has("lookahead")) x.lookahead = int_axis(c, "lookahead", 0);

  if (c.has("k")) x.k_min = x.k_max = integer(c, "k", 1);
  if (c.has("k_min")) x.k_min = integer(c, "k_min", 1);
  if (c.has("k_max")) x.k_max = integer(c, "k_max", 1);
  if (c.has("k_step")) x.k_step = integer(c, "k_step", 1);
  if (x.k_min > x.k_max) invalid("k_min", "exceeds k_max");
  if (c.has("rtol")) x.rtol = number(c, "rtol");
  if (!(x.rtol > 0 && x.rtol < 1)) invalid("rtol", "must lie in (0, 1)");
  if (c.has("stop_rtol")) x.stop_rtol = number(c, "stop_rtol");
  if (x.stop_rtol < 0) invalid("stop_rtol", "must be >= 0");
  try {
    if (c.has("fp")) x.fp = parse_bool(c.get("fp"));
  } catch (const Error& e) {
    invalid("fp", e.what());
  }
  try {
    if (c.has("oracle")) x.oracle = parse_bool(c.get("oracle"));
  } catch (const Error& e) {
    invalid("oracle", e.what());
  }
  if (!x.oracle && x.linsys == "oracle") invalid("linsys", "oracle = false needs linsys = residual");
  if (!x.oracle && x.kind != ExperimentKind::convergence) invalid("oracle", "only convergence runs may disable it");
  if (x.stop_rtol > 0 && !x.oracle) invalid("stop_rtol", "needs the oracle columns");
  if (x.kind == ExperimentKind::cg_estimate) {
    for (Index d : x.lookahead)
      if (d < 1) invalid("lookahead", "must be >= 1 for cg_estimate");
  }

  auto& g = x.grid;
  if (c.has("grid.re_min")) g.re_min = number(c, "grid.re_min");
  if (c.has("grid.re_max")) g.re_max = number(c, "grid.re_max");
  if (c.has("grid.im_min")) g.im_min = number(c, "grid.im_min");
  if (c.has("grid.im_max")) g.im_max = number(c, "grid.im_max");
  if (c.has("grid.nx")) g.nx = integer(c, "grid.nx", 1);
  if (c.has("grid.ny")) g.ny = integer(c, "grid.ny", 1);
  if (!(g.re_min < g.re_max)) invalid("grid.re_min", "must be below grid.re_max");
  if (!(g.im_min < g.im_max)) invalid("grid.im_min", "must be below grid.im_max");

  x.plot = c.get_or("plot", x.plot);
  check_one_of("plot", x.plot, {"lines", "panels", "heatmap"});
  if (c.has("seed")) x.seed = static_cast<std::uint64_t>(integer(c, "seed", 0));
  return x;
}

Index ExperimentConfig::sweep_size() const {
  return static_cast<Index>(block_sizes.size() * reorth.size() * radius.size() * theta.size() * lookahead.size());
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
  std::vector<SweepPoint> out;
  for (Index b : c.block_sizes)
    for (bool re : c.reorth)
      for (const auto& r : c.radius)
        for (const auto& t : c.theta)
          for (Index d : c.lookahead) {
            SweepPoint p;
            p.index = static_cast<Index>(out.size());
            p.b = b;
            p.reorth = re;
            p.radius = r;
            p.theta = t;
            p.lookahead = d;
            out.push_back(std::move(p));
          }
  return out;
}

// ---------------------------------------------------------------- problems

namespace {

template <Field S>
struct BuiltProblem {
  std::shared_ptr<const LinearOperator<S>> op;
  std::unique_ptr<SpectralOracle<S>> oracle;
};

template <Field S>
std::shared_ptr<const LinearOperator<S>> make_operator(const ProblemSpec& p, const std::string& type,
                                                       std::uint64_t seed) {
  if (type == "linspace") return std::make_shared<DiagonalOperator<S>>(gen_linspace_diag<S>(p.n, p.lo, p.hi));
  if (type == "model") return std::make_shared<DiagonalOperator<S>>(gen_model_problem<S>(p.n, p.kappa, p.rho));
  if (type == "indefinite") return std::make_shared<DiagonalOperator<S>>(gen_indefinite_diag<S>(p.n, p.gap, p.hi));
  if (type == "dense_random") return std::make_shared<DenseOperator<S>>(gen_dense_random<S>(p.n, seed));
  if (type == "matrix_market") return load_matrix_market<S>(p.path);
  if constexpr (is_complex_v<S>) {
    if (type == "wilson") return wilson_fermion(p.path, p.kappa_hopping);
  }
  throw Error(ErrorKind::InvalidArgument, "problem '" + type + "' is not available for this field");
}

std::vector<SpectrumInterval> spectrum_sets(const RVec& evals, const std::string& mode) {
  const Real lo = evals.minCoeff();
  const Real hi = evals.maxCoeff();
  if (mode == "hull" || lo > 0 || hi < 0) return {{lo, hi}};
  Real neg_hi = -std::numeric_limits<Real>::infinity();
  Real pos_lo = std::numeric_limits<Real>::infinity();
  for (Index i = 0; i < evals.size(); ++i) {
    if (evals(i) < 0) neg_hi = std::max(neg_hi, evals(i));
    else pos_lo = std::min(pos_lo, evals(i));
  }
  return {{lo, neg_hi}, {pos_lo, hi}};
}

Real distance_to_sets(Real x, const std::vector<SpectrumInterval>& s) {
  Real d = std::numeric_limits<Real>::infinity();
  for (const auto& iv : s) d = std::min(d, iv.contains(x) ? 0 : std::min(std::abs(x - iv.lo), std::abs(x - iv.hi)));
  return d;
}

struct Context {
  const ExperimentConfig* cfg;
  ResolvedProblem problem;
  SpectralFunction f;
};

std::map<std::string, Real> base_symbols(const ResolvedProblem& p) {
  return {{"pi", std::numbers::pi}, {"lambda_min", p.lambda_min}, {"lambda_max", p.lambda_max}};
}

Real resolve(const std::string& key, const std::string& expr, const std::map<std::string, Real>& sym) {
  try {
    return eval_expression(expr, sym);
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, key + ": " + e.what());
  }
}

// ---------------------------------------------------------------- points

struct PointSetup {
  Real radius = 0;
  Real theta = 0;
};

PointSetup point_setup(const Context& ctx, const SweepPoint& pt) {
  auto sym = base_symbols(ctx.problem);
  sym["origin"] = ctx.problem.origin;
  sym["span"] = ctx.problem.lambda_max - ctx.problem.origin;
  sym["w"] = ctx.problem.w;
  return {resolve("contour.radius", pt.radius, sym), resolve("contour.theta", pt.theta, sym)};
}

Contour contour_for(const Context& ctx, const PointSetup& ps, const RVec* ritz) {
  const PacManParams right{ctx.problem.origin, ps.radius, ps.theta};
  if (ctx.cfg->contour_shape == "pacman") return pacman_contour(right);
  // The mirror curve starts at -eps; eps must stay below every |Ritz value|
  // and below the gap between 0 and the spectrum.
  Real gap = distance_to_sets(0, ctx.problem.spectrum);
  if (ritz) gap = std::min(gap, ritz->cwiseAbs().minCoeff());
  if (!(gap > 0)) throw Error(ErrorKind::ContourTouchesSpectrum, "a Ritz value or eigenvalue sits at 0");
  return two_sided_contour(right, gap / 2);
}

Row blank_row(std::size_t columns) {
  Row r;
  r.values.assign(columns - 1, std::nullopt);
  return r;
}

void fail_row(Row& row, PointResult& out, Index k, const Error& e) {
  row.status = to_string(e.kind());
  out.errors.push_back("k=" + std::to_string(k) + ": " + e.what());
}

template <Field S>
Real reference_norm(const ErrorOracle<S>& e, const SpectralFunction& f, bool quadratic) {
  CMat fv = e.vh();
  for (Index i = 0; i < fv.rows(); ++i) fv.row(i) *= f.on_spectrum(e.lambda()(i));
  if (quadratic) return norm2<Complex>(CMat(e.vh().adjoint() * fv));
  return e.norm_coords(fv);
}

template <Field S>
void run_convergence(const Context& ctx, const BuiltProblem<S>& bp, const SweepPoint& pt, PointResult& out) {
  const auto& cfg = *ctx.cfg;
  const bool qf = cfg.kind == ExperimentKind::quadratic_form;
  if constexpr (is_complex_v<S>) {
    if (qf) throw Error(ErrorKind::FieldUnsupported, "quadratic-form bounds need a real symmetric operator");
  }
  const auto ps = point_setup(ctx, pt);
  out.radius = ps.radius;
  out.theta = ps.theta;
  const Index n = bp.op->dim();
  const Real w = ctx.problem.w;
  const Mat<S> v = gaussian_block<S>(n, pt.b, cfg.seed);
  LanczosOptions lo;
  lo.reorth = pt.reorth;
  lo.truncate_on_breakdown = true;
  const Index kcap = std::min(cfg.k_max, n / pt.b - 1);
  if (kcap < cfg.k_min) throw Error(ErrorKind::InvalidArgument, "k_min exceeds n/b - 1");
  const auto full = block_lanczos<S>(*bp.op, v, kcap, lo);

  BoundOptions bo;
  bo.quad.rtol = cfg.rtol;
  const std::span<const SpectrumInterval> sets(ctx.problem.spectrum);
  const std::size_t ncol = experiment_columns(cfg.kind).size();
  std::optional<Real> reference;

  for (Index k = cfg.k_min; k <= full.k(); k += cfg.k_step) {
    Row row = blank_row(ncol);
    auto& val = row.values;
    val[0] = static_cast<Real>(pt.index);
    val[1] = static_cast<Real>(pt.b);
    val[2] = pt.reorth ? 1 : 0;
    val[3] = ps.radius;
    val[4] = ps.theta;
    val[5] = static_cast<Real>(k);
    bool stop = false;
    try {
      const auto d = full.prefix(k);
      std::unique_ptr<ErrorOracle<S>> e;
      if (cfg.oracle) e = std::make_unique<ErrorOracle<S>>(d, v, *bp.oracle, qf ? NormMode::operator_norm : cfg.norm, w);
      if (e && !reference) reference = reference_norm(*e, ctx.f, qf);
      const Contour c = contour_for(ctx, ps, &d.ritz_values());
      BoundReport rep;
      if (qf) {
        rep = qf_bound(d, sets, w, ctx.f, c, bo);
        rep.true_error = e->qf_true_error(ctx.f);
        rep.triangle_integral = qf_triangle_integral(*e, ctx.f, c, bo.quad).value;
      } else {
        const Real linsys = cfg.linsys == "oracle" ? e->error_norm(w)
                                                   : linsys_residual_bound(d, v, *bp.op, w, ctx.problem.lambda_min);
        rep = error_bound_main(d, sets, w, ctx.f, c, linsys, bo);
        if (e) {
          rep.true_error = e->true_error(ctx.f);
          rep.triangle_integral = triangle_integral(*e, ctx.f, c, bo.quad).value;
        }
        if (cfg.fp) {
          const auto rr = recurrence_residual(d, *bp.op);
          val[13] = rr.fro_norm;
          if (e) rep.fp_extra_term = fp_perturbation_term(d, rr.f, *e, ctx.f, c);
        }
      }
      val[6] = rep.true_error;
      val[7] = rep.triangle_integral;
      val[8] = rep.computable_bound;
      val[9] = rep.integral_term;
      val[10] = rep.linsys_term;
      val[11] = rep.quad_error_estimate;
      val[12] = rep.fp_extra_term;
      if (rep.true_error) out.final_true_error = rep.true_error;
      if (cfg.stop_rtol > 0 && rep.true_error && *rep.true_error <= cfg.stop_rtol * *reference) {
        out.converged = true;
        stop = true;
      }
    } catch (const Error& err) {
      fail_row(row, out, k, err);
    }
    out.final_k = k;
    out.rows.push_back(std::move(row));
    if (stop) break;
  }
}

template <Field S>
void run_cg(const Context& ctx, const BuiltProblem<S>& bp, const SweepPoint& pt, PointResult& out) {
  const auto& cfg = *ctx.cfg;
  const Index n = bp.op->dim();
  const Real w = ctx.problem.w;
  const auto f = SpectralFunction::shifted_inverse(w);
  const Mat<S> v = gaussian_block<S>(n, pt.b, cfg.seed);
  LanczosOptions lo;
  lo.reorth = pt.reorth;
  lo.truncate_on_breakdown = true;
  const Index kcap = std::min(cfg.k_max + pt.lookahead, n / pt.b - 1);
  const auto full = block_lanczos<S>(*bp.op, v, kcap, lo);
  const std::size_t ncol = experiment_columns(cfg.kind).size();
  std::optional<Real> reference;
  for (Index k = cfg.k_min; k + pt.lookahead <= full.k() && k <= cfg.k_max; k += cfg.k_step) {
    Row row = blank_row(ncol);
    auto& val = row.values;
    val[0] = static_cast<Real>(pt.index);
    val[1] = static_cast<Real>(pt.b);
    val[2] = static_cast<Real>(pt.lookahead);
    val[3] = static_cast<Real>(k);
    bool stop = false;
    try {
      const ErrorOracle<S> e(full.prefix(k), v, *bp.oracle, NormMode::shifted, w);
      if (!reference) reference = reference_norm(e, f, false);
      const Real te = e.true_error(f);
      const Real est = cg_error_estimate(full, w, k, pt.lookahead);
      val[4] = te;
      val[5] = est;
      val[6] = est / te;
      out.final_true_error = te;
      if (cfg.stop_rtol > 0 && te <= cfg.stop_rtol * *reference) {
        out.converged = true;
        stop = true;
      }
    } catch (const Error& err) {
      fail_row(row, out, k, err);
    }
    out.final_k = k;
    out.rows.push_back(std::move(row));
    if (stop) break;
  }
}

template <Field S>
void run_field(const Context& ctx, const BuiltProblem<S>& bp, const SweepPoint& pt, PointResult& out) {
  const auto& cfg = *ctx.cfg;
  const Index n = bp.op->dim();
  const Real w = ctx.problem.w;
  const Index k = cfg.k_max;
  const Mat<S> v = gaussian_block<S>(n, pt.b, cfg.seed);
  LanczosOptions lo;
  lo.reorth = pt.reorth;
  const auto d = block_lanczos<S>(*bp.op, v, k, lo);
  const ErrorOracle<S> e(d, v, *bp.oracle, cfg.norm, w);
  std::unique_ptr<CRatioField> crf;
  if (cfg.kind == ExperimentKind::field_slack) crf = std::make_unique<CRatioField>(d, Complex(w, 0));
  const auto& g = cfg.grid;
  const std::size_t ncol = experiment_columns(cfg.kind).size();
  const Real hx = (g.re_max - g.re_min) / static_cast<Real>(g.nx);
  const Real hy = (g.im_max - g.im_min) / static_cast<Real>(g.ny);
  // Cell centres keep the grid off the real axis.
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) {
      const Complex z(g.re_min + (static_cast<Real>(i) + 0.5) * hx, g.im_min + (static_cast<Real>(j) + 0.5) * hy);
      Row row = blank_row(ncol);
      row.values[0] = static_cast<Real>(pt.index);
      row.values[1] = static_cast<Real>(pt.b);
      row.values[2] = static_cast<Real>(k);
      row.values[3] = z.real();
      row.values[4] = z.imag();
      try {
        if (crf) {
          row.values[5] = slack_ratio(e, *crf, z);
        } else {
          row.values[5] = (ctx.f.on_contour(z) * e.error_block(z)(0, 0)).imag();
        }
      } catch (const Error& err) {
        fail_row(row, out, k, err);
      }
      out.rows.push_back(std::move(row));
    }
  out.final_k = k;
}

void run_contour(const Context& ctx, const SweepPoint& pt, PointResult& out) {
  const auto ps = point_setup(ctx, pt);
  out.radius = ps.radius;
  out.theta = ps.theta;
  const Contour c = contour_for(ctx, ps, nullptr);
  const std::size_t ncol = experiment_columns(ExperimentKind::contour).size();
  constexpr Index per_piece = 64;
  for (std::size_t ci = 0; ci < c.curves.size(); ++ci) {
    const auto& curve = c.curves[ci];
    for (std::size_t pi = 0; pi < curve.pieces.size(); ++pi) {
      const auto& piece = curve.pieces[pi];
      for (Index j = 0; j <= per_piece; ++j) {
        const Real t = piece.t0 + (piece.t1 - piece.t0) * static_cast<Real>(j) / static_cast<Real>(per_piece);
        const Complex z = piece.point(t);
        Row row = blank_row(ncol);
        row.values = {static_cast<Real>(pt.index), ps.radius, ps.theta, static_cast<Real>(ci),
                      static_cast<Real>(pi), t, z.real(), z.imag()};
        out.rows.push_back(std::move(row));
      }
    }
  }
}

template <Field S>
PointResult run_point(const Context& ctx, const BuiltProblem<S>& bp, const SweepPoint& pt) {
  PointResult out;
  out.point = pt;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (ctx.cfg->kind) {
      case ExperimentKind::convergence:
      case ExperimentKind::quadratic_form: run_convergence(ctx, bp, pt, out); break;
      case ExperimentKind::cg_estimate: run_cg(ctx, bp, pt, out); break;
      case ExperimentKind::field_im:
      case ExperimentKind::field_slack: run_field(ctx, bp, pt, out); break;
      case ExperimentKind::contour: run_contour(ctx, pt, out); break;
    }
  } catch (const Error& e) {
    out.errors.push_back(e.what());
  } catch (const std::exception& e) {
    out.errors.push_back(std::string("unexpected: ") + e.what());
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

template <Field S>
ExperimentResult run_typed(const ExperimentConfig& cfg, const std::string& type, const std::string& substitution,
                           const RunOptions& opts) {
  ExperimentResult r;
  r.config = cfg;
  r.columns = experiment_columns(cfg.kind);

  BuiltProblem<S> bp;
  bp.op = make_operator<S>(cfg.problem, type, cfg.seed);
  bp.oracle = std::make_unique<SpectralOracle<S>>(bp.op->oracle());

  Context ctx{&cfg, {}, SpectralFunction::by_name(cfg.function, cfg.function_param)};
  auto& p = ctx.problem;
  p.description = bp.op->describe();
  p.substitution = substitution;
  p.n = bp.op->dim();
  p.lambda_min = bp.oracle->lambda_min();
  p.lambda_max = bp.oracle->lambda_max();
  p.spectrum = spectrum_sets(bp.oracle->evals(), cfg.spectrum);
  auto sym = base_symbols(p);
  p.w = resolve("w", cfg.w, sym);
  sym["w"] = p.w;
  p.origin = resolve("contour.origin", cfg.origin, sym);
  r.problem = p;

  const auto pts = sweep_points(cfg);
  // Contour parameters are validated before any work starts, so a bad
  // radius or theta is a configuration error rather than a point failure.
  if (cfg.kind != ExperimentKind::cg_estimate) {
    for (const auto& pt : pts) {
      const PointSetup ps = point_setup(ctx, pt);
      try {
        PacManParams{p.origin, ps.radius, ps.theta}.validate();
      } catch (const Error& e) {
        throw Error(ErrorKind::InvalidArgument,
                    "contour.radius / contour.theta (" + pt.radius + ", " + pt.theta + "): " + e.what());
      }
    }
  }
  r.points.resize(pts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pts.size()) return;
      r.points[i] = run_point(ctx, bp, pts[i]);
      if (opts.progress) opts.progress(r.points[i]);
    }
  };
  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(pts.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  std::string type = cfg.problem.type;
  std::string substitution;
  if ((type == "wilson" || type == "matrix_market") &&
      (cfg.problem.path.empty() || !std::filesystem::exists(cfg.problem.path))) {
    const std::string what = cfg.problem.path.empty() ? "no matrix file given" : "missing " + cfg.problem.path;
    if (cfg.problem.fallback.empty()) {
      ExperimentResult r;
      r.config = cfg;
      r.columns = experiment_columns(cfg.kind);
      r.skipped = what;
      return r;
    }
    substitution = what + "; using " + cfg.problem.fallback;
    type = cfg.problem.fallback;
  }
  if (type == "wilson") return run_typed<Complex>(cfg, type, substitution, opts);
  return run_typed<Real>(cfg, type, substitution, opts);
}

}  // namespace blockfa
