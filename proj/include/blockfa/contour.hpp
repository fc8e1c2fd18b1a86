#pragma once

#include "blockfa/kernels.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace blockfa {

/// Where a line segment is graded quadratically so that an integrable
/// |z - endpoint|^{-1/2} singularity becomes smooth in the parameter.
enum class Grading { none, start, end };

struct LineSegment {
  Complex from;
  Complex to;
  Grading grading = Grading::none;
};

/// center + radius * exp(i phi), phi from theta0 to theta1.
struct CircularArc {
  Complex center;
  Real radius = 1;
  Real theta0 = 0;
  Real theta1 = 2 * std::numbers::pi;
};

/// A smooth piece: a shape restricted to the parameter window [t0, t1] of
/// its natural [0, 1] parameterization.
struct ContourPiece {
  std::variant<LineSegment, CircularArc> shape;
  Real t0 = 0;
  Real t1 = 1;
  /// Interior parameters where the integrand is expected to be rough.
  std::vector<Real> breaks;

  Complex point(Real t) const;
  Complex derivative(Real t) const;
  Real length() const;
  /// Exact Euclidean distance from p to the piece.
  Real distance(Complex p) const;
  /// Exact distance from the piece to the real segment [lo, hi].
  Real distance_to_interval(Real lo, Real hi) const;
  /// The two halves at parameter t (t0 < t < t1); breaks are distributed.
  std::array<ContourPiece, 2> split(Real t) const;
};

/// One closed curve. A skipped curve still takes part in geometry checks
/// but is left out of quadrature (used where f vanishes on it).
struct Curve {
  std::vector<ContourPiece> pieces;
  bool skip = false;
  std::string label;

  Real length() const;
  /// Gap between consecutive piece endpoints, including last to first.
  Real closure_defect() const;
  Real distance(Complex p) const;
  /// Winding number about p (rounded from the accumulated argument).
  int winding_number(Complex p) const;
};

struct Contour {
  std::vector<Curve> curves;

  Real length(bool include_skipped = true) const;
  Real distance(Complex p) const;
  Real distance_to_interval(Real lo, Real hi) const;
  /// Sum of winding numbers over all curves.
  int winding_number(Complex p) const;
  /// Splits every piece at the midpoint of its window.
  Contour refined() const;
  /// Adds a break on each piece at the parameter closest to each point.
  Contour with_breakpoints_near(std::span<const Complex> points) const;
  /// Throws ContourTouchesSpectrum when a point lies within `tol` of the
  /// contour or is not enclosed exactly once.
  void check_encloses(std::span<const Real> points, Real tol) const;
  /// Samples of z along non-skipped curves, for plotting.
  std::vector<Complex> sample(Index per_piece) const;
};

struct PacManParams {
  Real origin = 0;
  Real radius = 1;
  Real theta = std::numbers::pi / 2;

  /// Throws InvalidArgument unless R > 0 and 0 < theta < pi.
  void validate() const;
};

/// Ray from O out to O + R e^{-i theta}, arc through angle 0 to
/// O + R e^{i theta}, ray back to O. Counterclockwise. The rays are graded
/// at O, where f is allowed an integrable singularity.
Contour pacman_contour(const PacManParams& p);

/// Two curves for functions that are constant on each half plane: the
/// right one is the Pac-Man `right`, the left one is the Pac-Man with
/// origin eps and the same radius rotated by pi (so it surrounds
/// [-radius, -eps]); it is marked skip.
Contour two_sided_contour(const PacManParams& right, Real eps);

/// Circle with `pieces` equal arcs.
Contour circle_contour(Complex center, Real radius, int pieces = 4);

// ---------------------------------------------------------------- quadrature

struct QuadOptions {
  Real rtol = 1e-6;
  Real atol = 0;
  int max_depth = 30;
  std::size_t max_evals = 4'000'000;
  Exec exec = default_exec();
};

template <class T>
struct QuadResult {
  T value;
  Real err_est = 0;
  std::size_t evals = 0;
  /// The target was missed only on intervals where refinement stopped
  /// reducing the error (rounding noise); err_est is still reported.
  bool roundoff_limited = false;
};

/// Batch integrand: writes g(z[i]) into out[i].
using BatchIntegrand = std::function<void(std::span<const Complex>, std::span<double>)>;

/// Batch integrand that also reports, per node, an estimate of the absolute
/// rounding noise in its value.
using NoisyBatchIntegrand = std::function<void(std::span<const Complex>, std::span<double>, std::span<double>)>;

/// (1/2pi) * integral of g(z)|dz| over the non-skipped curves, adaptive
/// Gauss-Kronrod 7/15 on every piece window split at its breaks.
QuadResult<Real> integrate_contour(const Contour& c, const BatchIntegrand& g, const QuadOptions& opts = {});

/// As above; intervals whose error estimate is within a small multiple of
/// the integrated noise are not refined further, and a missed target caused
/// only by them is reported through roundoff_limited.
QuadResult<Real> integrate_contour(const Contour& c, const NoisyBatchIntegrand& g, const QuadOptions& opts = {});

/// Same with a pointwise integrand, evaluated through kernels::eval_nodes.
QuadResult<Real> integrate_contour(const Contour& c, const NodeFn& g, const QuadOptions& opts = {});

namespace detail {

struct GkRule {
  // Kronrod abscissae (descending, last is the center) and weights, with
  // the Gauss weights for the odd-indexed abscissae.
  static constexpr std::array<Real, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<Real, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<Real, 4> wg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                             0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  static constexpr int points = 15;

  /// Node offsets in [-1, 1] in evaluation order: center, then -x, +x pairs.
  static std::array<Real, 15> offsets() {
    std::array<Real, 15> o{};
    o[0] = 0;
    for (int j = 0; j < 7; ++j) {
      o[1 + 2 * j] = -xgk[j];
      o[2 + 2 * j] = xgk[j];
    }
    return o;
  }
};

struct QuadInterval {
  const ContourPiece* piece;
  std::size_t order;  // global piece index, fixes the summation order
  Real a;
  Real b;
  int depth;
  Real parent_err = std::numeric_limits<Real>::infinity();
  int stall = 0;  // consecutive bisections that failed to reduce the error
};

/// Bisections in a row without error reduction before an interval is
/// treated as limited by rounding noise in the integrand.
inline constexpr int max_stall = 2;
/// Shallower bisections may legitimately fail to reduce the estimate while
/// a feature is still unresolved, so they never count as stalls.
inline constexpr int min_stall_depth = 4;

std::vector<QuadInterval> initial_intervals(const Contour& c);

}  // namespace detail

/// Generic adaptive engine. `eval(z, dz, out, noise)` fills out[i] with the
/// integrand times the measure at node z[i] with derivative dz[i], and may
/// fill noise[i] (zero-initialized) with the absolute rounding noise of
/// out[i]; `norm` measures values of T for the error test. Returns the plain
/// sum of integral(integrand * measure dt), without the 1/(2pi) factor.
template <class T, class Eval, class Norm>
QuadResult<T> adaptive_gk15(const Contour& c, Eval&& eval, Norm&& norm, const T& zero, const QuadOptions& opts) {
  using detail::GkRule;
  using detail::QuadInterval;
  constexpr int np = GkRule::points;
  const auto off = GkRule::offsets();

  std::vector<QuadInterval> todo = detail::initial_intervals(c);
  // Final results are indexed by position so the sum order never depends on
  // the order in which intervals converge.
  struct Slot {
    QuadInterval iv;
    T k15;
    Real err;
    Real noise;
  };
  // An estimate this close to the integrated noise cannot be trusted to
  // shrink under bisection.
  constexpr Real noise_factor = 10;
  std::vector<Slot> slots;
  std::size_t evals = 0;

  std::vector<Complex> z;
  std::vector<Complex> dz;
  std::vector<T> vals;
  std::vector<Real> noise;
  while (true) {
    z.resize(todo.size() * np);
    dz.resize(todo.size() * np);
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const auto& iv = todo[i];
      const Real mid = 0.5 * (iv.a + iv.b);
      const Real half = 0.5 * (iv.b - iv.a);
      for (int j = 0; j < np; ++j) {
        const Real t = mid + half * off[static_cast<std::size_t>(j)];
        z[i * np + static_cast<std::size_t>(j)] = iv.piece->point(t);
        dz[i * np + static_cast<std::size_t>(j)] = iv.piece->derivative(t);
      }
    }
    vals.assign(z.size(), zero);
    noise.assign(z.size(), 0.0);
    eval(std::span<const Complex>(z), std::span<const Complex>(dz), std::span<T>(vals), std::span<Real>(noise));
    evals += z.size();

    std::vector<Slot> fresh;
    fresh.reserve(todo.size());
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const auto& iv = todo[i];
      const Real half = 0.5 * (iv.b - iv.a);
      const T* v = vals.data() + i * np;
      Real nz = GkRule::wgk[7] * noise[i * np];
      for (int j = 0; j < 7; ++j)
        nz += GkRule::wgk[static_cast<std::size_t>(j)] * (noise[i * np + 1 + 2 * j] + noise[i * np + 2 + 2 * j]);
      T k15 = v[0] * GkRule::wgk[7];
      T g7 = v[0] * GkRule::wg[3];
      for (int j = 0; j < 7; ++j) {
        const T pair = v[1 + 2 * j] + v[2 + 2 * j];
        k15 = k15 + pair * GkRule::wgk[static_cast<std::size_t>(j)];
        if (j % 2 == 1) g7 = g7 + pair * GkRule::wg[static_cast<std::size_t>(j / 2)];
      }
      // QUADPACK's QK15 error heuristic: the raw |K15 - G7| is rescaled by
      // the integrand's variation and floored at rounding level.
      const T mean = k15 * 0.5;
      Real resabs = GkRule::wgk[7] * norm(v[0]);
      Real resasc = GkRule::wgk[7] * norm(v[0] - mean);
      for (int j = 0; j < 7; ++j) {
        const Real wj = GkRule::wgk[static_cast<std::size_t>(j)];
        resabs += wj * (norm(v[1 + 2 * j]) + norm(v[2 + 2 * j]));
        resasc += wj * (norm(v[1 + 2 * j] - mean) + norm(v[2 + 2 * j] - mean));
      }
      const Real ah = std::abs(half);
      resabs *= ah;
      resasc *= ah;
      k15 = k15 * half;
      g7 = g7 * half;
      Real err = norm(k15 - g7);
      if (resasc != 0 && err != 0) err = resasc * std::min(1.0, std::pow(200 * err / resasc, 1.5));
      constexpr Real eps = std::numeric_limits<Real>::epsilon();
      if (resabs > std::numeric_limits<Real>::min() / (50 * eps)) err = std::max(50 * eps * resabs, err);
      fresh.push_back(
          {iv, std::move(k15), std::isfinite(err) ? err : std::numeric_limits<Real>::infinity(), nz * ah});
    }
    // After the first round `todo` holds sibling pairs. Siblings whose
    // combined estimate is not below 0.9 of their parent's are refining
    // noise rather than structure.
    if (fresh.front().iv.depth > 0) {
      for (std::size_t i = 0; i + 1 < fresh.size(); i += 2) {
        auto& l = fresh[i].iv;
        auto& r = fresh[i + 1].iv;
        const bool improved = fresh[i].err + fresh[i + 1].err < 0.9 * l.parent_err;
        l.stall = r.stall = (improved || l.depth < detail::min_stall_depth) ? 0 : l.stall + 1;
      }
    }
    // Merge in position order: slots and fresh intervals are both sorted by
    // (piece, a) because bisection keeps children in place.
    slots.insert(slots.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
    std::stable_sort(slots.begin(), slots.end(), [](const Slot& x, const Slot& y) {
      return x.iv.order != y.iv.order ? x.iv.order < y.iv.order : x.iv.a < y.iv.a;
    });

    T total = zero;
    Real total_err = 0;
    for (const auto& s : slots) {
      total = total + s.k15;
      total_err += s.err;
    }
    const Real target = std::max(opts.atol, opts.rtol * norm(total));
    if (total_err <= target) return {std::move(total), total_err, evals};

    // Bisect every interval carrying more than its share of the budget.
    const Real share = target / static_cast<Real>(slots.size());
    todo.clear();
    std::vector<Slot> keep;
    keep.reserve(slots.size());
    bool stalled = false;
    for (auto& s : slots) {
      const bool wants = s.err > share;
      const bool noisy = s.err <= noise_factor * s.noise;
      if (wants && (noisy || s.iv.stall >= detail::max_stall)) stalled = true;
      if (wants && !noisy && s.iv.depth < opts.max_depth && s.iv.stall < detail::max_stall) {
        const Real mid = 0.5 * (s.iv.a + s.iv.b);
        todo.push_back({s.iv.piece, s.iv.order, s.iv.a, mid, s.iv.depth + 1, s.err, s.iv.stall});
        todo.push_back({s.iv.piece, s.iv.order, mid, s.iv.b, s.iv.depth + 1, s.err, s.iv.stall});
      } else {
        keep.push_back(std::move(s));
      }
    }
    slots = std::move(keep);
    if (todo.empty() && stalled) return {std::move(total), total_err, evals, true};
    if (todo.empty() || evals + todo.size() * np > opts.max_evals) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "error estimate %.3e above target %.3e after %zu evaluations", total_err, target,
                    evals);
      throw Error(ErrorKind::QuadratureNoConvergence, buf);
    }
  }
}

/// (1/2pi) * integral of F(z) dz for matrix-valued F (vector quadrature).
/// `f(z)` returns F at one node; accuracy is measured in Frobenius norm.
QuadResult<CMat> integrate_contour_matrix(const Contour& c, const std::function<CMat(Complex)>& f, Index rows,
                                          Index cols, const QuadOptions& opts = {});

}  // namespace blockfa
