#include "blockfa/contour.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace blockfa {

namespace {

constexpr Real two_pi = 2 * std::numbers::pi;

// Geometric position along a segment for parameter t, and its inverse.
Real grade(Grading g, Real t) {
  switch (g) {
    case Grading::start: return t * t;
    case Grading::end: return 1 - (1 - t) * (1 - t);
    case Grading::none: break;
  }
  return t;
}

Real grade_inverse(Grading g, Real s) {
  switch (g) {
    case Grading::start: return std::sqrt(s);
    case Grading::end: return 1 - std::sqrt(1 - s);
    case Grading::none: break;
  }
  return s;
}

Real grade_derivative(Grading g, Real t) {
  switch (g) {
    case Grading::start: return 2 * t;
    case Grading::end: return 2 * (1 - t);
    case Grading::none: break;
  }
  return 1;
}

Real point_segment_distance(Complex p, Complex a, Complex b) {
  const Complex d = b - a;
  const Real len2 = std::norm(d);
  if (len2 == 0) return std::abs(p - a);
  const Real s = std::clamp(((p - a) * std::conj(d)).real() / len2, 0.0, 1.0);
  return std::abs(p - (a + s * d));
}

Real cross(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }

bool segments_intersect(Complex a, Complex b, Complex c, Complex d) {
  const Real d1 = cross(b - a, c - a);
  const Real d2 = cross(b - a, d - a);
  const Real d3 = cross(d - c, a - c);
  const Real d4 = cross(d - c, b - c);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  auto on = [](Complex p, Complex q, Complex r) {
    return std::min(p.real(), q.real()) <= r.real() && r.real() <= std::max(p.real(), q.real()) &&
           std::min(p.imag(), q.imag()) <= r.imag() && r.imag() <= std::max(p.imag(), q.imag());
  };
  return (d1 == 0 && on(a, b, c)) || (d2 == 0 && on(a, b, d)) || (d3 == 0 && on(c, d, a)) ||
         (d4 == 0 && on(c, d, b));
}

// Whether angle psi lies on the arc swept from phi0 to phi1.
bool angle_in_range(Real psi, Real phi0, Real phi1) {
  const Real lo = std::min(phi0, phi1);
  const Real hi = std::max(phi0, phi1);
  if (hi - lo >= two_pi) return true;
  const Real shifted = psi + two_pi * std::ceil((lo - psi) / two_pi);
  return shifted <= hi;
}

struct ArcWindow {
  Complex c;
  Real r;
  Real phi0;
  Real phi1;
};

ArcWindow window(const CircularArc& a, Real t0, Real t1) {
  return {a.center, a.radius, a.theta0 + (a.theta1 - a.theta0) * t0, a.theta0 + (a.theta1 - a.theta0) * t1};
}

Real point_arc_distance(Complex p, const ArcWindow& w) {
  const Complex rel = p - w.c;
  const Real end0 = std::abs(p - (w.c + std::polar(w.r, w.phi0)));
  const Real end1 = std::abs(p - (w.c + std::polar(w.r, w.phi1)));
  Real best = std::min(end0, end1);
  if (std::abs(rel) == 0) return w.r;
  if (angle_in_range(std::arg(rel), w.phi0, w.phi1)) best = std::min(best, std::abs(std::abs(rel) - w.r));
  return best;
}

}  // namespace

// ---------------------------------------------------------------- pieces

Complex ContourPiece::point(Real t) const {
  if (const auto* s = std::get_if<LineSegment>(&shape)) return s->from + (s->to - s->from) * grade(s->grading, t);
  const auto& a = std::get<CircularArc>(shape);
  return a.center + std::polar(a.radius, a.theta0 + (a.theta1 - a.theta0) * t);
}

Complex ContourPiece::derivative(Real t) const {
  if (const auto* s = std::get_if<LineSegment>(&shape)) return (s->to - s->from) * grade_derivative(s->grading, t);
  const auto& a = std::get<CircularArc>(shape);
  const Real dphi = a.theta1 - a.theta0;
  return Complex(0, dphi) * std::polar(a.radius, a.theta0 + dphi * t);
}

Real ContourPiece::length() const {
  if (const auto* s = std::get_if<LineSegment>(&shape))
    return std::abs(s->to - s->from) * (grade(s->grading, t1) - grade(s->grading, t0));
  const auto& a = std::get<CircularArc>(shape);
  return a.radius * std::abs(a.theta1 - a.theta0) * (t1 - t0);
}

Real ContourPiece::distance(Complex p) const {
  if (std::holds_alternative<LineSegment>(shape)) return point_segment_distance(p, point(t0), point(t1));
  return point_arc_distance(p, window(std::get<CircularArc>(shape), t0, t1));
}

Real ContourPiece::distance_to_interval(Real lo, Real hi) const {
  const Complex ilo(lo, 0);
  const Complex ihi(hi, 0);
  if (std::holds_alternative<LineSegment>(shape)) {
    const Complex a = point(t0);
    const Complex b = point(t1);
    if (segments_intersect(a, b, ilo, ihi)) return 0;
    return std::min({point_segment_distance(a, ilo, ihi), point_segment_distance(b, ilo, ihi),
                     point_segment_distance(ilo, a, b), point_segment_distance(ihi, a, b)});
  }
  const ArcWindow w = window(std::get<CircularArc>(shape), t0, t1);
  Real best = std::min({point_segment_distance(w.c + std::polar(w.r, w.phi0), ilo, ihi),
                        point_segment_distance(w.c + std::polar(w.r, w.phi1), ilo, ihi),
                        point_arc_distance(ilo, w), point_arc_distance(ihi, w)});
  // Extreme heights of the circle, where it runs parallel to the axis.
  for (Real phi : {std::numbers::pi / 2, -std::numbers::pi / 2}) {
    if (angle_in_range(phi, w.phi0, w.phi1))
      best = std::min(best, point_segment_distance(w.c + std::polar(w.r, phi), ilo, ihi));
  }
  // Crossings of the real axis.
  const Real sine = -w.c.imag() / w.r;
  if (std::abs(sine) <= 1) {
    const Real base = std::asin(sine);
    for (Real phi : {base, std::numbers::pi - base}) {
      if (!angle_in_range(phi, w.phi0, w.phi1)) continue;
      const Real x = w.c.real() + w.r * std::cos(phi);
      if (lo <= x && x <= hi) return 0;
    }
  }
  return best;
}

std::array<ContourPiece, 2> ContourPiece::split(Real t) const {
  if (!(t0 < t && t < t1)) throw Error(ErrorKind::InvalidArgument, "split point outside the piece window");
  ContourPiece left{shape, t0, t, {}};
  ContourPiece right{shape, t, t1, {}};
  for (Real br : breaks) {
    if (br < t) left.breaks.push_back(br);
    if (br > t) right.breaks.push_back(br);
  }
  return {std::move(left), std::move(right)};
}

// ---------------------------------------------------------------- curves

Real Curve::length() const {
  Real s = 0;
  for (const auto& p : pieces) s += p.length();
  return s;
}

Real Curve::closure_defect() const {
  Real worst = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& next = pieces[(i + 1) % pieces.size()];
    worst = std::max(worst, std::abs(pieces[i].point(pieces[i].t1) - next.point(next.t0)));
  }
  return worst;
}

Real Curve::distance(Complex p) const {
  Real d = std::numeric_limits<Real>::infinity();
  for (const auto& piece : pieces) d = std::min(d, piece.distance(p));
  return d;
}

int Curve::winding_number(Complex p) const {
  const Real dist = distance(p);
  if (!(dist > 0)) throw Error(ErrorKind::ContourTouchesSpectrum, "point lies on the contour");
  Real total = 0;
  for (const auto& piece : pieces) {
    if (std::holds_alternative<LineSegment>(piece.shape)) {
      total += std::arg((piece.point(piece.t1) - p) / (piece.point(piece.t0) - p));
      continue;
    }
    // Outside the disk the arc sweeps the same angle as its chord. Inside,
    // the argument moves monotonically with the arc, so the principal value
    // is lifted to the arc's direction. Halves keep each sweep below 2 pi.
    const auto& arc = std::get<CircularArc>(piece.shape);
    const bool inside = std::abs(p - arc.center) < arc.radius;
    const Real tm = 0.5 * (piece.t0 + piece.t1);
    for (auto [ta, tb] : {std::pair{piece.t0, tm}, std::pair{tm, piece.t1}}) {
      Real delta = std::arg((piece.point(tb) - p) / (piece.point(ta) - p));
      if (inside) {
        const bool ccw = (arc.theta1 - arc.theta0) > 0;
        if (ccw && delta < 0) delta += two_pi;
        if (!ccw && delta > 0) delta -= two_pi;
      }
      total += delta;
    }
  }
  return static_cast<int>(std::lround(total / two_pi));
}

// ---------------------------------------------------------------- contours

Real Contour::length(bool include_skipped) const {
  Real s = 0;
  for (const auto& c : curves)
    if (include_skipped || !c.skip) s += c.length();
  return s;
}

Real Contour::distance(Complex p) const {
  Real d = std::numeric_limits<Real>::infinity();
  for (const auto& c : curves) d = std::min(d, c.distance(p));
  return d;
}

Real Contour::distance_to_interval(Real lo, Real hi) const {
  Real d = std::numeric_limits<Real>::infinity();
  for (const auto& c : curves)
    for (const auto& p : c.pieces) d = std::min(d, p.distance_to_interval(lo, hi));
  return d;
}

int Contour::winding_number(Complex p) const {
  int w = 0;
  for (const auto& c : curves) w += c.winding_number(p);
  return w;
}

Contour Contour::refined() const {
  Contour out;
  for (const auto& c : curves) {
    Curve nc{{}, c.skip, c.label};
    for (const auto& p : c.pieces) {
      auto halves = p.split(0.5 * (p.t0 + p.t1));
      nc.pieces.push_back(std::move(halves[0]));
      nc.pieces.push_back(std::move(halves[1]));
    }
    out.curves.push_back(std::move(nc));
  }
  return out;
}

Contour Contour::with_breakpoints_near(std::span<const Complex> points) const {
  Contour out = *this;
  for (auto& c : out.curves) {
    for (auto& piece : c.pieces) {
      for (Complex p : points) {
        Real t = -1;
        if (const auto* s = std::get_if<LineSegment>(&piece.shape)) {
          const Complex d = s->to - s->from;
          const Real len2 = std::norm(d);
          if (len2 == 0) continue;
          const Real g = std::clamp(((p - s->from) * std::conj(d)).real() / len2, 0.0, 1.0);
          t = grade_inverse(s->grading, g);
        } else {
          const auto& a = std::get<CircularArc>(piece.shape);
          const Real dphi = a.theta1 - a.theta0;
          const Real psi = std::arg(p - a.center);
          // Closest representative of psi to the arc's angular range.
          const Real lo = std::min(a.theta0, a.theta1);
          const Real shifted = psi + two_pi * std::ceil((lo - psi) / two_pi);
          t = (shifted - a.theta0) / dphi;
        }
        const Real margin = 1e-9 * (piece.t1 - piece.t0);
        if (t > piece.t0 + margin && t < piece.t1 - margin) piece.breaks.push_back(t);
      }
      std::sort(piece.breaks.begin(), piece.breaks.end());
      piece.breaks.erase(std::unique(piece.breaks.begin(), piece.breaks.end()), piece.breaks.end());
    }
  }
  return out;
}

void Contour::check_encloses(std::span<const Real> points, Real tol) const {
  for (Real x : points) {
    const Real d = distance(Complex(x, 0));
    if (!(d > tol)) {
      std::ostringstream os;
      os << "point " << x << " is within " << d << " of the contour";
      throw Error(ErrorKind::ContourTouchesSpectrum, os.str());
    }
    const int w = winding_number(Complex(x, 0));
    if (w != 1) {
      std::ostringstream os;
      os << "point " << x << " has winding number " << w;
      throw Error(ErrorKind::ContourTouchesSpectrum, os.str());
    }
  }
}

std::vector<Complex> Contour::sample(Index per_piece) const {
  std::vector<Complex> out;
  for (const auto& c : curves) {
    if (c.skip) continue;
    for (const auto& p : c.pieces)
      for (Index j = 0; j <= per_piece; ++j)
        out.push_back(p.point(p.t0 + (p.t1 - p.t0) * static_cast<Real>(j) / static_cast<Real>(per_piece)));
  }
  return out;
}

void PacManParams::validate() const {
  if (!(radius > 0) || !std::isfinite(radius))
    throw Error(ErrorKind::InvalidArgument, "Pac-Man radius must be positive");
  if (!(theta > 0 && theta < std::numbers::pi))
    throw Error(ErrorKind::InvalidArgument, "Pac-Man theta must lie in (0, pi)");
  if (!std::isfinite(origin)) throw Error(ErrorKind::InvalidArgument, "Pac-Man origin must be finite");
}

Contour pacman_contour(const PacManParams& p) {
  p.validate();
  const Complex o(p.origin, 0);
  const Complex lower = o + std::polar(p.radius, -p.theta);
  const Complex upper = o + std::polar(p.radius, p.theta);
  Curve c;
  c.label = "pacman";
  c.pieces.push_back(ContourPiece{LineSegment{o, lower, Grading::start}, 0, 1, {}});
  c.pieces.push_back(ContourPiece{CircularArc{o, p.radius, -p.theta, p.theta}, 0, 1, {}});
  c.pieces.push_back(ContourPiece{LineSegment{upper, o, Grading::end}, 0, 1, {}});
  return Contour{{std::move(c)}};
}

Contour two_sided_contour(const PacManParams& right, Real eps) {
  Contour out = pacman_contour(right);
  out.curves[0].label = "right";
  Contour left = pacman_contour({eps, right.radius, right.theta});
  Curve lc = std::move(left.curves[0]);
  for (auto& piece : lc.pieces) {
    if (auto* s = std::get_if<LineSegment>(&piece.shape)) {
      s->from = -s->from;
      s->to = -s->to;
    } else {
      auto& a = std::get<CircularArc>(piece.shape);
      a.center = -a.center;
      a.theta0 += std::numbers::pi;
      a.theta1 += std::numbers::pi;
    }
  }
  lc.skip = true;
  lc.label = "left";
  out.curves.push_back(std::move(lc));
  return out;
}

Contour circle_contour(Complex center, Real radius, int pieces) {
  if (!(radius > 0) || pieces < 1) throw Error(ErrorKind::InvalidArgument, "circle needs radius > 0 and pieces >= 1");
  Curve c;
  c.label = "circle";
  for (int j = 0; j < pieces; ++j)
    c.pieces.push_back(ContourPiece{CircularArc{center, radius, two_pi * j / pieces, two_pi * (j + 1) / pieces}, 0, 1, {}});
  return Contour{{std::move(c)}};
}

// ---------------------------------------------------------------- quadrature

namespace detail {

std::vector<QuadInterval> initial_intervals(const Contour& c) {
  std::vector<QuadInterval> out;
  std::size_t order = 0;
  for (const auto& curve : c.curves) {
    for (const auto& piece : curve.pieces) {
      if (!curve.skip) {
        std::vector<Real> cuts{piece.t0};
        for (Real br : piece.breaks)
          if (br > piece.t0 && br < piece.t1) cuts.push_back(br);
        cuts.push_back(piece.t1);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
          if (cuts[i + 1] > cuts[i]) out.push_back({&piece, order, cuts[i], cuts[i + 1], 0});
      }
      ++order;
    }
  }
  return out;
}

}  // namespace detail

QuadResult<Real> integrate_contour(const Contour& c, const BatchIntegrand& g, const QuadOptions& opts) {
  auto eval = [&](std::span<const Complex> z, std::span<const Complex> dz, std::span<Real> out, std::span<Real>) {
    g(z, out);
    for (std::size_t i = 0; i < z.size(); ++i) out[i] *= std::abs(dz[i]);
  };
  auto res = adaptive_gk15<Real>(c, eval, [](Real x) { return std::abs(x); }, 0.0, opts);
  res.value /= two_pi;
  res.err_est /= two_pi;
  return res;
}

QuadResult<Real> integrate_contour(const Contour& c, const NoisyBatchIntegrand& g, const QuadOptions& opts) {
  auto eval = [&](std::span<const Complex> z, std::span<const Complex> dz, std::span<Real> out,
                  std::span<Real> noise) {
    g(z, out, noise);
    for (std::size_t i = 0; i < z.size(); ++i) {
      out[i] *= std::abs(dz[i]);
      noise[i] *= std::abs(dz[i]);
    }
  };
  auto res = adaptive_gk15<Real>(c, eval, [](Real x) { return std::abs(x); }, 0.0, opts);
  res.value /= two_pi;
  res.err_est /= two_pi;
  return res;
}

QuadResult<Real> integrate_contour(const Contour& c, const NodeFn& g, const QuadOptions& opts) {
  const Exec e = opts.exec;
  return integrate_contour(
      c, BatchIntegrand([&](std::span<const Complex> z, std::span<double> out) { kernels::eval_nodes(e, z, out, g); }),
      opts);
}

QuadResult<CMat> integrate_contour_matrix(const Contour& c, const std::function<CMat(Complex)>& f, Index rows,
                                          Index cols, const QuadOptions& opts) {
  auto eval = [&](std::span<const Complex> z, std::span<const Complex> dz, std::span<CMat> out, std::span<Real>) {
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = f(z[i]) * dz[i];
  };
  auto res = adaptive_gk15<CMat>(c, eval, [](const CMat& m) { return m.norm(); }, CMat::Zero(rows, cols), opts);
  res.value /= two_pi;
  res.err_est /= two_pi;
  return res;
}

}  // namespace blockfa
