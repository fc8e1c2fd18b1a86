#include "blockfa/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace blockfa {

namespace {

constexpr Real inf = std::numeric_limits<Real>::infinity();

void require_nonempty(std::span<const SpectrumInterval> s) {
  if (s.empty()) throw Error(ErrorKind::InvalidArgument, "spectrum must contain at least one interval");
}

// diag(1/(theta - z)) g
template <class M>
CMat scaled_rows(const RVec& theta, const M& g, Complex z) {
  CMat out(g.rows(), g.cols());
  for (Index i = 0; i < theta.size(); ++i) out.row(i) = g.row(i).template cast<Complex>() / (theta(i) - z);
  return out;
}

RVec spectrum_values(const RVec& x, const SpectralFunction& f, const char* what) {
  RVec out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    out(i) = f.on_spectrum(x(i));
    if (!std::isfinite(out(i))) {
      std::ostringstream os;
      os << f.name << " is not finite at " << what << " " << x(i);
      throw Error(ErrorKind::DomainError, os.str());
    }
  }
  return out;
}

}  // namespace

NormMode parse_norm_mode(const std::string& s) {
  if (s == "shifted" || s == "H-wI") return NormMode::shifted;
  if (s == "frobenius") return NormMode::frobenius;
  if (s == "operator") return NormMode::operator_norm;
  throw Error(ErrorKind::InvalidArgument, "unknown norm '" + s + "' (shifted, frobenius, operator)");
}

const char* to_string(NormMode m) noexcept {
  switch (m) {
    case NormMode::shifted: return "shifted";
    case NormMode::frobenius: return "frobenius";
    case NormMode::operator_norm: return "operator";
  }
  return "?";
}

// ---------------------------------------------------------------- Q_S

Real q_s(const SpectrumInterval& s, Real w, Complex z) {
  const Real x = z.real();
  const Real y = z.imag();
  if (y == 0 && s.contains(x)) {
    std::ostringstream os;
    os << "z = " << x << " lies in [" << s.lo << ", " << s.hi << "]";
    throw Error(ErrorKind::PoleInInterval, os.str());
  }
  Real best = std::max(std::abs(s.lo - w) / std::abs(s.lo - z), std::abs(s.hi - w) / std::abs(s.hi - z));
  if (y != 0 && x != w) {
    const Real xstar = (x * x + y * y - x * w) / (x - w);
    if (s.contains(xstar)) best = std::max(best, std::abs(z - w) / std::abs(y));
  }
  return best;
}

Real q_s(std::span<const SpectrumInterval> s, Real w, Complex z) {
  require_nonempty(s);
  Real best = 0;
  for (const auto& part : s) best = std::max(best, q_s(part, w, z));
  return best;
}

Real q_tilde(const SpectrumInterval& s, Complex z) {
  const Real x = z.real();
  if (x < s.lo) return 1 / std::abs(s.lo - z);
  if (x > s.hi) return 1 / std::abs(s.hi - z);
  if (z.imag() == 0) {
    std::ostringstream os;
    os << "z = " << x << " lies in [" << s.lo << ", " << s.hi << "]";
    throw Error(ErrorKind::PoleInInterval, os.str());
  }
  return 1 / std::abs(z.imag());
}

Real q_tilde(std::span<const SpectrumInterval> s, Complex z) {
  require_nonempty(s);
  Real best = 0;
  for (const auto& part : s) best = std::max(best, q_tilde(part, z));
  return best;
}

Real q_s_grid(const SpectrumInterval& s, Real w, Complex z, Index points) {
  Real best = 0;
  for (Index i = 0; i < points; ++i) {
    const Real x = points == 1 ? s.lo : s.lo + s.width() * static_cast<Real>(i) / static_cast<Real>(points - 1);
    best = std::max(best, std::abs(x - w) / std::abs(x - z));
  }
  return best;
}

Real q_tilde_grid(const SpectrumInterval& s, Complex z, Index points) {
  Real best = 0;
  for (Index i = 0; i < points; ++i) {
    const Real x = points == 1 ? s.lo : s.lo + s.width() * static_cast<Real>(i) / static_cast<Real>(points - 1);
    best = std::max(best, 1 / std::abs(x - z));
  }
  return best;
}

// ---------------------------------------------------------------- C ratio

template <Field S>
CRatioField::CRatioField(const LanczosDecomposition<S>& d, Complex w, Real max_cond) : w_(w), c_(d) {
  const CRatio cw(d, w, max_cond);
  cond_ = cw.condition();
  lu_w_.compute(cw.c_w());
}

CMat CRatioField::ratio(Complex z) const { return lu_w_.solve(c_(z)); }

Real CRatioField::norm(Complex z) const { return norm2<Complex>(ratio(z)); }

// ---------------------------------------------------------------- ErrorOracle

template <Field S>
ErrorOracle<S>::ErrorOracle(const LanczosDecomposition<S>& d, const Mat<S>& v, const SpectralOracle<S>& h,
                            NormMode mode, Real w, Exec exec)
    : h_(&h), mode_(mode), w_(w), exec_(exec), lambda_(h.evals()), theta_(d.ritz_values()) {
  if (v.rows() != h.dim() || d.n() != h.dim())
    throw Error(ErrorKind::DimensionMismatch, "oracle dimension does not match the decomposition");
  weight_ = RVec::Ones(lambda_.size());
  if (mode == NormMode::shifted) {
    weight_ = lambda_.array() - w;
    if (weight_.minCoeff() <= 0)
      throw Error(ErrorKind::NotPositiveDefinite, "H - wI is not positive definite for w = " + std::to_string(w));
  }
  vh_ = to_complex<S>(h.coords(v));
  p_ = h.coords(Mat<S>(d.basis())) * d.ritz_vectors();
  g_ = d.ritz_top().adjoint() * d.b_block(0);
  r0_ = to_complex<S>(h.coords(Mat<S>(v - d.q_block(1) * d.b_block(0))));
  m_ = p_;
  for (Index m = 0; m < m_.cols(); ++m)
    for (Index i = 0; i < m_.rows(); ++i) m_(i, m) *= (theta_(m) - lambda_(i));
  abs_m_ = m_.cwiseAbs();
  abs_r0_ = r0_.cwiseAbs();
}

template <Field S>
CMat ErrorOracle<S>::error_coords(Complex z) const {
  CMat e = r0_ + times_complex(m_, scaled_rows(theta_, g_, z));
  for (Index i = 0; i < lambda_.size(); ++i) e.row(i) /= (lambda_(i) - z);
  return e;
}

template <Field S>
CMat ErrorOracle<S>::error_block(Complex z) const {
  return h_->from_eigenbasis(error_coords(z));
}

template <Field S>
Real ErrorOracle<S>::norm_coords(const CMat& e) const {
  if (mode_ == NormMode::operator_norm) return norm2<Complex>(e);
  Real acc = 0;
  for (Index i = 0; i < e.rows(); ++i) acc += weight_(i) * e.row(i).squaredNorm();
  return std::sqrt(acc);
}

template <Field S>
Real ErrorOracle<S>::error_norm(Complex z) const {
  return norm_coords(error_coords(z));
}

namespace {

// Entry-wise rounding noise of diag(1/(lambda - z)) (R0 + M Y) given
// |M| |Y| for one node, folded into the norm of the oracle.
Real noise_from_magnitudes(const RVec& lambda, const RVec& weight, const RMat& abs_r0, const RMat& abs_my,
                           Index col0, Complex z, Index kb) {
  const Real scale = std::numeric_limits<Real>::epsilon() * std::sqrt(static_cast<Real>(kb + 1));
  Real acc = 0;
  for (Index c = 0; c < abs_r0.cols(); ++c)
    for (Index i = 0; i < lambda.size(); ++i) {
      const Real t = (abs_r0(i, c) + abs_my(i, col0 + c)) / std::abs(lambda(i) - z);
      acc += weight(i) * t * t;
    }
  return scale * std::sqrt(acc);
}

}  // namespace

template <Field S>
Real ErrorOracle<S>::error_noise(Complex z, bool unweighted) const {
  const RMat ay = abs_m_ * scaled_rows(theta_, g_, z).cwiseAbs();
  const RVec ones = RVec::Ones(lambda_.size());
  return noise_from_magnitudes(lambda_, unweighted ? ones : weight_, abs_r0_, ay, 0, z, g_.rows());
}

template <Field S>
void ErrorOracle<S>::error_norms(std::span<const Complex> z, std::span<double> out, std::span<double> noise) const {
  const bool want_noise = !noise.empty();
  if (mode_ == NormMode::operator_norm) {
    kernels::eval_nodes(exec_, z, out, [this](Complex zz) { return error_norm(zz); });
    if (want_noise)
      for (std::size_t m = 0; m < z.size(); ++m) noise[m] = error_noise(z[m]);
    return;
  }
  const Index b = g_.cols();
  const Index kb = g_.rows();
  const Index n = lambda_.size();
  const std::size_t chunk = std::max<std::size_t>(1, static_cast<std::size_t>(4'000'000 / std::max<Index>(1, n * b)));
  CMat y;
  for (std::size_t start = 0; start < z.size(); start += chunk) {
    const std::size_t count = std::min(chunk, z.size() - start);
    y.resize(kb, static_cast<Index>(count) * b);
    for (std::size_t m = 0; m < count; ++m)
      y.middleCols(static_cast<Index>(m) * b, b) = scaled_rows(theta_, g_, z[start + m]);
    const CMat py = times_complex(m_, y);
    const ShiftedNormBatch batch{&lambda_, &weight_, &r0_, &py};
    kernels::shifted_error_norms(exec_, batch, z.subspan(start, count), out.subspan(start, count));
    if (want_noise) {
      const RMat ay = abs_m_ * y.cwiseAbs();
      for (std::size_t m = 0; m < count; ++m)
        noise[start + m] =
            noise_from_magnitudes(lambda_, weight_, abs_r0_, ay, static_cast<Index>(m) * b, z[start + m], kb);
    }
  }
}

template <Field S>
Real ErrorOracle<S>::true_error(const SpectralFunction& f) const {
  const RVec fl = spectrum_values(lambda_, f, "eigenvalue");
  const RVec ft = spectrum_values(theta_, f, "Ritz value");
  // Same rearrangement as error_coords: f(lambda_i) - f(theta_m) is formed
  // before the sum over m.
  Mat<S> pd = p_;
  for (Index m = 0; m < pd.cols(); ++m)
    for (Index i = 0; i < pd.rows(); ++i) pd(i, m) *= (fl(i) - ft(m));
  CMat e = fl.asDiagonal() * r0_;
  e += to_complex<S>(Mat<S>(pd * g_));
  return norm_coords(e);
}

template <Field S>
Real ErrorOracle<S>::qf_true_error(const SpectralFunction& f) const {
  const RVec fl = spectrum_values(lambda_, f, "eigenvalue");
  const RVec ft = spectrum_values(theta_, f, "Ritz value");
  CMat m = vh_.adjoint() * fl.asDiagonal() * vh_;
  m -= (g_.adjoint() * ft.asDiagonal() * g_).template cast<Complex>();
  return norm2<Complex>(m);
}

template <Field S>
Real ErrorOracle<S>::qf_error_norm(Complex z) const {
  return norm2<Complex>(CMat(vh_.adjoint() * error_coords(z)));
}

template <Field S>
Real ErrorOracle<S>::h_norm(Complex z) const {
  Real best = 0;
  for (Index i = 0; i < lambda_.size(); ++i) best = std::max(best, std::abs(lambda_(i) - w_) / std::abs(lambda_(i) - z));
  return best;
}

// ---------------------------------------------------------------- bounds

void check_contour(const Contour& c, std::span<const SpectrumInterval> s, const RVec& ritz, Real tol) {
  std::vector<Real> points;
  for (const auto& part : s) {
    const Real d = c.distance_to_interval(part.lo, part.hi);
    if (!(d > tol)) {
      std::ostringstream os;
      os << "contour passes within " << d << " of [" << part.lo << ", " << part.hi << "]";
      throw Error(ErrorKind::ContourTouchesSpectrum, os.str());
    }
    points.push_back(part.lo);
    points.push_back(part.hi);
  }
  points.insert(points.end(), ritz.data(), ritz.data() + ritz.size());
  c.check_encloses(points, tol);
}

template <Field S>
BoundReport error_bound_main(const LanczosDecomposition<S>& d, std::span<const SpectrumInterval> s, Real w,
                             const SpectralFunction& f, const Contour& c, Real linsys, const BoundOptions& opts) {
  require_nonempty(s);
  BoundReport r;
  r.k = d.k();
  r.linsys_term = linsys;
  if (f.zero) return r;
  if (opts.check_contour) check_contour(c, s, d.ritz_values(), opts.touch_tol);
  const CRatioField cr(d, Complex(w, 0), opts.max_cond);
  const NodeFn g = [&](Complex z) {
    const Real fz = std::abs(f.on_contour(z));
    return fz == 0 ? 0.0 : fz * q_s(s, w, z) * cr.norm(z);
  };
  const auto q = integrate_contour(c, g, opts.quad);
  r.integral_term = q.value;
  r.computable_bound = q.value * linsys;
  r.quad_error_estimate = q.err_est * linsys;
  return r;
}

template <Field S>
QuadResult<Real> triangle_integral(const ErrorOracle<S>& e, const SpectralFunction& f, const Contour& c,
                                   const QuadOptions& opts) {
  if (f.zero) return {0.0, 0.0, 0};
  const NoisyBatchIntegrand g = [&](std::span<const Complex> z, std::span<double> out, std::span<double> noise) {
    e.error_norms(z, out, noise);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const Real fz = std::abs(f.on_contour(z[i]));
      out[i] *= fz;
      noise[i] *= fz;
    }
  };
  return integrate_contour(c, g, opts);
}

template <Field S>
Real slack_ratio(const ErrorOracle<S>& e, const CRatioField& c, Complex z,
                 std::optional<std::span<const SpectrumInterval>> s) {
  const Real denom = e.error_norm(z);
  if (!(denom > 0)) return inf;
  const Real hz = s ? q_s(*s, e.w(), z) : e.h_norm(z);
  return hz * c.norm(z) * e.error_norm(c.w()) / denom;
}

template <Field S>
BoundReport qf_bound(const LanczosDecomposition<S>& d, std::span<const SpectrumInterval> s, Real w,
                     const SpectralFunction& f, const Contour& c, const BoundOptions& opts) {
  if constexpr (is_complex_v<S>) {
    throw Error(ErrorKind::FieldUnsupported,
                "the quadratic-form bound uses C(conj z) = conj C(z), which needs a real tridiagonal T");
  } else {
    require_nonempty(s);
    BoundReport r;
    r.k = d.k();
    const CMat cw = c_matrix(d, Complex(w, 0));
    const Real res = norm2<Complex>(d.b_block(d.k()).template cast<Complex>() * cw);
    r.linsys_term = res * res;
    if (f.zero) return r;
    if (opts.check_contour) check_contour(c, s, d.ritz_values(), opts.touch_tol);
    const CRatioField cr(d, Complex(w, 0), opts.max_cond);
    const NodeFn g = [&](Complex z) {
      const Real fz = std::abs(f.on_contour(z));
      if (fz == 0) return 0.0;
      const Real rn = cr.norm(z);
      return fz * q_tilde(s, z) * rn * rn;
    };
    const auto q = integrate_contour(c, g, opts.quad);
    r.integral_term = q.value;
    r.computable_bound = q.value * r.linsys_term;
    r.quad_error_estimate = q.err_est * r.linsys_term;
    return r;
  }
}

template <Field S>
QuadResult<Real> qf_triangle_integral(const ErrorOracle<S>& e, const SpectralFunction& f, const Contour& c,
                                      const QuadOptions& opts) {
  if (f.zero) return {0.0, 0.0, 0};
  const Real vnorm = norm2<Complex>(e.vh());
  const NoisyBatchIntegrand g = [&](std::span<const Complex> z, std::span<double> out, std::span<double> noise) {
    kernels::eval_nodes(opts.exec, z, out, [&](Complex zz) {
      const Real fz = std::abs(f.on_contour(zz));
      return fz == 0 ? 0.0 : fz * e.qf_error_norm(zz);
    });
    for (std::size_t i = 0; i < z.size(); ++i) noise[i] = std::abs(f.on_contour(z[i])) * vnorm * e.error_noise(z[i], true);
  };
  return integrate_contour(c, g, opts);
}

template <Field S>
Real linsys_residual_bound(const LanczosDecomposition<S>& d, const Mat<S>& v, const LinearOperator<S>& h, Real w,
                           Real lambda_min) {
  if (!(w < lambda_min)) {
    std::ostringstream os;
    os << "w = " << w << " must lie below lambda_min = " << lambda_min;
    throw Error(ErrorKind::InvalidShift, os.str());
  }
  return shifted_residual(d, v, h, Complex(w, 0)).norm() / (lambda_min - w);
}

template <Field S>
Real cg_error_estimate(const LanczosDecomposition<S>& dec, Real w, Index k, Index lookahead) {
  if (k < 1 || lookahead < 0 || k + lookahead > dec.k())
    throw Error(ErrorKind::InvalidArgument, "cg_error_estimate needs 1 <= k and k + d <= iterations available");
  if (lookahead == 0) return 0;
  const auto big = k + lookahead == dec.k() ? dec : dec.prefix(k + lookahead);
  const auto small = dec.prefix(k);
  CMat delta = resolvent_coefficients(big, Complex(w, 0));
  delta.topRows(small.k() * small.b()) -= resolvent_coefficients(small, Complex(w, 0));
  Mat<S> shifted = big.tridiagonal();
  shifted.diagonal().array() -= w;
  const Real val = (delta.adjoint() * (shifted.template cast<Complex>() * delta)).trace().real();
  return std::sqrt(std::max<Real>(0, val));
}

template <Field S>
Real cg_error_estimate(const LinearOperator<S>& h, const Mat<S>& v, Real w, Index k, Index lookahead,
                       const LanczosOptions& opts) {
  const auto dec = block_lanczos(h, v, k + lookahead, opts);
  return cg_error_estimate(dec, w, k, lookahead);
}

template <Field S>
CMat fp_residual_term(const LanczosDecomposition<S>& d, const Mat<S>& f_k, Complex w, Complex z) {
  const CRatio cw(d, w, inf);
  const CMat ratio = cw.solve(c_matrix(d, z));
  const CMat inner = resolvent_coefficients(d, w) * ratio - resolvent_coefficients(d, z);
  return times_complex(f_k, inner);
}

namespace {

// K with f_k(w, z) = F_k K diag(1/(theta - z)) G.
template <Field S>
CMat fp_kernel(const LanczosDecomposition<S>& d, Complex w) {
  const CRatio cw(d, w, inf);
  const CMat bottom = to_complex<S>(Mat<S>(d.ritz_bottom()));
  const CMat u = to_complex<S>(d.ritz_vectors());
  return -(resolvent_coefficients(d, w) * cw.solve(bottom) + u);
}

}  // namespace

Real divided_difference(const SpectralFunction& f, Real x, Real y) {
  const Real scale = std::max({std::abs(x), std::abs(y), std::numeric_limits<Real>::min()});
  if (std::abs(x - y) > 1e-6 * scale) return (f.on_spectrum(x) - f.on_spectrum(y)) / (x - y);
  // Trapezoid rule for the Cauchy integral of f' on a circle that stays on
  // the same side of the origin (branch cuts and jumps sit on the axes).
  const Real m = 0.5 * (x + y);
  const Real rho = m != 0 ? 0.25 * std::abs(m) : 1e-3;
  constexpr int nodes = 32;
  Complex acc = 0;
  for (int j = 0; j < nodes; ++j) {
    const Complex e = std::polar(1.0, 2 * std::numbers::pi * j / nodes);
    acc += f.on_contour(m + rho * e) / e;
  }
  return (acc / (nodes * rho)).real();
}

template <Field S>
Real fp_perturbation_term(const LanczosDecomposition<S>& d, const Mat<S>& f_k, const ErrorOracle<S>& e,
                          const SpectralFunction& f, const Contour& c, const FpOptions& opts) {
  if (f_k.rows() != d.n() || f_k.cols() != d.k() * d.b())
    throw Error(ErrorKind::DimensionMismatch, "F_k must be n x kb");
  if (f.zero) return 0;
  const Complex w(e.w(), 0);
  const CMat kern = fp_kernel(d, w);
  const RVec& theta = d.ritz_values();
  const CMat g = to_complex<S>(Mat<S>(d.ritz_top().adjoint() * d.b_block(0)));

  if (opts.mode == FpMode::bound) {
    if (opts.spectrum.empty()) throw Error(ErrorKind::InvalidArgument, "FpMode::bound needs the spectrum");
    const CMat fk = times_complex(f_k, kern);
    const CMat gram = fk.adjoint() * fk;
    Real factor = 1;
    if (e.mode() == NormMode::shifted) {
      Real widest = 0;
      for (const auto& part : opts.spectrum)
        widest = std::max({widest, std::abs(part.lo - e.w()), std::abs(part.hi - e.w())});
      factor = std::sqrt(widest);
    }
    const NodeFn integrand = [&](Complex z) {
      const Real fz = std::abs(f.on_contour(z));
      if (fz == 0) return 0.0;
      const CMat y = scaled_rows(theta, g, z);
      const Real fro = std::sqrt(std::max<Real>(0, (y.adjoint() * gram * y).trace().real()));
      return fz * q_tilde(opts.spectrum, z) * factor * fro;
    };
    return integrate_contour(c, integrand, opts.quad).value;
  }

  // W = U_H^* F_k K, so the integrand in eigen-coordinates is
  // f(z) diag(1/(lambda - z)) W diag(1/(theta - z)) G.
  const RVec& lambda = e.lambda();
  const CMat wmat = times_complex(e.coords(f_k), kern);

  if (opts.mode == FpMode::oracle_quadrature) {
    const auto integrand = [&](Complex z) -> CMat {
      CMat x = wmat * scaled_rows(theta, g, z);
      for (Index i = 0; i < lambda.size(); ++i) x.row(i) /= (lambda(i) - z);
      return f.on_contour(z) * x;
    };
    const auto q = integrate_contour_matrix(c, integrand, lambda.size(), g.cols(), opts.quad);
    return e.norm_coords(q.value);
  }

  // Residues: (1/2 pi i) int f(z) / ((z - lambda)(z - theta)) dz = f[lambda, theta].
  CMat weighted(wmat.rows(), wmat.cols());
  for (Index m = 0; m < theta.size(); ++m)
    for (Index i = 0; i < lambda.size(); ++i) weighted(i, m) = wmat(i, m) * divided_difference(f, lambda(i), theta(m));
  return e.norm_coords(weighted * g);
}

#define BLOCKFA_INSTANTIATE(S)                                                                                    \
  template CRatioField::CRatioField(const LanczosDecomposition<S>&, Complex, Real);                              \
  template class ErrorOracle<S>;                                                                                  \
  template BoundReport error_bound_main<S>(const LanczosDecomposition<S>&, std::span<const SpectrumInterval>, Real, \
                                           const SpectralFunction&, const Contour&, Real, const BoundOptions&);   \
  template QuadResult<Real> triangle_integral<S>(const ErrorOracle<S>&, const SpectralFunction&, const Contour&,  \
                                                 const QuadOptions&);                                             \
  template Real slack_ratio<S>(const ErrorOracle<S>&, const CRatioField&, Complex,                                \
                               std::optional<std::span<const SpectrumInterval>>);                                 \
  template BoundReport qf_bound<S>(const LanczosDecomposition<S>&, std::span<const SpectrumInterval>, Real,       \
                                   const SpectralFunction&, const Contour&, const BoundOptions&);                 \
  template QuadResult<Real> qf_triangle_integral<S>(const ErrorOracle<S>&, const SpectralFunction&,               \
                                                    const Contour&, const QuadOptions&);                          \
  template Real linsys_residual_bound<S>(const LanczosDecomposition<S>&, const Mat<S>&, const LinearOperator<S>&, \
                                         Real, Real);                                                             \
  template Real cg_error_estimate<S>(const LanczosDecomposition<S>&, Real, Index, Index);                         \
  template Real cg_error_estimate<S>(const LinearOperator<S>&, const Mat<S>&, Real, Index, Index,                 \
                                     const LanczosOptions&);                                                      \
  template CMat fp_residual_term<S>(const LanczosDecomposition<S>&, const Mat<S>&, Complex, Complex);            \
  template Real fp_perturbation_term<S>(const LanczosDecomposition<S>&, const Mat<S>&, const ErrorOracle<S>&,     \
                                        const SpectralFunction&, const Contour&, const FpOptions&);

BLOCKFA_INSTANTIATE(Real)
BLOCKFA_INSTANTIATE(Complex)
#undef BLOCKFA_INSTANTIATE

}  // namespace blockfa
