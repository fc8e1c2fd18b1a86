#pragma once

#include "blockfa/contour.hpp"
#include "blockfa/fa.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blockfa {

/// Norm used for errors: ||.||_{H - wI}, plain Frobenius (h = 1), or the
/// operator 2-norm.
enum class NormMode { shifted, frobenius, operator_norm };

NormMode parse_norm_mode(const std::string& s);
const char* to_string(NormMode m) noexcept;

// ---------------------------------------------------------------- Q_S

/// sup over x in s of |x - w| / |x - z|, by the endpoint / interior
/// candidate formula. When Re z = w the interior candidate is skipped.
/// Throws PoleInInterval when z is a real point of s.
Real q_s(const SpectrumInterval& s, Real w, Complex z);
/// Maximum over a union of intervals.
Real q_s(std::span<const SpectrumInterval> s, Real w, Complex z);

/// sup over x in s of 1 / |x - z|.
Real q_tilde(const SpectrumInterval& s, Complex z);
Real q_tilde(std::span<const SpectrumInterval> s, Complex z);

/// Brute-force sup of |x - w|/|x - z| over `points` equispaced grid points
/// of s. Reference for q_s; never used by the bounds themselves.
Real q_s_grid(const SpectrumInterval& s, Real w, Complex z, Index points);
Real q_tilde_grid(const SpectrumInterval& s, Complex z, Index points);

// ---------------------------------------------------------------- C ratio

/// z -> ||C(w)^{-1} C(z)||_2, with C(z) from CEvaluator.
class CRatioField {
 public:
  template <Field S>
  CRatioField(const LanczosDecomposition<S>& d, Complex w, Real max_cond = 1e12);

  /// C(w)^{-1} C(z), b x b.
  CMat ratio(Complex z) const;
  Real norm(Complex z) const;
  Real condition() const noexcept { return cond_; }
  Complex w() const noexcept { return w_; }

 private:
  Complex w_;
  Real cond_ = 0;
  CEvaluator c_;
  Eigen::PartialPivLU<CMat> lu_w_;
};

// ---------------------------------------------------------------- errors

/// Oracle access to err_k(z) and to the true error through an exact
/// eigendecomposition H = U_H diag(lambda) U_H^*. All quantities are
/// formed in the eigenbasis of H, where
///   U_H^* err_k(z) = diag(1/(lambda - z)) Vh - P diag(1/(theta - z)) G,
/// with Vh = U_H^* V, P = U_H^* Q U_T and G = U_T^* E_1 B_0. Since Vh is
/// P G up to the QR residual R0, partial fractions give
///   U_H^* err_k(z) = diag(1/(lambda - z)) (R0 + M diag(1/(theta - z)) G),
/// M_im = (theta_m - lambda_i) P_im, which avoids cancelling two large
/// terms once the error is small.
template <Field S>
class ErrorOracle {
 public:
  ErrorOracle(const LanczosDecomposition<S>& d, const Mat<S>& v, const SpectralOracle<S>& h, NormMode mode, Real w,
              Exec exec = default_exec());

  NormMode mode() const noexcept { return mode_; }
  Real w() const noexcept { return w_; }
  const RVec& lambda() const noexcept { return lambda_; }

  /// err_k(z) in eigen-coordinates (n x b).
  CMat error_coords(Complex z) const;
  /// err_k(z) in the original basis.
  CMat error_block(Complex z) const;
  /// ||err_k(z)|| in the selected norm.
  Real error_norm(Complex z) const;
  /// Batched error_norm; nodes are processed in chunks through one GEMM.
  /// When `noise` is non-empty it receives a rounding-noise estimate for
  /// each value, eps sqrt(kb) times the norm of the summed magnitudes.
  void error_norms(std::span<const Complex> z, std::span<double> out, std::span<double> noise = {}) const;
  /// Rounding-noise estimate for error_norm(z); `unweighted` measures it in
  /// the plain Frobenius norm instead of the oracle's norm.
  Real error_noise(Complex z, bool unweighted = false) const;

  /// ||f(H)V - lan_k(f)|| in the selected norm.
  Real true_error(const SpectralFunction& f) const;
  /// ||V^* f(H) V - V^* lan_k(f)||_2.
  Real qf_true_error(const SpectralFunction& f) const;
  /// ||V^* err_k(z)||_2, the quadratic-form triangle integrand.
  Real qf_error_norm(Complex z) const;

  /// U_H^* V.
  const CMat& vh() const noexcept { return vh_; }
  /// U_H^* X.
  Mat<S> coords(const Mat<S>& x) const { return h_->coords(x); }
  /// Norm of a block given in eigen-coordinates.
  Real norm_coords(const CMat& e) const;
  /// max_i |lambda_i - w| / |lambda_i - z| = ||h_{w,z}(H)||_2.
  Real h_norm(Complex z) const;

 private:
  const SpectralOracle<S>* h_;
  NormMode mode_;
  Real w_;
  Exec exec_;
  RVec lambda_;
  RVec weight_;
  RVec theta_;
  CMat vh_;
  CMat r0_;
  Mat<S> p_;
  Mat<S> m_;
  RMat abs_m_;
  RMat abs_r0_;
  Mat<S> g_;
};

// ---------------------------------------------------------------- reports

struct BoundReport {
  Index k = 0;
  Real integral_term = 0;
  Real linsys_term = 0;
  Real computable_bound = 0;
  std::optional<Real> triangle_integral;
  std::optional<Real> true_error;
  Real quad_error_estimate = 0;
  std::optional<Real> fp_extra_term;
};

struct BoundOptions {
  QuadOptions quad;
  Real max_cond = 1e12;
  /// Points within this distance of the contour count as touching it.
  Real touch_tol = 1e-12;
  /// Verify that the contour encloses S and the Ritz values.
  bool check_contour = true;
};

/// Throws ContourTouchesSpectrum if c meets any interval of s or fails to
/// wind once around the interval endpoints and the given Ritz values.
void check_contour(const Contour& c, std::span<const SpectrumInterval> s, const RVec& ritz, Real tol);

/// Integral term (1/2pi) int |f(z)| Q_S(w,z) ||C(w)^{-1}C(z)||_2 |dz| times
/// `linsys` (a value or bound for ||err_k(w)||).
template <Field S>
BoundReport error_bound_main(const LanczosDecomposition<S>& d, std::span<const SpectrumInterval> s, Real w,
                             const SpectralFunction& f, const Contour& c, Real linsys, const BoundOptions& opts = {});

/// (1/2pi) int ||f(z) err_k(z)|| |dz| with err_k from the oracle.
template <Field S>
QuadResult<Real> triangle_integral(const ErrorOracle<S>& e, const SpectralFunction& f, const Contour& c,
                                   const QuadOptions& opts = {});

/// T(z) = ||h_{w,z}(H)||_2 ||C(w)^{-1}C(z)||_2 ||err_k(w)|| / ||err_k(z)||.
/// With `s` given, ||h_{w,z}(H)||_2 is replaced by its bound Q_S(w, z).
/// Returns +infinity when err_k(z) vanishes.
template <Field S>
Real slack_ratio(const ErrorOracle<S>& e, const CRatioField& c, Complex z,
                 std::optional<std::span<const SpectrumInterval>> s = {});

/// Quadratic-form bound
///   (1/2pi) int |f(z)| Qtilde_S(z) ||C(w)^{-1}C(z)||_2^2 |dz| * ||res_k(w)||_2^2,
/// with ||res_k(w)||_2 = ||B_k C(w)||_2. Real symmetric inputs only.
template <Field S>
BoundReport qf_bound(const LanczosDecomposition<S>& d, std::span<const SpectrumInterval> s, Real w,
                     const SpectralFunction& f, const Contour& c, const BoundOptions& opts = {});

/// (1/2pi) int ||f(z) V^* err_k(z)||_2 |dz|.
template <Field S>
QuadResult<Real> qf_triangle_integral(const ErrorOracle<S>& e, const SpectralFunction& f, const Contour& c,
                                      const QuadOptions& opts = {});

/// ||res_k(w)||_F / (lambda_min - w), with res_k(w) evaluated by its
/// definition. Throws InvalidShift unless w < lambda_min.
template <Field S>
Real linsys_residual_bound(const LanczosDecomposition<S>& d, const Mat<S>& v, const LinearOperator<S>& h, Real w,
                           Real lambda_min);

/// ||lan_{k+d}(1/(x-w)) - lan_k(1/(x-w))||_{H - wI}, computed from the
/// projected quantities as sqrt(delta^*(T_{k+d} - wI) delta). `dec` must
/// hold at least k + lookahead iterations.
template <Field S>
Real cg_error_estimate(const LanczosDecomposition<S>& dec, Real w, Index k, Index lookahead);

/// Runs block Lanczos for k + lookahead steps and calls the overload above.
template <Field S>
Real cg_error_estimate(const LinearOperator<S>& h, const Mat<S>& v, Real w, Index k, Index lookahead,
                       const LanczosOptions& opts = {});

/// f_k(w,z) = F_k (T - wI)^{-1} E_1 B_0 C(w)^{-1} C(z) - F_k (T - zI)^{-1} E_1 B_0.
template <Field S>
CMat fp_residual_term(const LanczosDecomposition<S>& d, const Mat<S>& f_k, Complex w, Complex z);

enum class FpMode {
  /// Closed form of the contour integral through divided differences of f
  /// at (eigenvalue of H, Ritz value) pairs; exact when the contour
  /// encloses both spectra.
  oracle,
  /// Direct matrix-valued quadrature of the same integral (small problems).
  oracle_quadrature,
  /// (1/2pi) int |f| Qtilde_S ||f_k(w,z)|| |dz|, no eigendecomposition of H.
  bound,
};

struct FpOptions {
  FpMode mode = FpMode::oracle;
  QuadOptions quad;
  /// Needed by FpMode::bound.
  std::vector<SpectrumInterval> spectrum;
};

/// (1/2pi) || int f(z) (H - zI)^{-1} f_k(w,z) dz || in the norm of `e`.
template <Field S>
Real fp_perturbation_term(const LanczosDecomposition<S>& d, const Mat<S>& f_k, const ErrorOracle<S>& e,
                          const SpectralFunction& f, const Contour& c, const FpOptions& opts = {});

/// Divided difference (f(x) - f(y)) / (x - y), switching to a Cauchy
/// estimate of f' when x and y nearly coincide.
Real divided_difference(const SpectralFunction& f, Real x, Real y);

}  // namespace blockfa
