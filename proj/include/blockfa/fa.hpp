#pragma once

#include "blockfa/lanczos.hpp"

#include <functional>
#include <string>
#include <vector>

namespace blockfa {

/// Scalar function f usable both on Ritz values (real) and on contour
/// points (complex). `on_spectrum` returns NaN outside its domain.
struct SpectralFunction {
  std::string name;
  std::function<Complex(Complex)> on_contour;
  std::function<Real(Real)> on_spectrum;
  /// Identically zero (lets bounds short-circuit).
  bool zero = false;

  static SpectralFunction sqrt();
  static SpectralFunction inv_sqrt();
  /// 1/(x - w).
  static SpectralFunction shifted_inverse(Real w);
  /// 1 for Re(x) >= 0, else 0.
  static SpectralFunction step();
  /// 2 step(x) - 1.
  static SpectralFunction sign();
  /// sum_j coeffs[j] x^j.
  static SpectralFunction polynomial(std::vector<Real> coeffs);
  static SpectralFunction monomial(int degree);

  /// Lookup by name for configuration files: sqrt, inv_sqrt, step, sign,
  /// shifted_inverse (uses `param`), zero, one.
  static SpectralFunction by_name(const std::string& name, Real param = 0);
};

/// lan_k(f) = Q f(T) E_1 B_0 through the cached eigendecomposition of T.
/// Throws DomainError listing Ritz values where f is not finite.
template <Field S>
Mat<S> lanczos_fa(const LanczosDecomposition<S>& d, const SpectralFunction& f);

/// f(T) E_1 B_0 in the Lanczos basis (kb x b); lanczos_fa is Q times this.
template <Field S>
Mat<S> fa_coefficients(const LanczosDecomposition<S>& d, const SpectralFunction& f);

/// (T - uI)^{-1} E_1 B_0, kb x b.
template <Field S>
CMat resolvent_coefficients(const LanczosDecomposition<S>& d, Complex u);

/// C(u) = -E_k^* (T - uI)^{-1} E_1 B_0. Throws SingularShift when u is
/// within `rel_tol * max(1, |Ritz|_max)` of a Ritz value.
template <Field S>
CMat c_matrix(const LanczosDecomposition<S>& d, Complex u, Real rel_tol = 1e-14);

/// Repeated evaluation of C(u) from the blocks of T. Off the real axis
/// (and outside the Ritz range on it) C(u) is formed as a product of
/// Schur-complement solves, which stays accurate to a few ulps relative to
/// ||C(u)|| however small it gets; no SingularShift check.
class CEvaluator {
 public:
  template <Field S>
  explicit CEvaluator(const LanczosDecomposition<S>& d);
  CMat operator()(Complex u) const;

 private:
  std::vector<CMat> a_;
  std::vector<CMat> b_;
  RVec theta_;
  CMat bottom_;
  CMat g_;
};

/// res_k(z) = V - (H - zI) Q (T - zI)^{-1} E_1 B_0, by the definition.
template <Field S>
CMat shifted_residual(const LanczosDecomposition<S>& d, const Mat<S>& v, const LinearOperator<S>& h, Complex z);

/// err_k(z) = (H - zI)^{-1} V - Q (T - zI)^{-1} E_1 B_0 through an exact
/// eigendecomposition of H.
template <Field S>
CMat shifted_error(const LanczosDecomposition<S>& d, const Mat<S>& v, const SpectralOracle<S>& h, Complex z);

/// B_0^* E_1^* f(T) E_1 B_0, the approximation of V^* f(H) V.
template <Field S>
Mat<S> quadratic_form_approx(const LanczosDecomposition<S>& d, const SpectralFunction& f);

/// Factorization of C(w) used to form C(w)^{-1} C(z) at many z.
/// Throws IllConditionedC when cond_2(C(w)) > max_cond.
class CRatio {
 public:
  template <Field S>
  CRatio(const LanczosDecomposition<S>& d, Complex w, Real max_cond = 1e12);

  Complex w() const noexcept { return w_; }
  Real condition() const noexcept { return cond_; }
  const CMat& c_w() const noexcept { return c_w_; }

  /// C(w)^{-1} X.
  CMat solve(const CMat& x) const;

 private:
  Complex w_;
  CMat c_w_;
  Eigen::PartialPivLU<CMat> lu_;
  Real cond_ = 0;
};

/// h_{w,z}(x) = (x - w)/(x - z).
inline Complex h_wz(Real x, Complex w, Complex z) { return (x - w) / (x - z); }

}  // namespace blockfa
