#include "blockfa/fa.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace blockfa {

namespace {

constexpr Real nan_v = std::numeric_limits<Real>::quiet_NaN();

Complex principal_sqrt(Complex z) { return std::sqrt(z); }

}  // namespace

SpectralFunction SpectralFunction::sqrt() {
  return {"sqrt", principal_sqrt, [](Real x) { return x >= 0 ? std::sqrt(x) : nan_v; }};
}

SpectralFunction SpectralFunction::inv_sqrt() {
  return {"inv_sqrt", [](Complex z) { return Complex(1) / std::sqrt(z); },
          [](Real x) { return x > 0 ? 1.0 / std::sqrt(x) : nan_v; }};
}

SpectralFunction SpectralFunction::shifted_inverse(Real w) {
  return {"shifted_inverse", [w](Complex z) { return Complex(1) / (z - w); },
          [w](Real x) { return x != w ? 1.0 / (x - w) : nan_v; }};
}

SpectralFunction SpectralFunction::step() {
  return {"step", [](Complex z) { return z.real() >= 0 ? Complex(1) : Complex(0); },
          [](Real x) { return x >= 0 ? 1.0 : 0.0; }};
}

SpectralFunction SpectralFunction::sign() {
  return {"sign", [](Complex z) { return z.real() >= 0 ? Complex(1) : Complex(-1); },
          [](Real x) { return x >= 0 ? 1.0 : -1.0; }};
}

SpectralFunction SpectralFunction::polynomial(std::vector<Real> coeffs) {
  const bool all_zero = std::all_of(coeffs.begin(), coeffs.end(), [](Real c) { return c == 0; });
  auto horner = [coeffs]<class T>(T x) {
    T acc(0);
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
  };
  SpectralFunction f{"polynomial", [horner](Complex z) { return horner(z); },
                     [horner](Real x) { return horner(x); }};
  f.zero = all_zero;
  return f;
}

SpectralFunction SpectralFunction::monomial(int degree) {
  std::vector<Real> c(static_cast<std::size_t>(degree + 1), 0.0);
  c.back() = 1.0;
  auto f = polynomial(std::move(c));
  f.name = "x^" + std::to_string(degree);
  return f;
}

SpectralFunction SpectralFunction::by_name(const std::string& name, Real param) {
  if (name == "sqrt") return sqrt();
  if (name == "inv_sqrt") return inv_sqrt();
  if (name == "step") return step();
  if (name == "sign") return sign();
  if (name == "shifted_inverse") return shifted_inverse(param);
  if (name == "zero") {
    auto f = polynomial({});
    f.name = "zero";
    return f;
  }
  if (name == "one") {
    auto f = polynomial({1.0});
    f.name = "one";
    return f;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown function '" + name + "'");
}

template <Field S>
Mat<S> fa_coefficients(const LanczosDecomposition<S>& d, const SpectralFunction& f) {
  const RVec& theta = d.ritz_values();
  RVec ft(theta.size());
  std::vector<Real> bad;
  for (Index i = 0; i < theta.size(); ++i) {
    ft(i) = f.on_spectrum(theta(i));
    if (!std::isfinite(ft(i))) bad.push_back(theta(i));
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << f.name << " is not finite at Ritz values";
    for (Real x : bad) os << ' ' << x;
    throw Error(ErrorKind::DomainError, os.str());
  }
  const Mat<S> g = d.ritz_top().adjoint() * d.b_block(0);
  return d.ritz_vectors() * (ft.asDiagonal() * g);
}

template <Field S>
Mat<S> lanczos_fa(const LanczosDecomposition<S>& d, const SpectralFunction& f) {
  return d.basis() * fa_coefficients(d, f);
}

template <Field S>
CMat resolvent_coefficients(const LanczosDecomposition<S>& d, Complex u) {
  const RVec& theta = d.ritz_values();
  const Mat<S> g = d.ritz_top().adjoint() * d.b_block(0);
  CMat scaled(g.rows(), g.cols());
  for (Index i = 0; i < theta.size(); ++i) scaled.row(i) = g.row(i).template cast<Complex>() / (theta(i) - u);
  return times_complex(d.ritz_vectors(), scaled);
}

template <Field S>
CMat c_matrix(const LanczosDecomposition<S>& d, Complex u, Real rel_tol) {
  const RVec& theta = d.ritz_values();
  const Real scale = std::max<Real>(1.0, theta.cwiseAbs().maxCoeff());
  const Real gap = (theta.template cast<Complex>().array() - u).abs().minCoeff();
  if (gap <= rel_tol * scale) {
    std::ostringstream os;
    os << "shift " << u << " is within " << gap << " of a Ritz value";
    throw Error(ErrorKind::SingularShift, os.str());
  }
  return CEvaluator(d)(u);
}

template <Field S>
CEvaluator::CEvaluator(const LanczosDecomposition<S>& d) : theta_(d.ritz_values()) {
  for (Index j = 1; j <= d.k(); ++j) a_.push_back(to_complex<S>(d.a_block(j)));
  for (Index j = 0; j < d.k(); ++j) b_.push_back(to_complex<S>(d.b_block(j)));
  bottom_ = to_complex<S>(Mat<S>(d.ritz_bottom()));
  g_ = to_complex<S>(Mat<S>(d.ritz_top().adjoint() * d.b_block(0)));
}

// Bottom-up Schur complements G_k = A_k - u, G_j = A_j - u - B_j^* G_{j+1}^{-1} B_j
// give the last block of (T - uI)^{-1} E_1 B_0 as
//   (-1)^{k-1} G_k^{-1} B_{k-1} ... G_2^{-1} B_1 G_1^{-1} B_0.
// The product keeps relative accuracy when C(u) is tiny, where the eigen-sum
// cancels down to rounding noise.
CMat CEvaluator::operator()(Complex u) const {
  // A real shift between Ritz values can make a trailing Schur complement
  // singular even though T - uI is not; use the eigen-sum there.
  if (u.imag() == 0 && u.real() > theta_.minCoeff() && u.real() < theta_.maxCoeff()) {
    CMat scaled = g_;
    for (Index i = 0; i < theta_.size(); ++i) scaled.row(i) /= (theta_(i) - u);
    return -bottom_ * scaled;
  }
  const std::size_t k = a_.size();
  std::vector<Eigen::PartialPivLU<CMat>> lu(k);
  CMat gamma = a_[k - 1];
  gamma.diagonal().array() -= u;
  lu[k - 1].compute(gamma);
  for (std::size_t j = k - 1; j >= 1; --j) {
    gamma = a_[j - 1];
    gamma.diagonal().array() -= u;
    gamma -= b_[j].adjoint() * lu[j].solve(b_[j]);
    lu[j - 1].compute(gamma);
  }
  CMat x = lu[0].solve(b_[0]);
  for (std::size_t j = 1; j < k; ++j) x = -lu[j].solve(b_[j] * x);
  return -x;
}

template <Field S>
CMat shifted_residual(const LanczosDecomposition<S>& d, const Mat<S>& v, const LinearOperator<S>& h, Complex z) {
  (void)c_matrix(d, z);  // SingularShift check
  const CMat x = times_complex(d.basis(), resolvent_coefficients(d, z));
  CMat res = to_complex<S>(v);
  res -= apply_complex(h, x) - z * x;
  return res;
}

template <Field S>
CMat shifted_error(const LanczosDecomposition<S>& d, const Mat<S>& v, const SpectralOracle<S>& h, Complex z) {
  (void)c_matrix(d, z);
  CMat err = h.resolvent(z, to_complex<S>(v));
  err -= times_complex(d.basis(), resolvent_coefficients(d, z));
  return err;
}

template <Field S>
Mat<S> quadratic_form_approx(const LanczosDecomposition<S>& d, const SpectralFunction& f) {
  const Mat<S> g = d.ritz_top().adjoint() * d.b_block(0);
  const Mat<S> coeffs = fa_coefficients(d, f);  // U f(L) g
  // B_0^* E_1^* U f(L) U^* E_1 B_0 = g^* f(L) g
  return g.adjoint() * (d.ritz_vectors().adjoint() * coeffs);
}

template <Field S>
CRatio::CRatio(const LanczosDecomposition<S>& d, Complex w, Real max_cond) : w_(w), c_w_(c_matrix(d, w)) {
  Eigen::JacobiSVD<CMat> svd(c_w_);
  const auto& sv = svd.singularValues();
  const Real smax = sv(0);
  const Real smin = sv(sv.size() - 1);
  cond_ = smin > 0 ? smax / smin : std::numeric_limits<Real>::infinity();
  if (!(cond_ <= max_cond)) {
    std::ostringstream os;
    os << "cond(C(w)) = " << cond_ << " exceeds " << max_cond;
    throw Error(ErrorKind::IllConditionedC, os.str());
  }
  lu_.compute(c_w_);
}

CMat CRatio::solve(const CMat& x) const { return lu_.solve(x); }

#define BLOCKFA_INSTANTIATE(S)                                                                            \
  template Mat<S> fa_coefficients<S>(const LanczosDecomposition<S>&, const SpectralFunction&);            \
  template Mat<S> lanczos_fa<S>(const LanczosDecomposition<S>&, const SpectralFunction&);                 \
  template CMat resolvent_coefficients<S>(const LanczosDecomposition<S>&, Complex);                       \
  template CMat c_matrix<S>(const LanczosDecomposition<S>&, Complex, Real);                               \
  template CMat shifted_residual<S>(const LanczosDecomposition<S>&, const Mat<S>&, const LinearOperator<S>&, \
                                    Complex);                                                             \
  template CMat shifted_error<S>(const LanczosDecomposition<S>&, const Mat<S>&, const SpectralOracle<S>&,   \
                                 Complex);                                                                \
  template Mat<S> quadratic_form_approx<S>(const LanczosDecomposition<S>&, const SpectralFunction&);      \
  template CRatio::CRatio(const LanczosDecomposition<S>&, Complex, Real);                                 \
  template CEvaluator::CEvaluator(const LanczosDecomposition<S>&);

BLOCKFA_INSTANTIATE(Real)
BLOCKFA_INSTANTIATE(Complex)
#undef BLOCKFA_INSTANTIATE

}  // namespace blockfa
