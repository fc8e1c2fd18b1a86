#include "blockfa/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace blockfa {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegenerateBlock: return "DegenerateBlock";
    case ErrorKind::NonHermitian: return "NonHermitian";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::SingularShift: return "SingularShift";
    case ErrorKind::NoOracle: return "NoOracle";
    case ErrorKind::IllConditionedC: return "IllConditionedC";
    case ErrorKind::PoleInInterval: return "PoleInInterval";
    case ErrorKind::ContourTouchesSpectrum: return "ContourTouchesSpectrum";
    case ErrorKind::QuadratureNoConvergence: return "QuadratureNoConvergence";
    case ErrorKind::FieldUnsupported: return "FieldUnsupported";
    case ErrorKind::InvalidShift: return "InvalidShift";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

template <Field S>
S unit_phase(S x) {
  const Real a = std::abs(x);
  if (a == 0) return S(1);
  return x / a;
}

}  // namespace

template <Field S>
QrResult<S> qr_tall(const Mat<S>& x, Real rtol, std::optional<Real> scale) {
  const Index n = x.rows();
  const Index b = x.cols();
  if (b < 1 || n < b) {
    throw Error(ErrorKind::InvalidArgument, "qr_tall needs n >= b >= 1");
  }
  if (!x.allFinite()) throw Error(ErrorKind::InvalidArgument, "qr_tall input has non-finite entries");

  Mat<S> a = x;
  std::vector<Vec<S>> reflectors(static_cast<std::size_t>(b));

  for (Index j = 0; j < b; ++j) {
    const Index m = n - j;
    Vec<S> v = a.block(j, j, m, 1);
    const Real alpha = v.norm();
    if (alpha == 0) {
      reflectors[j] = Vec<S>::Zero(m);
      continue;
    }
    // beta = -phase(x0) * ||x|| avoids cancellation in v = x - beta e1
    const S beta = -unit_phase(v(0)) * alpha;
    v(0) -= beta;
    const Real vnorm = v.norm();
    if (vnorm == 0) {
      reflectors[j] = Vec<S>::Zero(m);
      continue;
    }
    v /= vnorm;
    auto tail = a.block(j, j, m, b - j);
    tail.noalias() -= (S(2) * v) * (v.adjoint() * tail);
    reflectors[j] = std::move(v);
  }

  Mat<S> r = a.topRows(b).template triangularView<Eigen::Upper>();

  Mat<S> q = Mat<S>::Identity(n, b);
  for (Index j = b - 1; j >= 0; --j) {
    const Vec<S>& v = reflectors[j];
    if (v.size() == 0 || v.squaredNorm() == 0) continue;
    auto tail = q.bottomRows(n - j);
    tail.noalias() -= (S(2) * v) * (v.adjoint() * tail);
  }

  for (Index j = 0; j < b; ++j) {
    const S phase = unit_phase(r(j, j));
    r.row(j) *= Eigen::numext::conj(phase);
    q.col(j) *= phase;
    r(j, j) = std::abs(r(j, j));
  }

  const Real ref = scale.value_or(x.norm());
  for (Index j = 0; j < b; ++j) {
    if (!(std::abs(r(j, j)) > rtol * ref) || ref == 0) {
      throw Error(ErrorKind::DegenerateBlock,
                  "R diagonal " + std::to_string(std::abs(r(j, j))) + " below tolerance at column " +
                      std::to_string(j),
                  j);
    }
  }
  return {std::move(q), std::move(r)};
}

template <Field S>
Real hermitian_defect(const Mat<S>& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<Real>::infinity();
  return (m - m.adjoint()).norm();
}

template <Field S>
HermEig<S> herm_eig(const Mat<S>& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::NonHermitian, "matrix is not square");
  const Real tol = std::numeric_limits<Real>::epsilon() * m.norm() * static_cast<Real>(std::max<Index>(m.rows(), 1));
  if (hermitian_defect(m) > tol) {
    throw Error(ErrorKind::NonHermitian, "||M - M^*||_F = " + std::to_string(hermitian_defect(m)));
  }
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(m);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NonHermitian, "eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

template <Field S>
Real norm2(const Mat<S>& m) {
  if (m.size() == 0) return 0;
  if (m.rows() > 4 * m.cols()) {
    const Mat<S> gram = m.adjoint() * m;
    Eigen::SelfAdjointEigenSolver<Mat<S>> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max<Real>(es.eigenvalues().maxCoeff(), 0));
  }
  if (m.cols() > 4 * m.rows()) {
    const Mat<S> gram = m * m.adjoint();
    Eigen::SelfAdjointEigenSolver<Mat<S>> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max<Real>(es.eigenvalues().maxCoeff(), 0));
  }
  Eigen::JacobiSVD<Mat<S>> svd(m);
  return svd.singularValues()(0);
}

template <Field S>
Real orthogonality_loss(const Mat<S>& x) {
  return (x.adjoint() * x - Mat<S>::Identity(x.cols(), x.cols())).norm();
}

template <Field S>
SpectralOracle<S> SpectralOracle<S>::diagonal(RVec entries) {
  SpectralOracle o;
  o.evals_ = std::move(entries);
  return o;
}

template <Field S>
SpectralOracle<S> SpectralOracle<S>::from_eig(HermEig<S> eig) {
  SpectralOracle o;
  o.evals_ = std::move(eig.evals);
  o.evecs_ = std::make_shared<const Mat<S>>(std::move(eig.evecs));
  return o;
}

template <Field S>
CMat SpectralOracle<S>::to_eigenbasis(const CMat& x) const {
  if (!evecs_) return x;
  if constexpr (is_complex_v<S>) {
    return evecs_->adjoint() * x;
  } else {
    CMat out(x.rows(), x.cols());
    out.real() = evecs_->transpose() * x.real();
    out.imag() = evecs_->transpose() * x.imag();
    return out;
  }
}

template <Field S>
Mat<S> SpectralOracle<S>::coords(const Mat<S>& x) const {
  if (!evecs_) return x;
  return evecs_->adjoint() * x;
}

template <Field S>
CMat SpectralOracle<S>::from_eigenbasis(const CMat& y) const {
  if (!evecs_) return y;
  if constexpr (is_complex_v<S>) {
    return (*evecs_) * y;
  } else {
    CMat out(y.rows(), y.cols());
    out.real() = (*evecs_) * y.real();
    out.imag() = (*evecs_) * y.imag();
    return out;
  }
}

template <Field S>
CMat SpectralOracle<S>::apply(const std::function<Complex(Real)>& g, const CMat& x) const {
  if (x.rows() != dim()) throw Error(ErrorKind::DimensionMismatch, "oracle apply row mismatch");
  CMat y = to_eigenbasis(x);
  for (Index i = 0; i < y.rows(); ++i) y.row(i) *= g(evals_(i));
  return from_eigenbasis(y);
}

template <Field S>
CMat SpectralOracle<S>::resolvent(Complex z, const CMat& x) const {
  for (Index i = 0; i < evals_.size(); ++i) {
    if (std::abs(evals_(i) - z) == 0) {
      throw Error(ErrorKind::SingularShift, "shift coincides with an eigenvalue of H");
    }
  }
  return apply([z](Real lam) { return Complex(1) / (lam - z); }, x);
}

template <Field S>
Real induced_norm(const Mat<S>& x, const SpectralOracle<S>& h, Real w) {
  if (!std::isfinite(w)) throw Error(ErrorKind::InvalidShift, "induced norm shift must be finite");
  if (x.rows() != h.dim()) throw Error(ErrorKind::DimensionMismatch, "induced_norm row mismatch");
  const RVec& lam = h.evals();
  for (Index i = 0; i < lam.size(); ++i) {
    if (!(lam(i) - w > 0)) {
      throw Error(ErrorKind::NotPositiveDefinite, "H - wI has eigenvalue " + std::to_string(lam(i) - w));
    }
  }
  const Mat<S> y = h.coords(x);
  Real acc = 0;
  for (Index i = 0; i < y.rows(); ++i) acc += (lam(i) - w) * y.row(i).squaredNorm();
  return std::sqrt(acc);
}

#define BLOCKFA_INSTANTIATE(S)                                                          \
  template QrResult<S> qr_tall<S>(const Mat<S>&, Real, std::optional<Real>);          \
  template HermEig<S> herm_eig<S>(const Mat<S>&);                                       \
  template Real hermitian_defect<S>(const Mat<S>&);                                     \
  template Real norm2<S>(const Mat<S>&);                                                \
  template Real orthogonality_loss<S>(const Mat<S>&);                                   \
  template class SpectralOracle<S>;                                                     \
  template Real induced_norm<S>(const Mat<S>&, const SpectralOracle<S>&, Real);

BLOCKFA_INSTANTIATE(Real)
BLOCKFA_INSTANTIATE(Complex)
#undef BLOCKFA_INSTANTIATE

}  // namespace blockfa
