#pragma once

#include "blockfa/types.hpp"

#include <functional>
#include <memory>

namespace blockfa {

template <Field S>
struct QrResult {
  Mat<S> q;  // n x b, orthonormal columns
  Mat<S> r;  // b x b, upper triangular, real nonnegative diagonal
};

/// Householder QR of a tall block. The diagonal of R is made real and
/// nonnegative by rephasing, so the factorization is unique.
///
/// Throws DegenerateBlock(j) when |R(j,j)| < rtol * scale, where scale
/// defaults to ||X||_F. Callers that orthogonalize a difference of larger
/// quantities (the Lanczos recurrence) pass the size of those quantities
/// as scale so that cancellation noise is also detected.
template <Field S>
QrResult<S> qr_tall(const Mat<S>& x, Real rtol = 1e-10, std::optional<Real> scale = {});

template <Field S>
struct HermEig {
  RVec evals;  // ascending
  Mat<S> evecs;
};

/// Dense Hermitian eigendecomposition, eigenvalues ascending.
template <Field S>
HermEig<S> herm_eig(const Mat<S>& m);

template <Field S>
Real hermitian_defect(const Mat<S>& m);

/// Largest singular value.
template <Field S>
Real norm2(const Mat<S>& m);

/// ||X^* X - I||_F.
template <Field S>
Real orthogonality_loss(const Mat<S>& x);

/// Eigendecomposition H = U diag(lambda) U^* of a Hermitian operator, held
/// for exact ("oracle") evaluation of f(H)X, resolvents and induced norms.
/// Diagonal operators carry no eigenvector matrix: U is the identity and the
/// eigenvalues stay in storage order.
template <Field S>
class SpectralOracle {
 public:
  static SpectralOracle diagonal(RVec entries);
  static SpectralOracle from_eig(HermEig<S> eig);

  Index dim() const noexcept { return evals_.size(); }
  const RVec& evals() const noexcept { return evals_; }
  bool is_diagonal() const noexcept { return evecs_ == nullptr; }
  /// Null for diagonal operators.
  const Mat<S>* evecs() const noexcept { return evecs_.get(); }
  Real lambda_min() const { return evals_.minCoeff(); }
  Real lambda_max() const { return evals_.maxCoeff(); }

  /// U^* X.
  CMat to_eigenbasis(const CMat& x) const;
  /// U^* X without leaving the operator's field.
  Mat<S> coords(const Mat<S>& x) const;
  /// U Y.
  CMat from_eigenbasis(const CMat& y) const;

  /// g(H) X for a scalar function sampled on the eigenvalues.
  CMat apply(const std::function<Complex(Real)>& g, const CMat& x) const;

  /// (H - zI)^{-1} X.
  CMat resolvent(Complex z, const CMat& x) const;

 private:
  RVec evals_;
  std::shared_ptr<const Mat<S>> evecs_;
};

/// ||(H - wI)^{1/2} X||_F. Throws NotPositiveDefinite if H - wI is not.
template <Field S>
Real induced_norm(const Mat<S>& x, const SpectralOracle<S>& h, Real w);

}  // namespace blockfa
