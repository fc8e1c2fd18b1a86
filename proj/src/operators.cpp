#include "blockfa/operators.hpp"

#include "blockfa/problems.hpp"

#include <sstream>

namespace blockfa {

template <Field S>
SpectralOracle<S> LinearOperator<S>::oracle() const {
  if (dim() > max_dense_dim) {
    throw Error(ErrorKind::NoOracle, "operator of dimension " + std::to_string(dim()) + " is too large to factor");
  }
  Mat<S> dense = to_dense();
  // Explicit materialization picks up rounding asymmetry; the probe test
  // guards genuine non-Hermitian input.
  dense = (dense + dense.adjoint()).eval() * S(0.5);
  return SpectralOracle<S>::from_eig(herm_eig(dense));
}

template <Field S>
Mat<S> LinearOperator<S>::to_dense() const {
  return apply(Mat<S>::Identity(dim(), dim()));
}

template <Field S>
CMat apply_complex(const LinearOperator<S>& op, const CMat& x) {
  if constexpr (is_complex_v<S>) {
    return op.apply(x);
  } else {
    CMat out(op.dim(), x.cols());
    const RMat both = op.apply((RMat(x.rows(), 2 * x.cols()) << x.real(), x.imag()).finished());
    out.real() = both.leftCols(x.cols());
    out.imag() = both.rightCols(x.cols());
    return out;
  }
}

template <Field S>
DiagonalOperator<S>::DiagonalOperator(RVec diag, Exec exec) : diag_(std::move(diag)), exec_(exec) {
  if (diag_.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty diagonal");
  if (!diag_.allFinite()) throw Error(ErrorKind::InvalidArgument, "diagonal has non-finite entries");
}

template <Field S>
Mat<S> DiagonalOperator<S>::apply(const Mat<S>& x) const {
  if (x.rows() != dim()) throw Error(ErrorKind::DimensionMismatch, "diagonal apply row mismatch");
  Mat<S> y;
  kernels::diag_apply(exec_, diag_, x, y);
  return y;
}

template <Field S>
std::optional<SpectrumInterval> DiagonalOperator<S>::spectrum_hint() const {
  return SpectrumInterval(diag_.minCoeff(), diag_.maxCoeff());
}

template <Field S>
SpectralOracle<S> DiagonalOperator<S>::oracle() const {
  return SpectralOracle<S>::diagonal(diag_);
}

template <Field S>
std::string DiagonalOperator<S>::describe() const {
  std::ostringstream os;
  os << "diagonal n=" << dim() << " range=[" << diag_.minCoeff() << ", " << diag_.maxCoeff() << "]";
  return os.str();
}

template <Field S>
DenseOperator<S>::DenseOperator(Mat<S> m, Real tol) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw Error(ErrorKind::DimensionMismatch, "dense operator must be square");
  if (hermitian_defect(m_) > tol * std::max<Real>(m_.norm(), 1e-300)) {
    throw Error(ErrorKind::NonHermitian, "dense operator is not Hermitian");
  }
}

template <Field S>
SpectralOracle<S> DenseOperator<S>::oracle() const {
  const Mat<S> sym = (m_ + m_.adjoint()) * S(0.5);
  return SpectralOracle<S>::from_eig(herm_eig(sym));
}

template <Field S>
std::string DenseOperator<S>::describe() const {
  return "dense n=" + std::to_string(dim());
}

template <Field S>
SparseOperator<S>::SparseOperator(CsrMatrix<S> a, std::string label, Exec exec)
    : a_(std::move(a)), label_(std::move(label)), exec_(exec) {
  if (a_.rows != a_.cols) throw Error(ErrorKind::DimensionMismatch, "sparse operator must be square");
  if (static_cast<Index>(a_.row_ptr.size()) != a_.rows + 1) {
    throw Error(ErrorKind::InvalidArgument, "row_ptr has wrong length");
  }
}

template <Field S>
Mat<S> SparseOperator<S>::apply(const Mat<S>& x) const {
  if (x.rows() != dim()) throw Error(ErrorKind::DimensionMismatch, "sparse apply row mismatch");
  Mat<S> y;
  kernels::csr_apply(exec_, a_, x, y);
  return y;
}

template <Field S>
std::string SparseOperator<S>::describe() const {
  return label_ + " n=" + std::to_string(dim()) + " nnz=" + std::to_string(a_.nnz());
}

template <Field S>
Real hermitian_probe_defect(const LinearOperator<S>& op, int probes, std::uint64_t seed) {
  Real worst = 0;
  const Index n = op.dim();
  for (int p = 0; p < probes; ++p) {
    const Mat<S> x = gaussian_block<S>(n, 1, seed + 2 * static_cast<std::uint64_t>(p));
    const Mat<S> y = gaussian_block<S>(n, 1, seed + 2 * static_cast<std::uint64_t>(p) + 1);
    const Mat<S> hx = op.apply(x);
    const Mat<S> hy = op.apply(y);
    const S lhs = (x.adjoint() * hy)(0, 0);
    const S rhs = (hx.adjoint() * y)(0, 0);
    const Real scale = hx.norm() * y.norm() + x.norm() * hy.norm();
    if (scale > 0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

#define BLOCKFA_INSTANTIATE(S)                                                  \
  template class LinearOperator<S>;                                             \
  template CMat apply_complex<S>(const LinearOperator<S>&, const CMat&);        \
  template class DiagonalOperator<S>;                                           \
  template class DenseOperator<S>;                                              \
  template class SparseOperator<S>;                                             \
  template Real hermitian_probe_defect<S>(const LinearOperator<S>&, int, std::uint64_t);

BLOCKFA_INSTANTIATE(Real)
BLOCKFA_INSTANTIATE(Complex)
#undef BLOCKFA_INSTANTIATE

}  // namespace blockfa
