#include "blockfa/lanczos.hpp"

namespace blockfa {

namespace {

template <Field S>
Mat<S> assemble_tridiagonal(const std::vector<Mat<S>>& a, const std::vector<Mat<S>>& bs) {
  const Index k = static_cast<Index>(a.size());
  const Index b = a.front().rows();
  Mat<S> t = Mat<S>::Zero(k * b, k * b);
  for (Index j = 0; j < k; ++j) {
    t.block(j * b, j * b, b, b) = a[j];
    if (j + 1 < k) {
      // (j+1, j) block is B_{j+1} in 1-based numbering
      t.block((j + 1) * b, j * b, b, b) = bs[j + 1];
      t.block(j * b, (j + 1) * b, b, b) = bs[j + 1].adjoint();
    }
  }
  return t;
}

}  // namespace

template <Field S>
LanczosDecomposition<S>::LanczosDecomposition(Mat<S> q_all, std::vector<Mat<S>> a_blocks,
                                              std::vector<Mat<S>> b_blocks, bool reorth)
    : q_all_(std::move(q_all)), a_(std::move(a_blocks)), b_(std::move(b_blocks)), reorth_(reorth) {
  if (a_.empty()) throw Error(ErrorKind::InvalidArgument, "decomposition needs k >= 1");
  if (b_.size() != a_.size() + 1) throw Error(ErrorKind::InvalidArgument, "need B_0..B_k");
  if (q_all_.cols() != (k() + 1) * b()) throw Error(ErrorKind::InvalidArgument, "need Q_1..Q_{k+1}");
  t_ = assemble_tridiagonal(a_, b_);
  eig_ = herm_eig(t_);
}

template <Field S>
LanczosDecomposition<S> LanczosDecomposition<S>::prefix(Index j) const {
  if (j < 1 || j > k()) throw Error(ErrorKind::InvalidArgument, "prefix length out of range");
  std::vector<Mat<S>> a(a_.begin(), a_.begin() + j);
  std::vector<Mat<S>> bs(b_.begin(), b_.begin() + j + 1);
  return LanczosDecomposition(q_all_.leftCols((j + 1) * b()), std::move(a), std::move(bs), reorth_);
}

template <Field S>
LanczosDecomposition<S> block_lanczos(const LinearOperator<S>& h, const Mat<S>& v, Index k,
                                      const LanczosOptions& opts) {
  const Index n = h.dim();
  const Index b = v.cols();
  if (v.rows() != n) throw Error(ErrorKind::DimensionMismatch, "V rows must equal operator dimension");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  if ((k + 1) * b > n) throw Error(ErrorKind::InvalidArgument, "(k+1) b must not exceed n");

  Mat<S> q_all(n, (k + 1) * b);
  std::vector<Mat<S>> a_blocks;
  std::vector<Mat<S>> b_blocks;
  a_blocks.reserve(static_cast<std::size_t>(k));
  b_blocks.reserve(static_cast<std::size_t>(k + 1));

  {
    auto [q1, b0] = qr_tall<S>(v, opts.breakdown_rtol);
    q_all.leftCols(b) = q1;
    b_blocks.push_back(std::move(b0));
  }

  for (Index j = 1; j <= k; ++j) {
    const auto qj = q_all.middleCols((j - 1) * b, b);
    Mat<S> z = h.apply(qj);
    const Real scale = z.norm();
    if (j > 1) z.noalias() -= q_all.middleCols((j - 2) * b, b) * b_blocks[j - 1].adjoint();
    Mat<S> aj = qj.adjoint() * z;
    aj = (aj + aj.adjoint()).eval() * S(0.5);
    z.noalias() -= qj * aj;
    if (opts.reorth) {
      const auto prev = q_all.leftCols(j * b);
      for (int pass = 0; pass < 2; ++pass) {
        const Mat<S> coeff = prev.adjoint() * z;
        z.noalias() -= prev * coeff;
      }
    } else {
      // Local pass against Q_j only. Symmetrizing A_j leaves a skew residual
      // that the next QR amplifies by 1/sigma_min(B_j); without this step the
      // model problem drifts to Ritz values outside the spectrum.
      const Mat<S> coeff = qj.adjoint() * z;
      z.noalias() -= qj * coeff;
    }
    try {
      auto [qn, bj] = qr_tall<S>(z, opts.breakdown_rtol, scale);
      q_all.middleCols(j * b, b) = qn;
      b_blocks.push_back(std::move(bj));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::DegenerateBlock) {
        if (opts.truncate_on_breakdown && j > 1) {
          return LanczosDecomposition<S>(q_all.leftCols(j * b), std::move(a_blocks), std::move(b_blocks),
                                         opts.reorth);
        }
        throw Error(ErrorKind::DegenerateBlock, "block Krylov space degenerate at iteration " + std::to_string(j), j);
      }
      throw;
    }
    a_blocks.push_back(std::move(aj));
  }
  return LanczosDecomposition<S>(std::move(q_all), std::move(a_blocks), std::move(b_blocks), opts.reorth);
}

template <Field S>
RecurrenceResidual<S> recurrence_residual(const LanczosDecomposition<S>& d, const LinearOperator<S>& h) {
  const Index k = d.k();
  const Index b = d.b();
  const Mat<S> q = d.basis();
  Mat<S> f = h.apply(q);
  f.noalias() -= q * d.tridiagonal();
  f.rightCols(b).noalias() -= d.q_block(k + 1) * d.b_block(k);
  const Real fro = f.norm();
  return {std::move(f), fro};
}

#define BLOCKFA_INSTANTIATE(S)                                                                            \
  template class LanczosDecomposition<S>;                                                                 \
  template LanczosDecomposition<S> block_lanczos<S>(const LinearOperator<S>&, const Mat<S>&, Index,       \
                                                    const LanczosOptions&);                               \
  template RecurrenceResidual<S> recurrence_residual<S>(const LanczosDecomposition<S>&, const LinearOperator<S>&);

BLOCKFA_INSTANTIATE(Real)
BLOCKFA_INSTANTIATE(Complex)
#undef BLOCKFA_INSTANTIATE

}  // namespace blockfa
