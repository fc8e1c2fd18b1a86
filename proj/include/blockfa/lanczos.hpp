#pragma once

#include "blockfa/operators.hpp"

#include <vector>

namespace blockfa {

struct LanczosOptions {
  bool reorth = true;
  /// Breakdown tolerance passed to qr_tall, relative to ||H Q_j||_F.
  Real breakdown_rtol = 1e-10;
  /// On breakdown at iteration j > 1, return the first j-1 iterations
  /// instead of throwing.
  bool truncate_on_breakdown = false;
};

/// Output of k steps of block Lanczos:
///   H Q = Q T + Q_{k+1} B_k E_k^*  (+ F_k in floating point)
/// with Q = [Q_1 .. Q_k], T block tridiagonal with diagonal blocks A_j and
/// subdiagonal blocks B_j, and V = Q_1 B_0.
///
/// The eigendecomposition of T is computed once on construction; every
/// resolvent and f(T) evaluation reuses it.
template <Field S>
class LanczosDecomposition {
 public:
  LanczosDecomposition(Mat<S> q_all, std::vector<Mat<S>> a_blocks, std::vector<Mat<S>> b_blocks, bool reorth);

  Index k() const noexcept { return static_cast<Index>(a_.size()); }
  Index b() const noexcept { return b_[0].rows(); }
  Index n() const noexcept { return q_all_.rows(); }
  bool reorthogonalized() const noexcept { return reorth_; }

  /// Q_j for j = 1..k+1.
  auto q_block(Index j) const { return q_all_.middleCols((j - 1) * b(), b()); }
  /// [Q_1 .. Q_k], n x kb.
  auto basis() const { return q_all_.leftCols(k() * b()); }
  /// [Q_1 .. Q_{k+1}].
  const Mat<S>& basis_with_next() const noexcept { return q_all_; }

  /// A_j, j = 1..k.
  const Mat<S>& a_block(Index j) const { return a_.at(static_cast<std::size_t>(j - 1)); }
  /// B_j, j = 0..k.
  const Mat<S>& b_block(Index j) const { return b_.at(static_cast<std::size_t>(j)); }

  const Mat<S>& tridiagonal() const noexcept { return t_; }
  const RVec& ritz_values() const noexcept { return eig_.evals; }
  const Mat<S>& ritz_vectors() const noexcept { return eig_.evecs; }

  /// First b rows of the eigenvector matrix of T, i.e. E_1^* U.
  auto ritz_top() const { return eig_.evecs.topRows(b()); }
  /// Last b rows, E_k^* U.
  auto ritz_bottom() const { return eig_.evecs.bottomRows(b()); }

  /// The decomposition after the first j iterations (j <= k).
  LanczosDecomposition prefix(Index j) const;

 private:
  Mat<S> q_all_;
  std::vector<Mat<S>> a_;
  std::vector<Mat<S>> b_;
  bool reorth_;
  Mat<S> t_;
  HermEig<S> eig_;
};

/// Block Lanczos. With `opts.reorth`, each new block is re-projected
/// against all previous blocks twice (classical Gram-Schmidt, "twice is
/// enough"). Without it, only a local pass against the current block is
/// made, so global orthogonality is still lost. Throws DegenerateBlock with the iteration as index when the
/// block Krylov space stops growing.
template <Field S>
LanczosDecomposition<S> block_lanczos(const LinearOperator<S>& h, const Mat<S>& v, Index k,
                                      const LanczosOptions& opts = {});

template <Field S>
struct RecurrenceResidual {
  Mat<S> f;  // n x kb
  Real fro_norm = 0;
};

/// F_k = H Q - Q T - Q_{k+1} B_k E_k^*, evaluated directly.
template <Field S>
RecurrenceResidual<S> recurrence_residual(const LanczosDecomposition<S>& d, const LinearOperator<S>& h);

}  // namespace blockfa
