#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`; the two must
// agree bit-for-bit (no cross-iteration reductions are reordered), which
// tests/test_kernels.cpp checks and bench/bench_kernels.cpp times.

#include "blockfa/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace blockfa {

enum class Exec { serial, parallel };

/// Process-wide default used when an options struct does not override it.
Exec default_exec() noexcept;
void set_default_exec(Exec e) noexcept;

/// Compressed sparse row storage, 0-based.
template <Field S>
struct CsrMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> row_ptr;  // rows + 1
  std::vector<Index> col_idx;
  std::vector<S> values;

  Index nnz() const noexcept { return static_cast<Index>(values.size()); }
};

using NodeFn = std::function<double(Complex)>;

/// Inputs to the batched shifted-error norm: rows are eigen-coordinates of H.
///   E_m = diag(1/(lambda - z_m)) (r0 + py.middleCols(m*b, b))
///   out[m] = sqrt( sum_i weight_i * ||E_m(i,:)||^2 )
struct ShiftedNormBatch {
  const RVec* lambda = nullptr;
  const RVec* weight = nullptr;
  const CMat* r0 = nullptr;
  const CMat* py = nullptr;
};

namespace kernels::serial {

template <Field S>
void csr_apply(const CsrMatrix<S>& a, const Mat<S>& x, Mat<S>& y);

void diag_apply(const RVec& d, const RMat& x, RMat& y);
void diag_apply(const RVec& d, const CMat& x, CMat& y);

void eval_nodes(std::span<const Complex> nodes, std::span<double> out, const NodeFn& fn);

void shifted_error_norms(const ShiftedNormBatch& in, std::span<const Complex> nodes, std::span<double> out);

}  // namespace kernels::serial

namespace kernels::omp {

template <Field S>
void csr_apply(const CsrMatrix<S>& a, const Mat<S>& x, Mat<S>& y);

void diag_apply(const RVec& d, const RMat& x, RMat& y);
void diag_apply(const RVec& d, const CMat& x, CMat& y);

void eval_nodes(std::span<const Complex> nodes, std::span<double> out, const NodeFn& fn);

void shifted_error_norms(const ShiftedNormBatch& in, std::span<const Complex> nodes, std::span<double> out);

}  // namespace kernels::omp

namespace kernels {

template <Field S>
void csr_apply(Exec e, const CsrMatrix<S>& a, const Mat<S>& x, Mat<S>& y) {
  e == Exec::parallel ? omp::csr_apply(a, x, y) : serial::csr_apply(a, x, y);
}

template <class M>
void diag_apply(Exec e, const RVec& d, const M& x, M& y) {
  e == Exec::parallel ? omp::diag_apply(d, x, y) : serial::diag_apply(d, x, y);
}

inline void eval_nodes(Exec e, std::span<const Complex> nodes, std::span<double> out, const NodeFn& fn) {
  e == Exec::parallel ? omp::eval_nodes(nodes, out, fn) : serial::eval_nodes(nodes, out, fn);
}

inline void shifted_error_norms(Exec e, const ShiftedNormBatch& in, std::span<const Complex> nodes,
                                std::span<double> out) {
  e == Exec::parallel ? omp::shifted_error_norms(in, nodes, out) : serial::shifted_error_norms(in, nodes, out);
}

}  // namespace kernels
}  // namespace blockfa
