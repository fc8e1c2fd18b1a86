#include "blockfa/kernels.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>

namespace blockfa {

namespace {
std::atomic<Exec> g_exec{Exec::parallel};

double shifted_norm_at(const ShiftedNormBatch& in, Complex z, Index m) {
  const RVec& lam = *in.lambda;
  const RVec& wt = *in.weight;
  const CMat& r0 = *in.r0;
  const CMat& py = *in.py;
  const Index b = r0.cols();
  double acc = 0;
  for (Index c = 0; c < b; ++c) {
    const Index pc = m * b + c;
    for (Index i = 0; i < lam.size(); ++i) {
      const Complex e = (r0(i, c) + py(i, pc)) / (lam(i) - z);
      acc += wt(i) * std::norm(e);
    }
  }
  return std::sqrt(acc);
}
}  // namespace

Exec default_exec() noexcept { return g_exec.load(std::memory_order_relaxed); }
void set_default_exec(Exec e) noexcept { g_exec.store(e, std::memory_order_relaxed); }

namespace kernels::serial {

template <Field S>
void csr_apply(const CsrMatrix<S>& a, const Mat<S>& x, Mat<S>& y) {
  y.setZero(a.rows, x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    for (Index i = 0; i < a.rows; ++i) {
      S acc(0);
      for (Index p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) acc += a.values[p] * x(a.col_idx[p], c);
      y(i, c) = acc;
    }
  }
}

void diag_apply(const RVec& d, const RMat& x, RMat& y) {
  y.resize(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c)
    for (Index i = 0; i < x.rows(); ++i) y(i, c) = d(i) * x(i, c);
}

void diag_apply(const RVec& d, const CMat& x, CMat& y) {
  y.resize(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c)
    for (Index i = 0; i < x.rows(); ++i) y(i, c) = d(i) * x(i, c);
}

void eval_nodes(std::span<const Complex> nodes, std::span<double> out, const NodeFn& fn) {
  for (std::size_t m = 0; m < nodes.size(); ++m) out[m] = fn(nodes[m]);
}

void shifted_error_norms(const ShiftedNormBatch& in, std::span<const Complex> nodes, std::span<double> out) {
  for (std::size_t m = 0; m < nodes.size(); ++m) out[m] = shifted_norm_at(in, nodes[m], static_cast<Index>(m));
}

template void csr_apply<Real>(const CsrMatrix<Real>&, const RMat&, RMat&);
template void csr_apply<Complex>(const CsrMatrix<Complex>&, const CMat&, CMat&);

}  // namespace kernels::serial

namespace kernels::omp {

template <Field S>
void csr_apply(const CsrMatrix<S>& a, const Mat<S>& x, Mat<S>& y) {
  y.setZero(a.rows, x.cols());
  const Index rows = a.rows;
  const Index b = x.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    for (Index c = 0; c < b; ++c) {
      S acc(0);
      for (Index p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) acc += a.values[p] * x(a.col_idx[p], c);
      y(i, c) = acc;
    }
  }
}

void diag_apply(const RVec& d, const RMat& x, RMat& y) {
  y.resize(x.rows(), x.cols());
  const Index n = x.rows();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < x.cols(); ++c) y(i, c) = d(i) * x(i, c);
}

void diag_apply(const RVec& d, const CMat& x, CMat& y) {
  y.resize(x.rows(), x.cols());
  const Index n = x.rows();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < x.cols(); ++c) y(i, c) = d(i) * x(i, c);
}

void eval_nodes(std::span<const Complex> nodes, std::span<double> out, const NodeFn& fn) {
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(nodes.size());
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t m = 0; m < count; ++m) {
    try {
      out[m] = fn(nodes[m]);
    } catch (...) {
      std::lock_guard lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void shifted_error_norms(const ShiftedNormBatch& in, std::span<const Complex> nodes, std::span<double> out) {
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m = 0; m < count; ++m) out[m] = shifted_norm_at(in, nodes[m], static_cast<Index>(m));
}

template void csr_apply<Real>(const CsrMatrix<Real>&, const RMat&, RMat&);
template void csr_apply<Complex>(const CsrMatrix<Complex>&, const CMat&, CMat&);

}  // namespace kernels::omp
}  // namespace blockfa
