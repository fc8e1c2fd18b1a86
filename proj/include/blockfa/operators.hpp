#pragma once

#include "blockfa/kernels.hpp"
#include "blockfa/linalg.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace blockfa {

/// Hermitian operator with a block apply. Implementations are immutable
/// after construction, so applies may run concurrently.
template <Field S>
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Index dim() const = 0;
  virtual Mat<S> apply(const Mat<S>& x) const = 0;

  /// Extreme eigenvalues when known without a solve.
  virtual std::optional<SpectrumInterval> spectrum_hint() const { return std::nullopt; }

  /// Exact eigendecomposition for error oracles. The default materializes
  /// the operator densely and throws NoOracle above `max_dense_dim`.
  virtual SpectralOracle<S> oracle() const;

  virtual std::string describe() const = 0;

  /// Dense n x n materialization by applying to identity columns.
  Mat<S> to_dense() const;

  static constexpr Index max_dense_dim = 4096;
};

/// Applies a real-field operator to a complex block by splitting parts.
template <Field S>
CMat apply_complex(const LinearOperator<S>& op, const CMat& x);

template <Field S>
class DiagonalOperator final : public LinearOperator<S> {
 public:
  explicit DiagonalOperator(RVec diag, Exec exec = default_exec());

  Index dim() const override { return diag_.size(); }
  Mat<S> apply(const Mat<S>& x) const override;
  std::optional<SpectrumInterval> spectrum_hint() const override;
  SpectralOracle<S> oracle() const override;
  std::string describe() const override;

  const RVec& diagonal() const noexcept { return diag_; }

 private:
  RVec diag_;
  Exec exec_;
};

template <Field S>
class DenseOperator final : public LinearOperator<S> {
 public:
  /// Throws NonHermitian if ||M - M^*||_F exceeds `tol * ||M||_F`.
  explicit DenseOperator(Mat<S> m, Real tol = 1e-12);

  Index dim() const override { return m_.rows(); }
  Mat<S> apply(const Mat<S>& x) const override { return m_ * x; }
  SpectralOracle<S> oracle() const override;
  std::string describe() const override;

  const Mat<S>& matrix() const noexcept { return m_; }

 private:
  Mat<S> m_;
};

template <Field S>
class SparseOperator final : public LinearOperator<S> {
 public:
  explicit SparseOperator(CsrMatrix<S> a, std::string label = "sparse", Exec exec = default_exec());

  Index dim() const override { return a_.rows; }
  Mat<S> apply(const Mat<S>& x) const override;
  std::string describe() const override;

  const CsrMatrix<S>& csr() const noexcept { return a_; }

 private:
  CsrMatrix<S> a_;
  std::string label_;
  Exec exec_;
};

/// Hermitian probe test: max over `probes` random pairs of
/// |x^* H y - (H x)^* y| / (||Hx|| ||y|| + ||x|| ||Hy||).
template <Field S>
Real hermitian_probe_defect(const LinearOperator<S>& op, int probes = 10, std::uint64_t seed = 7);

}  // namespace blockfa
