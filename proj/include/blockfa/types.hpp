#pragma once

#include <Eigen/Dense>

#include <complex>
#include <concepts>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace blockfa {

using Real = double;
using Complex = std::complex<double>;
using Index = Eigen::Index;

/// The two scalar fields every numerical module is instantiated over.
template <class S>
concept Field = std::same_as<S, Real> || std::same_as<S, Complex>;

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using RMat = Mat<Real>;
using CMat = Mat<Complex>;
using RVec = Vec<Real>;
using CVec = Vec<Complex>;

template <class S>
inline constexpr bool is_complex_v = std::same_as<S, Complex>;

enum class ErrorKind {
  DegenerateBlock,
  NonHermitian,
  NotPositiveDefinite,
  DomainError,
  SingularShift,
  NoOracle,
  IllConditionedC,
  PoleInInterval,
  ContourTouchesSpectrum,
  QuadratureNoConvergence,
  FieldUnsupported,
  InvalidShift,
  DimensionMismatch,
  ParseError,
  InvalidArgument,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for numerical and input failures. `index` carries
/// the offending column (DegenerateBlock), iteration, or file line when one
/// applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::int64_t> index = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::int64_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::int64_t> index_;
};

/// Closed real interval [lo, hi].
struct SpectrumInterval {
  Real lo = 0;
  Real hi = 0;

  SpectrumInterval() = default;
  SpectrumInterval(Real lo_, Real hi_) : lo(lo_), hi(hi_) {
    if (!(lo_ <= hi_)) throw Error(ErrorKind::InvalidArgument, "SpectrumInterval requires lo <= hi");
  }

  bool contains(Real x) const noexcept { return lo <= x && x <= hi; }
  Real width() const noexcept { return hi - lo; }
};

template <Field S>
inline CMat to_complex(const Mat<S>& m) {
  if constexpr (is_complex_v<S>) {
    return m;
  } else {
    return m.template cast<Complex>();
  }
}

/// A * Y for a block in either field and a complex right factor; real A is
/// applied to the real and imaginary parts separately.
template <class Derived>
CMat times_complex(const Eigen::MatrixBase<Derived>& a, const CMat& y) {
  using S = typename Derived::Scalar;
  if constexpr (is_complex_v<S>) {
    return a * y;
  } else {
    CMat out(a.rows(), y.cols());
    out.real() = a * y.real();
    out.imag() = a * y.imag();
    return out;
  }
}

}  // namespace blockfa
