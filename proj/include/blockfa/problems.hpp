#pragma once

#include "blockfa/operators.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace blockfa {

/// n x n diagonal with lambda_i = lo + (i-1)(hi-lo)/(n-1).
template <Field S = Real>
DiagonalOperator<S> gen_linspace_diag(Index n, Real lo, Real hi);

/// Strakos model problem: lambda_1 = 1/kappa, lambda_n = 1,
/// lambda_i = lambda_1 + (i-1)/(n-1) (lambda_n - lambda_1) rho^(n-i).
template <Field S = Real>
DiagonalOperator<S> gen_model_problem(Index n, Real kappa, Real rho);

/// Indefinite diagonal with half the spectrum linearly spaced in
/// [-hi, -gap] and half in [gap, hi].
template <Field S = Real>
DiagonalOperator<S> gen_indefinite_diag(Index n, Real gap, Real hi);

/// Symmetric (Hermitian) Gaussian matrix (G + G^*)/(2 sqrt(n)).
template <Field S = Real>
DenseOperator<S> gen_dense_random(Index n, std::uint64_t seed);

/// Standard normal n x b block. The generator is std::mt19937_64 seeded with
/// `seed`; each pair of 64-bit draws (a, b) becomes uniforms
/// u = ((a >> 11) + 1) 2^-53 in (0,1] and v = (b >> 11) 2^-53 in [0,1),
/// and Box-Muller gives sqrt(-2 ln u) cos(2 pi v), sqrt(-2 ln u) sin(2 pi v)
/// in that order. Entries are filled column-major. Complex blocks draw the
/// real part then the imaginary part of each entry.
template <Field S = Real>
Mat<S> gaussian_block(Index n, Index b, std::uint64_t seed);

/// Streams standard normals with the scheme documented on gaussian_block.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed);
  double next();

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0;
};

// ---------------------------------------------------------------- Matrix Market

enum class MmField { real, complex, integer, pattern };
enum class MmSymmetry { general, symmetric, hermitian, skew_symmetric };

struct MatrixMarketEntry {
  Index row = 0;  // 0-based
  Index col = 0;
  Complex value;
};

struct MatrixMarketData {
  std::string banner;
  std::vector<std::string> comments;
  MmField field = MmField::real;
  MmSymmetry symmetry = MmSymmetry::general;
  Index rows = 0;
  Index cols = 0;
  /// Entries exactly as stored in the file (lower triangle for symmetric
  /// and Hermitian storage).
  std::vector<MatrixMarketEntry> entries;
};

/// Parses `%%MatrixMarket matrix coordinate <real|complex|integer> <general|symmetric|hermitian>`.
/// Array and pattern formats raise ParseError naming the unsupported kind;
/// malformed lines raise ParseError with the 1-based line number as index.
MatrixMarketData read_matrix_market(const std::filesystem::path& path);
MatrixMarketData parse_matrix_market(const std::string& text);

/// Writes coordinate format with 17 significant digits, so reading the file
/// back reproduces every entry exactly.
void write_matrix_market(const std::filesystem::path& path, const MatrixMarketData& data);

/// Expands symmetric/Hermitian storage and builds CSR. General storage is
/// checked for Hermitian symmetry to 1e-12 (relative to the largest entry)
/// and rejected with NonHermitian otherwise. Complex data read into a real
/// operator raises FieldUnsupported.
template <Field S>
CsrMatrix<S> to_csr(const MatrixMarketData& data, bool require_hermitian = true);

template <Field S>
std::shared_ptr<SparseOperator<S>> load_matrix_market(const std::filesystem::path& path);

// ---------------------------------------------------------------- Wilson

/// x -> P (x - (4/3) kappa D x) with P = I_3 (x) J_4 (x) I_256 and J_4 the
/// involution swapping spin components (1,3) and (2,4). P is stored as an
/// index map, never materialized. D itself is the (non-Hermitian) hopping
/// matrix, so it is held as raw CSR rather than as a LinearOperator.
class WilsonOperator final : public LinearOperator<Complex> {
 public:
  static constexpr Index colors = 3;
  static constexpr Index spins = 4;
  static constexpr Index sites = 256;
  static constexpr Index required_dim = colors * spins * sites;

  WilsonOperator(CsrMatrix<Complex> d, Real kappa_hopping, Exec exec = default_exec());

  Index dim() const override { return required_dim; }
  CMat apply(const CMat& x) const override;
  std::string describe() const override;

  /// Row i of P x is row perm()[i] of x.
  const std::vector<Index>& perm() const noexcept { return perm_; }
  CMat apply_permutation(const CMat& x) const;

 private:
  CsrMatrix<Complex> d_;
  Real kappa_;
  Exec exec_;
  std::vector<Index> perm_;
};

/// Loads the hopping matrix from Matrix Market without a Hermitian check.
std::shared_ptr<WilsonOperator> wilson_fermion(const std::filesystem::path& hopping_matrix, Real kappa_hopping);

/// Hopping parameter used with the conf5.0-00l4x4-1000 QCD matrix.
inline constexpr Real wilson_kappa_hopping = 0.20611;

}  // namespace blockfa
