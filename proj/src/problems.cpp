#include "blockfa/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

namespace blockfa {

template <Field S>
DiagonalOperator<S> gen_linspace_diag(Index n, Real lo, Real hi) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "linspace diagonal needs n >= 2");
  if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, "linspace diagonal needs lo < hi");
  RVec d(n);
  for (Index i = 0; i < n; ++i) d(i) = lo + static_cast<Real>(i) * (hi - lo) / static_cast<Real>(n - 1);
  d(n - 1) = hi;
  return DiagonalOperator<S>(std::move(d));
}

template <Field S>
DiagonalOperator<S> gen_model_problem(Index n, Real kappa, Real rho) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "model problem needs n >= 2");
  if (!(kappa > 1)) throw Error(ErrorKind::InvalidArgument, "model problem needs kappa > 1");
  if (!(rho > 0 && rho <= 1)) throw Error(ErrorKind::InvalidArgument, "model problem needs 0 < rho <= 1");
  const Real l1 = 1.0 / kappa;
  const Real ln = 1.0;
  RVec d(n);
  d(0) = l1;
  d(n - 1) = ln;
  for (Index i = 1; i < n - 1; ++i) {
    d(i) = l1 + (static_cast<Real>(i) / static_cast<Real>(n - 1)) * (ln - l1) *
                    std::pow(rho, static_cast<Real>(n - 1 - i));
  }
  return DiagonalOperator<S>(std::move(d));
}

template <Field S>
DiagonalOperator<S> gen_indefinite_diag(Index n, Real gap, Real hi) {
  if (n < 4 || n % 2 != 0) throw Error(ErrorKind::InvalidArgument, "indefinite diagonal needs even n >= 4");
  if (!(gap > 0 && gap < hi)) throw Error(ErrorKind::InvalidArgument, "indefinite diagonal needs 0 < gap < hi");
  const Index half = n / 2;
  RVec d(n);
  for (Index i = 0; i < half; ++i) {
    const Real x = gap + static_cast<Real>(i) * (hi - gap) / static_cast<Real>(half - 1);
    d(half - 1 - i) = -x;
    d(half + i) = x;
  }
  return DiagonalOperator<S>(std::move(d));
}

template <Field S>
DenseOperator<S> gen_dense_random(Index n, std::uint64_t seed) {
  const Mat<S> g = gaussian_block<S>(n, n, seed);
  Mat<S> h = (g + g.adjoint()) / (2.0 * std::sqrt(static_cast<Real>(n)));
  return DenseOperator<S>(std::move(h));
}

NormalStream::NormalStream(std::uint64_t seed) : engine_(seed) {}

double NormalStream::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u = (static_cast<double>(engine_() >> 11) + 1.0) * scale;
  const double v = static_cast<double>(engine_() >> 11) * scale;
  const double r = std::sqrt(-2.0 * std::log(u));
  const double angle = 2.0 * std::numbers::pi * v;
  spare_ = r * std::sin(angle);
  have_spare_ = true;
  return r * std::cos(angle);
}

template <Field S>
Mat<S> gaussian_block(Index n, Index b, std::uint64_t seed) {
  if (n < 1 || b < 1) throw Error(ErrorKind::InvalidArgument, "gaussian_block needs positive sizes");
  NormalStream rng(seed);
  Mat<S> out(n, b);
  for (Index c = 0; c < b; ++c) {
    for (Index i = 0; i < n; ++i) {
      if constexpr (is_complex_v<S>) {
        const double re = rng.next();
        const double im = rng.next();
        out(i, c) = Complex(re, im);
      } else {
        out(i, c) = rng.next();
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- Matrix Market

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void parse_fail(const std::string& what, std::int64_t line) {
  throw Error(ErrorKind::ParseError, what + " (line " + std::to_string(line) + ")", line);
}

}  // namespace

MatrixMarketData parse_matrix_market(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::int64_t lineno = 0;
  MatrixMarketData data;

  if (!std::getline(in, line)) parse_fail("empty input", 1);
  ++lineno;
  {
    std::istringstream hs(line);
    std::string tag, object, format, field, symmetry;
    hs >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket") parse_fail("missing %%MatrixMarket banner", lineno);
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix") parse_fail("unsupported object '" + object + "'", lineno);
    if (format == "array") parse_fail("unsupported format 'array' (only coordinate is supported)", lineno);
    if (format != "coordinate") parse_fail("unsupported format '" + format + "'", lineno);
    if (field == "real" || field == "double") {
      data.field = MmField::real;
    } else if (field == "complex") {
      data.field = MmField::complex;
    } else if (field == "integer") {
      data.field = MmField::integer;
    } else if (field == "pattern") {
      parse_fail("unsupported field 'pattern' (values are required)", lineno);
    } else {
      parse_fail("unknown field '" + field + "'", lineno);
    }
    if (symmetry == "general") {
      data.symmetry = MmSymmetry::general;
    } else if (symmetry == "symmetric") {
      data.symmetry = MmSymmetry::symmetric;
    } else if (symmetry == "hermitian") {
      data.symmetry = MmSymmetry::hermitian;
    } else if (symmetry == "skew-symmetric") {
      data.symmetry = MmSymmetry::skew_symmetric;
    } else {
      parse_fail("unknown symmetry '" + symmetry + "'", lineno);
    }
    data.banner = line;
  }

  bool have_size = false;
  Index expected = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '%') {
      if (!have_size) data.comments.push_back(line);
      continue;
    }
    std::istringstream ls(line);
    if (!have_size) {
      long long r = 0, c = 0, nz = 0;
      if (!(ls >> r >> c >> nz) || r < 1 || c < 1 || nz < 0) parse_fail("bad size line", lineno);
      data.rows = r;
      data.cols = c;
      expected = nz;
      data.entries.reserve(static_cast<std::size_t>(nz));
      have_size = true;
      continue;
    }
    long long i = 0, j = 0;
    double re = 0, im = 0;
    if (!(ls >> i >> j >> re)) parse_fail("bad entry", lineno);
    if (data.field == MmField::complex && !(ls >> im)) parse_fail("complex entry missing imaginary part", lineno);
    if (i < 1 || j < 1 || i > data.rows || j > data.cols) parse_fail("index out of range", lineno);
    if (data.symmetry != MmSymmetry::general && j > i) {
      parse_fail("entry above the diagonal in symmetric storage", lineno);
    }
    data.entries.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), Complex(re, im)});
  }
  if (!have_size) parse_fail("missing size line", lineno);
  if (static_cast<Index>(data.entries.size()) != expected) {
    parse_fail("expected " + std::to_string(expected) + " entries, found " + std::to_string(data.entries.size()),
               lineno);
  }
  return data;
}

MatrixMarketData read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matrix_market(buf.str());
}

void write_matrix_market(const std::filesystem::path& path, const MatrixMarketData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  const char* field = data.field == MmField::complex ? "complex" : data.field == MmField::integer ? "integer" : "real";
  const char* sym = data.symmetry == MmSymmetry::symmetric        ? "symmetric"
                    : data.symmetry == MmSymmetry::hermitian      ? "hermitian"
                    : data.symmetry == MmSymmetry::skew_symmetric ? "skew-symmetric"
                                                                  : "general";
  out << "%%MatrixMarket matrix coordinate " << field << ' ' << sym << '\n';
  for (const auto& c : data.comments) out << c << '\n';
  out << data.rows << ' ' << data.cols << ' ' << data.entries.size() << '\n';
  out << std::setprecision(17);
  for (const auto& e : data.entries) {
    out << e.row + 1 << ' ' << e.col + 1 << ' ';
    if (data.field == MmField::integer) {
      out << static_cast<long long>(e.value.real());
    } else {
      out << e.value.real();
    }
    if (data.field == MmField::complex) out << ' ' << e.value.imag();
    out << '\n';
  }
}

template <Field S>
CsrMatrix<S> to_csr(const MatrixMarketData& data, bool require_hermitian) {
  if constexpr (!is_complex_v<S>) {
    if (data.field == MmField::complex) {
      throw Error(ErrorKind::FieldUnsupported, "complex Matrix Market data cannot populate a real operator");
    }
  }
  if (data.rows != data.cols) throw Error(ErrorKind::DimensionMismatch, "matrix is not square");
  if (require_hermitian && data.symmetry == MmSymmetry::skew_symmetric) {
    throw Error(ErrorKind::NonHermitian, "skew-symmetric matrix is not Hermitian");
  }

  std::map<std::pair<Index, Index>, Complex> coo;
  for (const auto& e : data.entries) {
    coo[{e.row, e.col}] += e.value;
    if (e.row != e.col) {
      switch (data.symmetry) {
        case MmSymmetry::general: break;
        case MmSymmetry::symmetric: coo[{e.col, e.row}] += e.value; break;
        case MmSymmetry::hermitian: coo[{e.col, e.row}] += std::conj(e.value); break;
        case MmSymmetry::skew_symmetric: coo[{e.col, e.row}] -= e.value; break;
      }
    }
  }

  if (require_hermitian) {
    Real largest = 0;
    for (const auto& [ij, v] : coo) largest = std::max(largest, std::abs(v));
    for (const auto& [ij, v] : coo) {
      const auto it = coo.find({ij.second, ij.first});
      const Complex mirror = it == coo.end() ? Complex(0) : std::conj(it->second);
      if (std::abs(v - mirror) > 1e-12 * largest) {
        throw Error(ErrorKind::NonHermitian, "entry (" + std::to_string(ij.first + 1) + "," +
                                                 std::to_string(ij.second + 1) + ") breaks Hermitian symmetry");
      }
    }
  }

  CsrMatrix<S> a;
  a.rows = data.rows;
  a.cols = data.cols;
  a.row_ptr.assign(static_cast<std::size_t>(a.rows + 1), 0);
  a.col_idx.reserve(coo.size());
  a.values.reserve(coo.size());
  for (const auto& [ij, v] : coo) {
    ++a.row_ptr[static_cast<std::size_t>(ij.first + 1)];
    a.col_idx.push_back(ij.second);
    if constexpr (is_complex_v<S>) {
      a.values.push_back(v);
    } else {
      a.values.push_back(v.real());
    }
  }
  for (std::size_t i = 1; i < a.row_ptr.size(); ++i) a.row_ptr[i] += a.row_ptr[i - 1];
  return a;
}

template <Field S>
std::shared_ptr<SparseOperator<S>> load_matrix_market(const std::filesystem::path& path) {
  return std::make_shared<SparseOperator<S>>(to_csr<S>(read_matrix_market(path)), path.filename().string());
}

// ---------------------------------------------------------------- Wilson

WilsonOperator::WilsonOperator(CsrMatrix<Complex> d, Real kappa_hopping, Exec exec)
    : d_(std::move(d)), kappa_(kappa_hopping), exec_(exec) {
  if (d_.rows != required_dim || d_.cols != required_dim) {
    throw Error(ErrorKind::DimensionMismatch,
                "Wilson operator needs a " + std::to_string(required_dim) + "-dimensional hopping matrix");
  }
  constexpr Index spin_swap[spins] = {2, 3, 0, 1};
  perm_.resize(static_cast<std::size_t>(required_dim));
  for (Index c = 0; c < colors; ++c)
    for (Index s = 0; s < spins; ++s)
      for (Index r = 0; r < sites; ++r)
        perm_[static_cast<std::size_t>((c * spins + s) * sites + r)] = (c * spins + spin_swap[s]) * sites + r;
}

CMat WilsonOperator::apply_permutation(const CMat& x) const {
  CMat y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) y.row(i) = x.row(perm_[static_cast<std::size_t>(i)]);
  return y;
}

CMat WilsonOperator::apply(const CMat& x) const {
  if (x.rows() != dim()) throw Error(ErrorKind::DimensionMismatch, "Wilson apply row mismatch");
  CMat inner = x;
  if (kappa_ != 0) {
    CMat dx;
    kernels::csr_apply(exec_, d_, x, dx);
    inner.noalias() -= (4.0 / 3.0) * kappa_ * dx;
  }
  return apply_permutation(inner);
}

std::string WilsonOperator::describe() const {
  std::ostringstream os;
  os << "wilson kappa_hopping=" << kappa_ << " D nnz=" << d_.nnz();
  return os.str();
}

std::shared_ptr<WilsonOperator> wilson_fermion(const std::filesystem::path& hopping_matrix, Real kappa_hopping) {
  return std::make_shared<WilsonOperator>(to_csr<Complex>(read_matrix_market(hopping_matrix), false), kappa_hopping);
}

#define BLOCKFA_INSTANTIATE(S)                                                               \
  template DiagonalOperator<S> gen_linspace_diag<S>(Index, Real, Real);                      \
  template DiagonalOperator<S> gen_model_problem<S>(Index, Real, Real);                      \
  template DiagonalOperator<S> gen_indefinite_diag<S>(Index, Real, Real);                    \
  template DenseOperator<S> gen_dense_random<S>(Index, std::uint64_t);                       \
  template Mat<S> gaussian_block<S>(Index, Index, std::uint64_t);                            \
  template CsrMatrix<S> to_csr<S>(const MatrixMarketData&, bool);                            \
  template std::shared_ptr<SparseOperator<S>> load_matrix_market<S>(const std::filesystem::path&);

BLOCKFA_INSTANTIATE(Real)
BLOCKFA_INSTANTIATE(Complex)
#undef BLOCKFA_INSTANTIATE

}  // namespace blockfa
