#include "blockfa/problems.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace blockfa;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("blockfa_test_" + name);
}

CsrMatrix<Complex> empty_csr(Index n) {
  CsrMatrix<Complex> a;
  a.rows = a.cols = n;
  a.row_ptr.assign(static_cast<std::size_t>(n + 1), 0);
  return a;
}

}  // namespace

TEST_CASE("linspace spectra") {
  const auto a = gen_linspace_diag<Real>(1000, 1e-2, 1);
  CHECK(a.diagonal()(0) == 0.01);
  CHECK(a.diagonal()(999) == 1.0);
  const auto b = gen_linspace_diag<Real>(2, 0, 1);
  CHECK(b.diagonal()(0) == 0.0);
  CHECK(b.diagonal()(1) == 1.0);
  const auto c = gen_linspace_diag<Real>(5, 1, 5);
  for (Index i = 0; i < 5; ++i) CHECK(c.diagonal()(i) == static_cast<Real>(i + 1));
  for (Index i = 0; i < 1000; ++i)
    CHECK(std::abs(a.diagonal()(i) - (1e-2 + static_cast<Real>(i) * (1 - 1e-2) / 999)) <= 1e-15);
}

TEST_CASE("model problem spectrum") {
  const auto h = gen_model_problem<Real>(500, 1e3, 0.9);
  const RVec& d = h.diagonal();
  CHECK(d(0) == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(d(499) == doctest::Approx(1).epsilon(1e-15));
  CHECK(std::abs(d(1) - (0.001 + (1.0 / 499) * 0.999 * std::pow(0.9, 498))) <= 1e-15);
  for (Index i = 0; i < 500; ++i) {
    const Real expect = 1e-3 + static_cast<Real>(i) / 499 * (1 - 1e-3) * std::pow(0.9, static_cast<Real>(499 - i));
    CHECK(std::abs(d(i) - expect) <= 1e-15);
  }
  const auto flat = gen_model_problem<Real>(50, 10, 1);
  const auto lin = gen_linspace_diag<Real>(50, 0.1, 1);
  CHECK((flat.diagonal() - lin.diagonal()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("indefinite diagonal") {
  const auto h = gen_indefinite_diag<Real>(100, 0.05, 1);
  const RVec& d = h.diagonal();
  CHECK(d.minCoeff() == doctest::Approx(-1));
  CHECK(d.maxCoeff() == doctest::Approx(1));
  CHECK(d.cwiseAbs().minCoeff() == doctest::Approx(0.05));
  CHECK((d.array() < 0).count() == 50);
}

TEST_CASE_TEMPLATE("generated operators pass the Hermitian probe", S, Real, Complex) {
  CHECK(hermitian_probe_defect<S>(gen_linspace_diag<S>(100, 0, 1)) <= 1e-10);
  CHECK(hermitian_probe_defect<S>(gen_model_problem<S>(100, 1e3, 0.9)) <= 1e-10);
  CHECK(hermitian_probe_defect<S>(gen_dense_random<S>(80, 4)) <= 1e-10);
  CHECK(hermitian_probe_defect<S>(gen_indefinite_diag<S>(80, 0.1, 2)) <= 1e-10);
}

TEST_CASE("gaussian_block") {
  const RMat a = gaussian_block<Real>(300, 4, 9);
  const RMat b = gaussian_block<Real>(300, 4, 9);
  CHECK((a - b).norm() == 0.0);
  CHECK((gaussian_block<Real>(300, 4, 10) - a).norm() > 0);

  // Reference draw from the documented scheme.
  std::mt19937_64 eng(0);
  const std::uint64_t x = eng(), y = eng();
  const double u = (static_cast<double>(x >> 11) + 1) * 0x1p-53;
  const double v = static_cast<double>(y >> 11) * 0x1p-53;
  const double first = std::sqrt(-2 * std::log(u)) * std::cos(2 * std::numbers::pi * v);
  const double second = std::sqrt(-2 * std::log(u)) * std::sin(2 * std::numbers::pi * v);
  const RMat g = gaussian_block<Real>(4, 1, 0);
  CHECK(g(0, 0) == first);
  CHECK(g(1, 0) == second);
  const CMat gc = gaussian_block<Complex>(2, 1, 0);
  CHECK(gc(0, 0) == Complex(first, second));

  Real worst = 0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = i + 1; j < 4; ++j)
      worst = std::max(worst, std::abs(a.col(i).dot(a.col(j))) / (a.col(i).norm() * a.col(j).norm()));
  MESSAGE("largest column cosine for n = 300: " << worst << " (5/sqrt(n) = " << 5 / std::sqrt(300.0) << ")");
}

TEST_CASE("Matrix Market reading") {
  SUBCASE("symmetric lower-triangle storage") {
    const auto data = parse_matrix_market(
        "%%MatrixMarket matrix coordinate real symmetric\n% a comment\n2 2 3\n1 1 2\n2 1 1\n2 2 3\n");
    CHECK(data.symmetry == MmSymmetry::symmetric);
    CHECK(data.comments.size() == 1);
    const SparseOperator<Real> op(to_csr<Real>(data));
    RMat expect(2, 2);
    expect << 2, 1, 1, 3;
    CHECK((op.to_dense() - expect).norm() == 0.0);
  }
  SUBCASE("complex Hermitian storage") {
    const auto data = parse_matrix_market(
        "%%MatrixMarket matrix coordinate complex hermitian\n2 2 3\n1 1 2 0\n2 1 1 1\n2 2 3 0\n");
    const SparseOperator<Complex> op(to_csr<Complex>(data));
    const CMat m = op.to_dense();
    CHECK(m(1, 0) == Complex(1, 1));
    CHECK(m(0, 1) == Complex(1, -1));
    CHECK_THROWS_AS(to_csr<Real>(data), Error);
  }
  SUBCASE("unsupported kinds are named") {
    for (const char* text : {"%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n",
                             "%%MatrixMarket matrix coordinate pattern symmetric\n2 2 1\n1 1\n"}) {
      try {
        parse_matrix_market(text);
        FAIL("expected ParseError");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
        const std::string what = e.what();
        CHECK((what.find("array") != std::string::npos || what.find("pattern") != std::string::npos));
      }
    }
  }
  SUBCASE("malformed lines report their number") {
    try {
      parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 x 1\n");
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
      REQUIRE(e.index().has_value());
      CHECK(*e.index() == 4);
    }
  }
  SUBCASE("general storage must be Hermitian") {
    const auto data = parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1\n2 1 2\n");
    try {
      to_csr<Real>(data);
      FAIL("expected NonHermitian");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NonHermitian);
    }
  }
  SUBCASE("round trip is exact") {
    MatrixMarketData data;
    data.banner = "%%MatrixMarket matrix coordinate complex hermitian";
    data.field = MmField::complex;
    data.symmetry = MmSymmetry::hermitian;
    data.rows = data.cols = 3;
    data.entries = {{0, 0, Complex(0.1, 0)}, {1, 0, Complex(1.0 / 3, -2.0 / 7)}, {2, 2, Complex(std::exp(1.0), 0)}};
    const auto path = temp_file("roundtrip.mtx");
    write_matrix_market(path, data);
    const auto back = read_matrix_market(path);
    std::filesystem::remove(path);
    REQUIRE(back.entries.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.entries[i].row == data.entries[i].row);
      CHECK(back.entries[i].col == data.entries[i].col);
      CHECK(back.entries[i].value == data.entries[i].value);
    }
  }
  SUBCASE("load_matrix_market from disk") {
    const auto path = temp_file("small.mtx");
    std::ofstream(path) << "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 1\n2 2 2\n3 1 0.5\n";
    const auto op = load_matrix_market<Real>(path);
    std::filesystem::remove(path);
    CHECK(op->dim() == 3);
    CHECK(op->to_dense()(0, 2) == 0.5);
    CHECK_THROWS_AS(read_matrix_market(temp_file("missing.mtx")), Error);
  }
}

TEST_CASE("Wilson operator") {
  const Index n = WilsonOperator::required_dim;
  const WilsonOperator pure(empty_csr(n), 0.0);
  const CMat x = gaussian_block<Complex>(n, 2, 3);
  SUBCASE("P is an involution and kappa = 0 gives P") {
    const CMat px = pure.apply_permutation(x);
    CHECK((pure.apply_permutation(px) - x).norm() == 0.0);
    CHECK((pure.apply(x) - px).norm() == 0.0);
    CHECK((px - x).norm() > 0);
  }
  SUBCASE("P swaps spin components 1<->3 and 2<->4") {
    // Index layout color * (4 * 256) + spin * 256 + site.
    const auto& p = pure.perm();
    CHECK(p[0] == 2 * 256);
    CHECK(p[256 + 5] == 3 * 256 + 5);
    CHECK(p[1024 + 2 * 256 + 7] == 1024 + 7);
  }
  SUBCASE("hopping term") {
    // D = I gives x -> P (1 - 4 kappa / 3) x.
    CsrMatrix<Complex> id = empty_csr(n);
    for (Index i = 0; i < n; ++i) {
      id.col_idx.push_back(i);
      id.values.push_back(1);
      id.row_ptr[static_cast<std::size_t>(i + 1)] = i + 1;
    }
    const WilsonOperator w(id, 0.3);
    CHECK((w.apply(x) - (1 - 0.4) * pure.apply_permutation(x)).norm() <= 1e-14 * x.norm());
  }
  SUBCASE("dimension mismatch") {
    try {
      WilsonOperator bad(empty_csr(100), 0.2);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
  }
  CHECK(wilson_kappa_hopping == 0.20611);
}
