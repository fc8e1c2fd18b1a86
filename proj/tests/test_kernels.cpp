#include "blockfa/bounds.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <vector>

using namespace blockfa;
using blockfa::test::random_block;

namespace {

CsrMatrix<Real> banded(Index n) {
  CsrMatrix<Real> a;
  a.rows = a.cols = n;
  a.row_ptr.push_back(0);
  for (Index i = 0; i < n; ++i) {
    for (Index j = std::max<Index>(0, i - 2); j <= std::min<Index>(n - 1, i + 2); ++j) {
      a.col_idx.push_back(j);
      a.values.push_back(1.0 / static_cast<Real>(1 + i + j));
    }
    a.row_ptr.push_back(static_cast<Index>(a.col_idx.size()));
  }
  return a;
}

}  // namespace

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
  SUBCASE("csr_apply") {
    const auto a = banded(500);
    const RMat x = random_block<Real>(500, 4, 1);
    RMat ys(500, 4), yp(500, 4);
    kernels::serial::csr_apply(a, x, ys);
    kernels::omp::csr_apply(a, x, yp);
    CHECK((ys - yp).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("diag_apply") {
    const RVec d = RVec::LinSpaced(300, 0.1, 1);
    const CMat x = random_block<Complex>(300, 3, 2);
    CMat ys(300, 3), yp(300, 3);
    kernels::serial::diag_apply(d, x, ys);
    kernels::omp::diag_apply(d, x, yp);
    CHECK((ys - yp).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("eval_nodes") {
    std::vector<Complex> z(257);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::polar(2.0, 0.01 * static_cast<Real>(i));
    std::vector<double> s(z.size()), p(z.size());
    const NodeFn fn = [](Complex u) { return std::abs(std::sqrt(u)) / std::abs(u - 0.3); };
    kernels::serial::eval_nodes(z, s, fn);
    kernels::omp::eval_nodes(z, p, fn);
    CHECK(s == p);
  }
  SUBCASE("shifted_error_norms through ErrorOracle") {
    const auto h = gen_linspace_diag<Real>(400, 1e-2, 1);
    const RMat v = gaussian_block<Real>(400, 2, 3);
    const auto d = block_lanczos<Real>(h, v, 8);
    const auto orc = h.oracle();
    const ErrorOracle<Real> es(d, v, orc, NormMode::shifted, 0, Exec::serial);
    const ErrorOracle<Real> ep(d, v, orc, NormMode::shifted, 0, Exec::parallel);
    std::vector<Complex> z;
    for (int i = 0; i < 45; ++i) z.push_back(std::polar(1.5, 0.1 * i));
    std::vector<double> a(z.size()), b(z.size());
    es.error_norms(z, a);
    ep.error_norms(z, b);
    CHECK(a == b);
  }
}
