// Serial against OpenMP versions of the inner kernels. Each benchmark takes
// the execution mode as its first argument (0 serial, 1 OpenMP).

#include "blockfa/bounds.hpp"
#include "blockfa/problems.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace blockfa;

namespace {

Exec mode(const benchmark::State& s) { return s.range(0) == 0 ? Exec::serial : Exec::parallel; }

void label(benchmark::State& s) { s.SetLabel(s.range(0) == 0 ? "serial" : "omp"); }

CsrMatrix<Real> laplacian_2d(Index m) {
  CsrMatrix<Real> a;
  a.rows = a.cols = m * m;
  a.row_ptr.push_back(0);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) {
      const Index r = i * m + j;
      const auto add = [&](Index c, Real v) {
        a.col_idx.push_back(c);
        a.values.push_back(v);
      };
      if (i > 0) add(r - m, -1);
      if (j > 0) add(r - 1, -1);
      add(r, 4);
      if (j + 1 < m) add(r + 1, -1);
      if (i + 1 < m) add(r + m, -1);
      a.row_ptr.push_back(static_cast<Index>(a.col_idx.size()));
    }
  return a;
}

void BM_csr_apply(benchmark::State& s) {
  const auto a = laplacian_2d(s.range(1));
  const RMat x = gaussian_block<Real>(a.rows, 8, 1);
  RMat y(a.rows, 8);
  for (auto _ : s) {
    kernels::csr_apply(mode(s), a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  s.SetItemsProcessed(s.iterations() * a.nnz() * 8);
  label(s);
}

void BM_diag_apply(benchmark::State& s) {
  const Index n = s.range(1);
  const RVec d = RVec::LinSpaced(n, 1e-2, 1);
  const RMat x = gaussian_block<Real>(n, 8, 2);
  RMat y(n, 8);
  for (auto _ : s) {
    kernels::diag_apply(mode(s), d, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  s.SetItemsProcessed(s.iterations() * n * 8);
  label(s);
}

void BM_eval_nodes(benchmark::State& s) {
  std::vector<Complex> z(static_cast<std::size_t>(s.range(1)));
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::polar(2.0, 0.001 * static_cast<Real>(i));
  std::vector<double> out(z.size());
  const NodeFn fn = [](Complex u) { return std::abs(std::sqrt(u)) * q_s(SpectrumInterval(1e-2, 1), 0, u); };
  for (auto _ : s) {
    kernels::eval_nodes(mode(s), z, out, fn);
    benchmark::DoNotOptimize(out.data());
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(z.size()));
  label(s);
}

void BM_error_norms(benchmark::State& s) {
  const auto h = gen_linspace_diag<Real>(1000, 1e-2, 1);
  const RMat v = gaussian_block<Real>(1000, 4, 1);
  const auto d = block_lanczos<Real>(h, v, s.range(1));
  const auto orc = h.oracle();
  const ErrorOracle<Real> e(d, v, orc, NormMode::shifted, 0, mode(s));
  std::vector<Complex> z(150);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::polar(2.0, 0.02 * static_cast<Real>(i));
  std::vector<double> out(z.size());
  for (auto _ : s) {
    e.error_norms(z, out);
    benchmark::DoNotOptimize(out.data());
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(z.size()));
  label(s);
}

}  // namespace

BENCHMARK(BM_csr_apply)->ArgsProduct({{0, 1}, {128, 512}});
BENCHMARK(BM_diag_apply)->ArgsProduct({{0, 1}, {1000, 100000}});
BENCHMARK(BM_eval_nodes)->ArgsProduct({{0, 1}, {1500}});
BENCHMARK(BM_error_norms)->ArgsProduct({{0, 1}, {10, 40}});

BENCHMARK_MAIN();
