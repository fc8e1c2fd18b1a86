#include "blockfa/lanczos.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace blockfa;
using blockfa::test::random_block;

TEST_CASE("hand-run of the recurrence on diag(1,2)") {
  RVec d(2);
  d << 1, 2;
  const DiagonalOperator<Real> h(d);
  RMat v(2, 1);
  v << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  const auto dec = block_lanczos<Real>(h, v, 1);
  CHECK(dec.a_block(1)(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(dec.b_block(0)(0, 0) == doctest::Approx(1).epsilon(1e-15));
  CHECK(dec.b_block(1)(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  // The two blocks span R^2, so the projection onto [Q_1 Q_2] is the full T.
  const RMat q = dec.basis_with_next();
  const RMat t = q.transpose() * h.apply(q);
  RMat expect(2, 2);
  expect << 1.5, 0.5, 0.5, 1.5;
  CHECK((t - expect).norm() <= 1e-15);
  const auto e = herm_eig<Real>(t);
  CHECK(e.evals(0) == doctest::Approx(1).epsilon(1e-14));
  CHECK(e.evals(1) == doctest::Approx(2).epsilon(1e-14));
  CHECK_THROWS_AS(block_lanczos<Real>(h, v, 2), Error);
}

TEST_CASE("an eigenvector start breaks down at iteration 1") {
  const auto h = gen_linspace_diag<Real>(10, 1, 10);
  RMat v = RMat::Zero(10, 1);
  v(0, 0) = 1;
  try {
    block_lanczos<Real>(h, v, 3);
    FAIL("expected DegenerateBlock");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateBlock);
    REQUIRE(e.index().has_value());
    CHECK(*e.index() == 1);
  }
}

TEST_CASE("truncate_on_breakdown stops at the grade") {
  const auto h = gen_linspace_diag<Real>(20, 1, 20);
  RMat v = RMat::Zero(20, 1);
  v.topRows(3).setOnes();
  LanczosOptions opts;
  opts.truncate_on_breakdown = true;
  const auto d = block_lanczos<Real>(h, v, 6, opts);
  // The grade is 3; iteration 3 has no Q_4, so k = 2 is the last full step.
  CHECK(d.k() == 2);
}

TEST_CASE_TEMPLATE("random H, b = 3, k = 20: orthogonality, recurrence and structure", S, Real, Complex) {
  const auto h = gen_dense_random<S>(200, 3);
  const Mat<S> v = gaussian_block<S>(200, 3, 5);
  const auto d = block_lanczos<S>(h, v, 20);
  const Real hnorm = norm2<S>(h.matrix());
  CHECK(orthogonality_loss<S>(d.basis_with_next()) <= 1e-10);
  CHECK(recurrence_residual(d, h).fro_norm <= 1e-10 * hnorm);
  CHECK((d.q_block(1) * d.b_block(0) - v).norm() <= 1e-12 * v.norm());

  const Mat<S>& t = d.tridiagonal();
  CHECK(t.rows() == 60);
  for (Index i = 1; i <= 20; ++i) {
    CHECK((t.block((i - 1) * 3, (i - 1) * 3, 3, 3) - d.a_block(i)).norm() == 0.0);
    if (i < 20) CHECK((t.block(i * 3, (i - 1) * 3, 3, 3) - d.b_block(i)).norm() == 0.0);
  }
  for (Index r = 0; r < 60; ++r)
    for (Index c = 0; c < 60; ++c)
      if (std::abs(r - c) >= 6) CHECK(t(r, c) == S(0));
  // B_j upper triangular with a positive diagonal.
  for (Index j = 0; j <= 20; ++j)
    for (Index c = 0; c < 3; ++c) {
      CHECK(std::real(Complex(d.b_block(j)(c, c))) > 0);
      for (Index r = c + 1; r < 3; ++r) CHECK(d.b_block(j)(r, c) == S(0));
    }
}

TEST_CASE("k = 1 recurrence residual matches the definition") {
  const auto h = gen_dense_random<Real>(50, 8);
  const RMat v = gaussian_block<Real>(50, 2, 1);
  const auto d = block_lanczos<Real>(h, v, 1);
  const RMat f1 = h.apply(RMat(d.q_block(1))) - d.q_block(1) * d.a_block(1) - d.q_block(2) * d.b_block(1);
  CHECK((recurrence_residual(d, h).f - f1).norm() <= 1e-15 * h.matrix().norm());
}

TEST_CASE("the factorization can be shifted") {
  const auto h = gen_dense_random<Real>(120, 2);
  const RMat v = gaussian_block<Real>(120, 2, 2);
  const auto d = block_lanczos<Real>(h, v, 10);
  const auto rr = recurrence_residual(d, h);
  for (Real z : {-1.3, 0.2, 2.7}) {
    const RMat q = d.basis();
    RMat lhs = h.apply(q) - z * q - q * (d.tridiagonal() - z * RMat::Identity(20, 20));
    lhs.rightCols(2) -= d.q_block(11) * d.b_block(10);
    CHECK(std::abs(lhs.norm() - rr.fro_norm) <= 1e-13 * h.matrix().norm());
  }
}

TEST_CASE("the basis spans the block Krylov space") {
  const auto h = gen_dense_random<Real>(60, 4);
  const RMat v = gaussian_block<Real>(60, 2, 3);
  const auto d = block_lanczos<Real>(h, v, 6);
  RMat hv = v;
  for (Index i = 0; i < 6; ++i) {
    const RMat q = d.basis_with_next().leftCols((i + 1) * 2);
    const RMat resid = hv - q * (q.transpose() * hv);
    CHECK(resid.norm() <= 1e-8 * hv.norm());
    hv = h.apply(hv);
  }
}

TEST_CASE("extending k keeps the first blocks") {
  const auto h = gen_dense_random<Real>(100, 6);
  const RMat v = gaussian_block<Real>(100, 3, 6);
  const auto d10 = block_lanczos<Real>(h, v, 10);
  const auto d11 = block_lanczos<Real>(h, v, 11);
  CHECK((d11.basis_with_next().leftCols(33) - d10.basis_with_next()).norm() == 0.0);
  for (Index j = 1; j <= 10; ++j) CHECK((d11.a_block(j) - d10.a_block(j)).norm() == 0.0);
  const auto p = d11.prefix(10);
  CHECK((p.tridiagonal() - d10.tridiagonal()).norm() == 0.0);
  CHECK((p.ritz_values() - d10.ritz_values()).norm() == 0.0);
}

TEST_CASE("model problem without reorthogonalization loses orthogonality, not the recurrence") {
  const auto h = gen_model_problem<Real>(500, 1e3, 0.9);
  const RMat v = gaussian_block<Real>(500, 4, 1);
  LanczosOptions off;
  off.reorth = false;
  const auto d = block_lanczos<Real>(h, v, 60, off);
  const Real loss = orthogonality_loss<Real>(d.basis_with_next());
  const Real fk = recurrence_residual(d, h).fro_norm;
  MESSAGE("no reorth, k = 60: ||Q^T Q - I||_F = " << loss << ", ||F_k||_F = " << fk);
  CHECK(loss > 1e-2);
  CHECK(fk <= 1e-12);
  const auto dr = block_lanczos<Real>(h, v, 60);
  CHECK(orthogonality_loss<Real>(dr.basis_with_next()) <= 1e-10);
  // Ritz values stay inside the spectrum even without reorthogonalization.
  CHECK(d.ritz_values().minCoeff() >= 1e-3 * (1 - 1e-8));
  CHECK(d.ritz_values().maxCoeff() <= 1 + 1e-8);
}

TEST_CASE("argument validation") {
  const auto h = gen_linspace_diag<Real>(10, 1, 2);
  CHECK_THROWS_AS(block_lanczos<Real>(h, RMat::Ones(9, 1), 2), Error);
  CHECK_THROWS_AS(block_lanczos<Real>(h, gaussian_block<Real>(10, 2, 1), 0), Error);
  CHECK_THROWS_AS(block_lanczos<Real>(h, gaussian_block<Real>(10, 2, 1), 5), Error);
}
