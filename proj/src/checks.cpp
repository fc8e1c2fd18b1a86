#include "blockfa/experiment.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace blockfa {

namespace {

std::string sci(Real x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

CheckResult check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

}  // namespace

std::vector<CheckResult> run_checks() {
  std::vector<CheckResult> out;
  auto guard = [&](const std::string& name, auto&& body) {
    try {
      out.push_back(body());
    } catch (const std::exception& e) {
      out.push_back(check(name, false, e.what()));
    }
  };

  const auto dense = gen_dense_random<Real>(200, 3);
  const Mat<Real> v = gaussian_block<Real>(200, 3, 5);
  const auto d = block_lanczos<Real>(dense, v, 20);
  const Real hnorm = norm2<Real>(dense.matrix());

  guard("orthogonality", [&] {
    const Real loss = orthogonality_loss<Real>(d.basis_with_next());
    return check("orthogonality", loss <= 1e-10, "||Q^T Q - I||_F = " + sci(loss));
  });
  guard("recurrence", [&] {
    const Real r = recurrence_residual(d, dense).fro_norm;
    return check("recurrence", r <= 1e-10 * hnorm, "||HQ - QT - Q_{k+1} B_k E_k^T||_F = " + sci(r));
  });
  guard("polynomial exactness", [&] {
    const auto h = gen_dense_random<Real>(100, 9);
    const Mat<Real> x = gaussian_block<Real>(100, 2, 4);
    const auto dd = block_lanczos<Real>(h, x, 8);
    Real worst = 0;
    Mat<Real> hj = x;
    for (int j = 0; j < 8; ++j) {
      const Mat<Real> approx = lanczos_fa(dd, SpectralFunction::monomial(j));
      worst = std::max(worst, (hj - approx).norm() / hj.norm());
      hj = h.apply(hj);
    }
    return check("polynomial exactness", worst <= 1e-9, "max relative error " + sci(worst));
  });
  guard("residual identity", [&] {
    Real worst = 0;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<Real> u(-3, 3);
    for (int i = 0; i < 5; ++i) {
      const Complex z(u(rng), std::abs(u(rng)) + 0.1);
      const CMat res = shifted_residual(d, v, dense, z);
      const CMat rhs = to_complex<Real>(Mat<Real>(d.q_block(d.k() + 1) * d.b_block(d.k()))) * c_matrix(d, z);
      worst = std::max(worst, (res - rhs).norm() / v.norm());
    }
    return check("residual identity", worst <= 1e-8, "max ||res_k(z) - Q_{k+1} B_k C(z)||_F / ||V||_F = " + sci(worst));
  });
  guard("Q_S formula", [&] {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<Real> u(0, 1);
    Real worst = 0;
    bool below = false;
    for (int i = 0; i < 50; ++i) {
      const Real lo = u(rng);
      const SpectrumInterval s(lo, lo + u(rng) + 0.01);
      const Real w = lo - u(rng);
      const Complex z(2 * u(rng) - 0.5, 0.05 + u(rng));
      const Real exact = q_s(s, w, z);
      const Real grid = q_s_grid(s, w, z, 20001);
      below = below || exact < grid * (1 - 1e-12);
      worst = std::max(worst, exact / grid - 1);
    }
    return check("Q_S formula", !below && worst <= 1e-4, "formula / grid - 1 <= " + sci(worst));
  });
  guard("circle length", [&] {
    const Contour c = circle_contour(0.5, 2.0);
    const auto q = integrate_contour(c, BatchIntegrand([](std::span<const Complex> z, std::span<double> o) {
      for (std::size_t i = 0; i < z.size(); ++i) o[i] = 1;
    }));
    // (1/2pi) times the arc length is the radius.
    const Real err = std::abs(q.value - 2.0) / 2.0;
    return check("circle length", err <= 1e-10, "relative error " + sci(err));
  });
  guard("bound sandwich", [&] {
    const auto h = gen_linspace_diag<Real>(200, 1e-2, 1);
    const Mat<Real> x = gaussian_block<Real>(200, 2, 8);
    const auto full = block_lanczos<Real>(h, x, 12);
    const auto f = SpectralFunction::sqrt();
    const auto orc = h.oracle();
    const std::vector<SpectrumInterval> s{{1e-2, 1}};
    const Contour c = pacman_contour({1e-4, 4, 0.75 * std::numbers::pi});
    bool ok = true;
    Real tightest = INFINITY;
    for (Index k = 2; k <= 12; k += 2) {
      const auto dk = full.prefix(k);
      const ErrorOracle<Real> e(dk, x, orc, NormMode::shifted, 0);
      const Real te = e.true_error(f);
      const Real tri = triangle_integral(e, f, c).value;
      const auto rep = error_bound_main(dk, std::span<const SpectrumInterval>(s), 0, f, c, e.error_norm(0));
      ok = ok && te <= tri * (1 + 1e-6) && tri <= rep.computable_bound * (1 + 1e-6);
      tightest = std::min(tightest, rep.computable_bound / te);
    }
    return check("bound sandwich", ok, "true <= triangle <= bound for k = 2..12, min bound/true = " + sci(tightest));
  });
  guard("f_k(w,w) = 0", [&] {
    const auto rr = recurrence_residual(d, dense);
    const Real w = dense.oracle().lambda_min() - 1;
    const Real v0 = fp_residual_term(d, rr.f, Complex(w), Complex(w)).norm();
    return check("f_k(w,w) = 0", v0 <= 1e-12, "||f_k(w,w)||_F = " + sci(v0));
  });
  return out;
}

}  // namespace blockfa
