#pragma once

#include "blockfa/problems.hpp"

#include <cmath>
#include <random>

namespace blockfa::test {

/// Uniform random block with entries in [-1, 1].
template <Field S>
Mat<S> random_block(Index n, Index b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> u(-1, 1);
  Mat<S> x(n, b);
  for (Index j = 0; j < b; ++j)
    for (Index i = 0; i < n; ++i) {
      if constexpr (is_complex_v<S>)
        x(i, j) = Complex(u(rng), u(rng));
      else
        x(i, j) = u(rng);
    }
  return x;
}

inline Real rel(const CMat& a, const CMat& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace blockfa::test
