#pragma once

#include <cmath>
#include <cstdint>

#include "ncrat/expr.hpp"
#include "ncrat/numkernel.hpp"

namespace ncrat::test_util {

/// Random tree with at most `depth` levels over x1..xd.
inline Expr random_expr(Rng& rng, int depth, int d) {
  const double u = rng.uniform();
  if (depth <= 1 || u < 0.2) {
    if (rng.uniform() < 0.25) {
      const double re = std::round(rng.normal() * 4.0) / 2.0;
      const double im = rng.uniform() < 0.3 ? std::round(rng.normal() * 2.0) / 2.0 : 0.0;
      return Expr::scalar({re == 0.0 && im == 0.0 ? 1.0 : re, im});
    }
    return Expr::variable(1 + static_cast<int>(rng.next_u64() % d));
  }
  const double k = rng.uniform();
  if (k < 0.35) return Expr::sum(random_expr(rng, depth - 1, d), random_expr(rng, depth - 1, d));
  if (k < 0.75) {
    return Expr::product(random_expr(rng, depth - 1, d), random_expr(rng, depth - 1, d));
  }
  return Expr::inverse(random_expr(rng, depth - 1, d));
}

inline double rel_err(const CMatrix& a, const CMatrix& b) {
  return norm_max(a - b) / (1.0 + norm_max(b));
}

}  // namespace ncrat::test_util
