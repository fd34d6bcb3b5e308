#pragma once

// Representatives with larger hermitian domains. A square expression matrix
// m is inverted through the Schur complement recursion on m^* m, whose
// leading entry c^* c is invertible at every hermitian point where m is.

#include <optional>
#include <string>
#include <vector>

#include "ncrat/expr.hpp"
#include "ncrat/numkernel.hpp"
#include "ncrat/realization.hpp"

namespace ncrat {

class NotInvertibleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Entrywise involution of the transpose.
inline ExprMatrix adjoint(const ExprMatrix& m) {
  ExprMatrix out(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = involution(m(i, j));
  return out;
}

inline ExprMatrix multiply(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.cols != b.rows) throw ShapeError("multiply: inner dimensions differ");
  ExprMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      Expr acc = Expr::scalar(0.0);
      for (std::size_t k = 0; k < a.cols; ++k) acc = ops::add(acc, ops::mul(a(i, k), b(k, j)));
      out(i, j) = acc;
    }
  }
  return out;
}

/// Block matrix [m_ij(X)] of size (rows n) x (cols n).
inline CMatrix eval_matrix(const ExprMatrix& m, const MatrixTuple& x,
                           const EvalOptions& options = {}) {
  ExprEvaluator ev(x, options);
  const Eigen::Index n = x.rows;
  CMatrix out(static_cast<Eigen::Index>(m.rows) * n, static_cast<Eigen::Index>(m.cols) * n);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      out.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n) =
          ev(m(i, j));
  return out;
}

/// The pencil M_0 + sum M_j x_j as a matrix of affine expressions.
inline ExprMatrix pencil_to_expr_matrix(const AffinePencil& m) {
  const auto e = static_cast<std::size_t>(m.size());
  ExprMatrix out(e, e);
  for (std::size_t i = 0; i < e; ++i) {
    for (std::size_t k = 0; k < e; ++k) {
      const auto ii = static_cast<Eigen::Index>(i), kk = static_cast<Eigen::Index>(k);
      Expr acc = Expr::scalar(m.coeffs[0](ii, kk));
      for (int j = 1; j <= m.d(); ++j) {
        const Complex c = m.coeffs[j](ii, kk);
        if (c != 0.0) acc = ops::add(acc, ops::scale(c, Expr::variable(j)));
      }
      out(i, k) = acc;
    }
  }
  return out;
}

namespace detail {

/// Inverse of a matrix that is hermitian positive definite at every
/// hermitian point of interest: pivot on p_11, recurse on the Schur
/// complement (again positive definite there).
inline ExprMatrix hermitian_pd_inverse(const ExprMatrix& p) {
  const std::size_t e = p.rows;
  const Expr ainv = ops::inv(p(0, 0));
  if (e == 1) return ExprMatrix(1, 1, {ainv});

  ExprMatrix hat(e - 1, e - 1);
  for (std::size_t i = 1; i < e; ++i) {
    const Expr left = ops::mul(p(i, 0), ainv);
    for (std::size_t j = 1; j < e; ++j) {
      hat(i - 1, j - 1) = ops::sub(p(i, j), ops::mul(left, p(0, j)));
    }
  }
  const ExprMatrix s = hermitian_pd_inverse(hat);

  // p^{-1} = [[a^-1 + a^-1 b s c a^-1, -a^-1 b s], [-s c a^-1, s]]
  ExprMatrix b(1, e - 1), c(e - 1, 1);
  for (std::size_t j = 1; j < e; ++j) {
    b(0, j - 1) = ops::mul(ainv, p(0, j));
    c(j - 1, 0) = ops::mul(p(j, 0), ainv);
  }
  const ExprMatrix bs = multiply(b, s);
  const ExprMatrix sc = multiply(s, c);
  const ExprMatrix bsc = multiply(bs, c);
  ExprMatrix pinv(e, e);
  pinv(0, 0) = ops::add(ainv, bsc(0, 0));
  for (std::size_t j = 1; j < e; ++j) {
    pinv(0, j) = ops::scale(-1.0, bs(0, j - 1));
    pinv(j, 0) = ops::scale(-1.0, sc(j - 1, 0));
    for (std::size_t k = 1; k < e; ++k) pinv(j, k) = s(j - 1, k - 1);
  }
  return pinv;
}

inline ExprMatrix schur_inverse_unchecked(const ExprMatrix& m) {
  if (m.rows == 1) return ExprMatrix(1, 1, {ops::inv(m(0, 0))});
  const ExprMatrix madj = adjoint(m);
  return multiply(hermitian_pd_inverse(multiply(madj, m)), madj);
}

}  // namespace detail

struct InvertibilityProbe {
  bool invertible = false;
  Eigen::Index witness_size = 0;
  double sigma_min = 0.0;
};

/// Looks for a hermitian point where every entry is defined and the
/// evaluated block matrix is invertible, at sizes 1..max_n.
inline InvertibilityProbe probe_invertible(const ExprMatrix& m, int d, std::uint64_t seed,
                                           Eigen::Index max_n = 4, int trials = 4) {
  InvertibilityProbe probe;
  for (Eigen::Index n = 1; n <= max_n; ++n) {
    for (int t = 0; t < trials; ++t) {
      const MatrixTuple x = random_tuple(d, n, n, SampleMode::hermitian,
                                         derive_seed(seed, static_cast<std::uint64_t>(n * 64 + t)));
      try {
        const CMatrix v = eval_matrix(m, x);
        const RankInfo info = svd_rank(v);
        if (info.rank == v.rows()) {
          probe.invertible = true;
          probe.witness_size = n;
          probe.sigma_min = info.sigma_min;
          return probe;
        }
      } catch (const DomainError&) {
      }
    }
  }
  return probe;
}

/// Returns s with s = m^{-1} as functions and hdom m cap hdom m^{-1}
/// contained in hdom s. For e = 1 this is [inv(m_11)]; otherwise
/// (m^* m)^{-1} m^*, with (m^* m)^{-1} built by block elimination. At a
/// hermitian X with m(X) invertible, m^* m and all its pivots are positive
/// definite, so every inverse in s is defined there.
inline ExprMatrix schur_inverse_rep(const ExprMatrix& m, std::uint64_t seed = 0) {
  if (m.rows != m.cols || m.rows == 0) {
    throw ShapeError("schur_inverse_rep: needs a nonempty square matrix");
  }
  int d = 0;
  for (const auto& e : m.entries) d = std::max(d, e.max_variable());
  if (!probe_invertible(m, std::max(d, 1), seed).invertible) {
    throw NotInvertibleError("schur_inverse_rep: matrix is not invertible at sampled hermitian points");
  }
  return detail::schur_inverse_unchecked(m);
}

struct LinearRep {
  CVector u;
  AffinePencil pencil;
  CVector v;
};

struct WidenResult {
  Expr expr;
  Eigen::Index pencil_size = 0;
  std::size_t dag_nodes = 0;
};

/// u^* S v where S is the Schur inverse representative of the realization
/// pencil (or of `override_rep`). The result's hermitian domain contains
/// every hermitian X with M(X) invertible, hence hdom r. Without a minimal
/// pencil this can be strictly smaller than the domain of the function.
inline WidenResult widen_hdom(const Expr& r, const std::optional<LinearRep>& override_rep = {},
                              std::uint64_t seed = 0) {
  LinearRep rep;
  if (override_rep) {
    rep = *override_rep;
  } else {
    const Realization real = build_realization(r);
    rep = LinearRep{real.u, real.pencil, real.v};
  }
  const auto e = rep.pencil.size();
  if (rep.u.size() != e || rep.v.size() != e) throw ShapeError("widen_hdom: u, v must have size e");
  const ExprMatrix s = schur_inverse_rep(pencil_to_expr_matrix(rep.pencil), seed);
  std::vector<Expr> terms;
  for (Eigen::Index i = 0; i < e; ++i) {
    if (rep.u(i) == 0.0) continue;
    for (Eigen::Index k = 0; k < e; ++k) {
      if (rep.v(k) == 0.0) continue;
      terms.push_back(ops::scale(std::conj(rep.u(i)) * rep.v(k),
                                 s(static_cast<std::size_t>(i), static_cast<std::size_t>(k))));
    }
  }
  WidenResult out;
  out.expr = ops::sum_of(terms);
  out.pencil_size = e;
  out.dag_nodes = dag_size(out.expr);
  return out;
}

}  // namespace ncrat
