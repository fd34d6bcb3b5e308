#pragma once

// Tree evaluation of expressions and linear representations (u, M, v) with
// r(X) = (u^* (x) I) M(X)^{-1} (v (x) I).

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ncrat/expr.hpp"
#include "ncrat/numkernel.hpp"

namespace ncrat {

/// Raised when an inverse node is singular at the evaluation point.
class DomainError : public NumericError {
 public:
  DomainError(std::string subexpression, double sigma_min)
      : NumericError("domain error: singular inverse at subexpression " +
                     subexpression + " (sigma_min " + std::to_string(sigma_min) +
                     ")"),
        subexpression_(std::move(subexpression)),
        sigma_min_(sigma_min) {}
  const std::string& subexpression() const { return subexpression_; }
  double sigma_min() const { return sigma_min_; }

 private:
  std::string subexpression_;
  double sigma_min_;
};

struct EvalOptions {
  /// An inverse node is singular when sigma_min <= tol * sigma_max.
  double singular_tol = kDefaultRankTol;
};

namespace detail {

inline std::string short_print(const Expr& e) {
  if (e.size() > 400) return "<expression of " + std::to_string(e.size()) + " nodes>";
  return print(e);
}

}  // namespace detail

/// Evaluates expressions at one square tuple, caching every node by
/// identity so shared subtrees (also across several expressions) are
/// evaluated once.
class ExprEvaluator {
 public:
  ExprEvaluator(const MatrixTuple& x, EvalOptions options = {})
      : x_(x), options_(options) {
    if (!x.square()) throw ShapeError("eval_expr: tuple must be square");
  }

  const CMatrix& operator()(const Expr& r) {
    if (r.max_variable() > x_.d()) {
      throw ShapeError("eval_expr: expression uses x" + std::to_string(r.max_variable()) +
                       " but tuple has d = " + std::to_string(x_.d()));
    }
    return go(r);
  }

  Eigen::Index n() const { return x_.rows; }

 private:
  const CMatrix& go(const Expr& e) {
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second.value;
    const Eigen::Index n = x_.rows;
    CMatrix value;
    switch (e.kind()) {
      case ExprKind::scalar:
        value = e.value() * CMatrix::Identity(n, n);
        break;
      case ExprKind::variable:
        value = x_[e.index() - 1];
        break;
      case ExprKind::sum:
        value = go(e.child(0)) + go(e.child(1));
        break;
      case ExprKind::product:
        value = go(e.child(0)) * go(e.child(1));
        break;
      case ExprKind::inverse: {
        const CMatrix& a = go(e.child(0));
        const RankInfo info = svd_rank(a, options_.singular_tol);
        if (info.rank < n) throw DomainError(detail::short_print(e), info.sigma_min);
        value = a.inverse();
        break;
      }
    }
    // Keep the node alive so its address stays a valid key.
    return memo_.emplace(e.id(), Entry{e, std::move(value)}).first->second.value;
  }

  struct Entry {
    Expr keep;
    CMatrix value;
  };
  const MatrixTuple& x_;
  EvalOptions options_;
  std::unordered_map<const void*, Entry> memo_;
};

/// Evaluates the tree at a square tuple. Shared subtrees are evaluated once.
inline CMatrix eval_expr(const Expr& r, const MatrixTuple& x,
                         const EvalOptions& options = {}) {
  ExprEvaluator ev(x, options);
  return ev(r);
}

/// Succeeds iff every inverse node is nonsingular at `x`.
inline bool eval_defined(const Expr& r, const MatrixTuple& x,
                         const EvalOptions& options = {}) {
  try {
    eval_expr(r, x, options);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

// ---------------------------------------------------------------------------

/// M = M_0 + M_1 x_1 + ... + M_d x_d with e x e coefficients.
struct AffinePencil {
  std::vector<CMatrix> coeffs;  // coeffs[0] = M_0

  AffinePencil() = default;
  explicit AffinePencil(std::vector<CMatrix> c) : coeffs(std::move(c)) {
    if (coeffs.empty()) throw ShapeError("AffinePencil: needs M_0");
    for (const auto& m : coeffs) {
      if (m.rows() != size() || m.cols() != size()) {
        throw ShapeError("AffinePencil: coefficients must share size e x e");
      }
    }
  }

  Eigen::Index size() const { return coeffs.empty() ? 0 : coeffs[0].rows(); }
  int d() const { return static_cast<int>(coeffs.size()) - 1; }
  const CMatrix& constant() const { return coeffs[0]; }
};

/// M_0 (x) I_n + sum_j M_j (x) X_j. Rectangular tuples need M_0 = 0.
inline CMatrix pencil_eval(const AffinePencil& m, const MatrixTuple& x) {
  if (m.d() > x.d()) {
    throw ShapeError("pencil_eval: pencil has " + std::to_string(m.d()) +
                     " variables, tuple has " + std::to_string(x.d()));
  }
  const Eigen::Index e = m.size();
  if (!x.square() && norm_max(m.constant()) != 0.0) {
    throw ShapeError("pencil_eval: affine pencil needs a square tuple");
  }
  CMatrix out = CMatrix::Zero(e * x.rows, e * x.cols);
  if (x.square()) out += kron(m.constant(), CMatrix::Identity(x.rows, x.rows));
  for (int j = 1; j <= m.d(); ++j) out += kron(m.coeffs[j], x[j - 1]);
  return out;
}

struct Realization {
  CVector u;
  AffinePencil pencil;
  CVector v;
  Expr source;

  Eigen::Index size() const { return pencil.size(); }
};

namespace detail {

struct RealizationParts {
  CVector u;
  std::vector<CMatrix> coeffs;
  CVector v;
};

inline RealizationParts realize(const Expr& r, int d) {
  RealizationParts out;
  switch (r.kind()) {
    case ExprKind::scalar: {
      out.u = CVector::Ones(1);
      out.v = CVector::Constant(1, r.value());
      out.coeffs.assign(d + 1, CMatrix::Zero(1, 1));
      out.coeffs[0](0, 0) = 1.0;
      return out;
    }
    case ExprKind::variable: {
      out.u = CVector::Unit(2, 0);
      out.v = CVector::Unit(2, 1);
      out.coeffs.assign(d + 1, CMatrix::Zero(2, 2));
      out.coeffs[0] = CMatrix::Identity(2, 2);
      out.coeffs[r.index()](0, 1) = -1.0;
      return out;
    }
    case ExprKind::sum: {
      RealizationParts a = realize(r.child(0), d);
      RealizationParts b = realize(r.child(1), d);
      const Eigen::Index e1 = a.u.size(), e2 = b.u.size();
      out.u.resize(e1 + e2);
      out.u << a.u, b.u;
      out.v.resize(e1 + e2);
      out.v << a.v, b.v;
      for (int j = 0; j <= d; ++j) out.coeffs.push_back(direct_sum(a.coeffs[j], b.coeffs[j]));
      return out;
    }
    case ExprKind::product: {
      RealizationParts a = realize(r.child(0), d);
      RealizationParts b = realize(r.child(1), d);
      const Eigen::Index e1 = a.u.size(), e2 = b.u.size();
      out.u = CVector::Zero(e1 + e2);
      out.u.head(e1) = a.u;
      out.v = CVector::Zero(e1 + e2);
      out.v.tail(e2) = b.v;
      for (int j = 0; j <= d; ++j) {
        CMatrix m = direct_sum(a.coeffs[j], b.coeffs[j]);
        if (j == 0) m.topRightCorner(e1, e2) = -a.v * b.u.adjoint();
        out.coeffs.push_back(std::move(m));
      }
      return out;
    }
    case ExprKind::inverse: {
      RealizationParts a = realize(r.child(0), d);
      const Eigen::Index e = a.u.size();
      out.u = -CVector::Unit(e + 1, e);
      out.v = CVector::Unit(e + 1, e);
      for (int j = 0; j <= d; ++j) {
        CMatrix m = CMatrix::Zero(e + 1, e + 1);
        m.topLeftCorner(e, e) = a.coeffs[j];
        if (j == 0) {
          m.topRightCorner(e, 1) = a.v;
          m.bottomLeftCorner(1, e) = a.u.adjoint();
        }
        out.coeffs.push_back(std::move(m));
      }
      return out;
    }
  }
  return out;
}

}  // namespace detail

/// Recursive construction: scalar (1,[1],a) of size 1; x_j with
/// M = [[1,-x_j],[0,1]], u = e1, v = e2; sums as direct sums; products
/// r1 r2 with M = [[M1, -v1 u2^*],[0, M2]]; inverses with the bordered
/// pencil [[M, v],[u^*, 0]], u' = -e_{e+1}, v' = e_{e+1}. No minimization.
/// `d` defaults to the largest variable index in r.
inline Realization build_realization(const Expr& r, int d = -1) {
  if (d < 0) d = r.max_variable();
  if (d < r.max_variable()) throw ShapeError("build_realization: d too small");
  detail::RealizationParts parts = detail::realize(r, d);
  Realization out;
  out.u = std::move(parts.u);
  out.v = std::move(parts.v);
  out.pencil = AffinePencil(std::move(parts.coeffs));
  out.source = r;
  return out;
}

/// (u^* (x) I) M(X)^{-1} (v (x) I).
inline CMatrix realization_eval(const CVector& u, const AffinePencil& m,
                                const CVector& v, const MatrixTuple& x,
                                double pivot_tol = kDefaultPivotTol) {
  if (!x.square()) throw ShapeError("realization_eval: tuple must be square");
  const Eigen::Index n = x.rows;
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix mx = pencil_eval(m, x);
  const CMatrix rhs = kron(v, id);
  const CMatrix sol = lu_solve(mx, rhs, pivot_tol);
  return kron(u.adjoint(), id) * sol;
}

inline CMatrix realization_eval(const Realization& rep, const MatrixTuple& x,
                                double pivot_tol = kDefaultPivotTol) {
  return realization_eval(rep.u, rep.pencil, rep.v, x, pivot_tol);
}

struct DomainCertificate {
  bool in_domain = false;
  bool pencil_invertible = false;
  double sigma_min = 0.0;  // of M(X)
  double sigma_max = 0.0;
  std::optional<bool> tree_defined;  // present when cross-checked
};

struct DomainOptions {
  double rank_tol = kDefaultRankTol;
  /// Also evaluate the tree. The bordered inverse rule can make M(X)
  /// invertible at points outside the tree domain (e.g. inv(inv(x1)) at 0),
  /// so the verdict requires both when this is on.
  bool cross_check = true;
};

inline DomainCertificate in_domain(const Realization& rep, const MatrixTuple& x,
                                   const DomainOptions& options = {}) {
  if (!x.square()) throw ShapeError("in_domain: tuple must be square");
  DomainCertificate cert;
  const CMatrix mx = pencil_eval(rep.pencil, x);
  const RankInfo info = svd_rank(mx, options.rank_tol);
  cert.sigma_min = info.sigma_min;
  cert.sigma_max = info.sigma_max;
  cert.pencil_invertible = info.rank == mx.rows();
  cert.in_domain = cert.pencil_invertible;
  if (options.cross_check) {
    cert.tree_defined = eval_defined(rep.source, x, EvalOptions{options.rank_tol});
    cert.in_domain = cert.in_domain && *cert.tree_defined;
  }
  return cert;
}

inline DomainCertificate in_domain(const Expr& r, const MatrixTuple& x,
                                   const DomainOptions& options = {}) {
  return in_domain(build_realization(r, std::max(r.max_variable(), x.d())), x,
                   options);
}

struct DegeneracyProbe {
  bool likely_degenerate = false;
  int samples = 0;
  std::optional<MatrixTuple> witness;
};

/// Samples 32 hermitian tuples at sizes 1..max(1, e-1); a nondegenerate
/// expression has hermitian domain points at every size >= e-1.
inline DegeneracyProbe probe_degenerate(const Expr& r, int d, std::uint64_t seed,
                                        int samples = 32) {
  const Realization rep = build_realization(r, d);
  const Eigen::Index max_n = std::max<Eigen::Index>(1, rep.size() - 1);
  DegeneracyProbe probe;
  for (int k = 0; k < samples; ++k) {
    const Eigen::Index n = 1 + (k % max_n);
    MatrixTuple x = random_tuple(d, n, n, SampleMode::hermitian, derive_seed(seed, k));
    ++probe.samples;
    if (in_domain(rep, x).in_domain) {
      probe.witness = std::move(x);
      return probe;
    }
  }
  probe.likely_degenerate = true;
  return probe;
}

}  // namespace ncrat
