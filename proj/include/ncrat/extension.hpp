#pragma once

// Completing rectangular pencil evaluations to invertible square ones, and
// extending hermitian tuples into the domain of an expression.
//
// All searches sample generic completions at growing sizes. The existence
// results guarantee a nonempty Zariski open solution set at the size bound,
// so a failure at the bound points at numerical trouble.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "ncrat/expr.hpp"
#include "ncrat/numkernel.hpp"
#include "ncrat/pencil.hpp"
#include "ncrat/realization.hpp"

namespace ncrat {

class HypothesisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BoundExhaustedError : public NumericError {
 public:
  BoundExhaustedError(const std::string& what, std::vector<double> sigmas)
      : NumericError(what), sigmas_(std::move(sigmas)) {}
  /// sigma_min (relative to sigma_max) of every rejected completion.
  const std::vector<double>& sigmas() const { return sigmas_; }

 private:
  std::vector<double> sigmas_;
};

/// n = 2(e^3 m^2 + e m (2 e l - 1) + l (e l - 2)), clamped below at m.
inline long remark_bound(long e, long l, long m) {
  const long value = 2 * (e * e * e * m * m + e * m * (2 * e * l - 1) + l * (e * l - 2));
  return std::max(value, m);
}

/// Size bound for one-sided completions: with n1 = (m-l)(e-1) and
/// e1 = (m+n1)e, n = (e1-2)m + n1(e1-1).
inline long side_bound(long e, long l, long m) {
  const long n1 = (m - l) * (e - 1);
  const long e1 = (m + n1) * e;
  return std::max(0L, (e1 - 2) * m + n1 * (e1 - 1));
}

struct ExtensionOptions {
  double tol = kDefaultRankTol;
  int trials_per_size = 4;
  /// Largest evaluated matrix dimension (e * size) attempted.
  long max_matrix_dim = 720;
  int fullness_trials = 8;
};

namespace detail {

/// Sizes n0, then 2*n0 + step, doubling, with `bound` appended last.
inline std::vector<long> size_schedule(std::vector<long> starts, long bound) {
  std::vector<long> out;
  for (long s : starts) {
    if (s >= 0 && (out.empty() || s > out.back())) out.push_back(s);
  }
  long cur = out.empty() ? 0 : out.back();
  while (true) {
    cur = std::max(cur + 1, 2 * cur);
    if (cur >= bound) break;
    out.push_back(cur);
  }
  if (out.empty() || bound > out.back()) out.push_back(bound);
  return out;
}

inline bool relatively_invertible(const RankInfo& info, Eigen::Index dim, double tol) {
  return dim == 0 || (info.sigma_max > 0.0 && info.rank == dim &&
                      info.sigma_min > tol * info.sigma_max);
}

inline double relative_sigma(const RankInfo& info) {
  return info.sigma_max > 0.0 ? info.sigma_min / info.sigma_max : 0.0;
}

inline MatrixTuple block_tuple(const std::vector<std::vector<const MatrixTuple*>>& blocks,
                               const std::vector<Eigen::Index>& row_sizes,
                               const std::vector<Eigen::Index>& col_sizes, int d) {
  Eigen::Index rows = 0, cols = 0;
  for (auto r : row_sizes) rows += r;
  for (auto c : col_sizes) cols += c;
  std::vector<CMatrix> mats(d, CMatrix::Zero(rows, cols));
  Eigen::Index r0 = 0;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    Eigen::Index c0 = 0;
    for (std::size_t bj = 0; bj < blocks[bi].size(); ++bj) {
      if (const MatrixTuple* t = blocks[bi][bj]) {
        if (t->rows != row_sizes[bi] || t->cols != col_sizes[bj]) {
          throw ShapeError("block_tuple: block shape mismatch");
        }
        for (int j = 0; j < d; ++j) {
          mats[j].block(r0, c0, t->rows, t->cols) = (*t)[j];
        }
      }
      c0 += col_sizes[bj];
    }
    r0 += row_sizes[bi];
  }
  return MatrixTuple(rows, cols, std::move(mats));
}

inline MatrixTuple random_generic(int d, Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::vector<CMatrix> mats;
  for (int j = 0; j < d; ++j) mats.push_back(random_matrix(rows, cols, rng));
  return MatrixTuple(rows, cols, std::move(mats));
}

inline MatrixTuple transpose(const MatrixTuple& x) {
  std::vector<CMatrix> mats;
  for (const auto& m : x.mats) mats.push_back(m.transpose());
  return MatrixTuple(x.cols, x.rows, std::move(mats));
}

inline MatrixTuple rows_of(const MatrixTuple& x, Eigen::Index start, Eigen::Index count) {
  std::vector<CMatrix> mats;
  for (const auto& m : x.mats) mats.push_back(m.middleRows(start, count));
  return MatrixTuple(count, x.cols, std::move(mats));
}

inline MatrixTuple scaled(const MatrixTuple& x, Complex s) {
  MatrixTuple t = x;
  for (auto& m : t.mats) m *= s;
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// One-sided completion

struct SideExtension {
  MatrixTuple x_hat;    // m x (n + m - l)
  MatrixTuple x_check;  // n x (n + m - l)
  long n = 0;
  double sigma_min = 0.0;  // of Lambda([[X, X^],[0, Xv]])
  double sigma_max = 0.0;
  long bound_used = 0;
};

/// [[X, X^],[0, Xv]] as a square (m+n) tuple.
inline MatrixTuple assemble_side(const MatrixTuple& x, const SideExtension& s) {
  const Eigen::Index m = x.rows, l = x.cols, n = s.n;
  const MatrixTuple zero = MatrixTuple::zeros(x.d(), n, l);
  return detail::block_tuple({{&x, &s.x_hat}, {&zero, &s.x_check}}, {m, n},
                             {l, n + m - l}, x.d());
}

/// Finds X^, Xv with Lambda([[X, X^],[0, Xv]]) invertible, for a full
/// pencil Lambda and an m x l tuple X (l <= m) with Lambda(X) of full
/// column rank. Sizes tried: 0, m-l, 2(m-l)+e, doubling, up to the bound.
inline SideExtension extend_side(const HomogeneousPencil& lambda, const MatrixTuple& x,
                                 std::uint64_t seed, const ExtensionOptions& opt = {}) {
  const Eigen::Index m = x.rows, l = x.cols, e = lambda.size();
  const int d = lambda.d();
  if (l > m) throw HypothesisError("extend_side: needs l <= m");
  if (x.d() < d) throw ShapeError("extend_side: tuple too short");
  const FullnessReport full = is_full(lambda, opt.fullness_trials, derive_seed(seed, 1000));
  if (full.verdict != FullnessVerdict::full) {
    throw HypothesisError("extend_side: pencil is not full");
  }
  if (l > 0) {
    const RankInfo info = svd_rank(rect_eval(lambda, x), opt.tol);
    if (info.rank < e * l) {
      throw HypothesisError("extend_side: Lambda(X) does not have full column rank");
    }
  }
  const long bound = std::max<long>(side_bound(e, l, m), m - l);
  const auto schedule = detail::size_schedule({0, m - l, 2 * (m - l) + e}, bound);
  std::vector<double> history;
  std::uint64_t stream = 0;
  for (long n : schedule) {
    if (e * (m + n) > opt.max_matrix_dim) break;
    for (int t = 0; t < opt.trials_per_size; ++t) {
      Rng rng(derive_seed(seed, stream++));
      SideExtension s;
      s.n = n;
      s.bound_used = bound;
      s.x_hat = detail::random_generic(x.d(), m, n + m - l, rng);
      s.x_check = detail::random_generic(x.d(), n, n + m - l, rng);
      const CMatrix full_eval = rect_eval(lambda, assemble_side(x, s));
      const RankInfo info = svd_rank(full_eval, opt.tol);
      if (detail::relatively_invertible(info, full_eval.rows(), opt.tol)) {
        s.sigma_min = info.sigma_min;
        s.sigma_max = info.sigma_max;
        return s;
      }
      history.push_back(detail::relative_sigma(info));
    }
  }
  throw BoundExhaustedError("extend_side: no invertible completion found up to n = " +
                                std::to_string(bound),
                            std::move(history));
}

// ---------------------------------------------------------------------------
// Square completion

enum class SquareMode { blocks, sampling };

/// Pieces of the two one-sided completions used by the block assembly:
///   Lambda([[Y, A'],[Y', B'],[0, C']]) and Lambda([[Y, Y'', 0],[A'', B'', C'']])
/// are invertible.
struct BlockParts {
  MatrixTuple a1, b1, c1;  // A', B', C'
  MatrixTuple a2, b2, c2;  // A'', B'', C''
};

struct SquareExtension {
  long n = 0;
  MatrixTuple z;  // n x n
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  long bound_used = 0;
  SquareMode mode = SquareMode::sampling;
  std::optional<BlockParts> parts;
};


/// [[Y, [Y'' 0]], [[Y'; 0], Z]] with Y l x l, Y' m x l, Y'' l x m, Z n x n.
inline MatrixTuple assemble_square(const MatrixTuple& y, const MatrixTuple& yp,
                                   const MatrixTuple& ypp, const MatrixTuple& z) {
  const Eigen::Index l = y.rows, m = yp.rows, n = z.rows;
  if (n < m) throw ShapeError("assemble_square: Z smaller than Y'");
  const int d = y.d();
  const MatrixTuple top = hstack(ypp, MatrixTuple::zeros(d, l, n - m));
  const MatrixTuple left = vstack(yp, MatrixTuple::zeros(d, n - m, l));
  return detail::block_tuple({{&y, &top}, {&left, &z}}, {l, n}, {l, n}, d);
}

/// The five-by-five block tuple
///   [[Y, Y'', 0, 0, 0], [Y', 0, -Y', B', 0], [0, -Y'', -Y, A', 0],
///    [0, B'', A'', 0, C''], [0, 0, 0, C', 0]].
inline MatrixTuple assemble_blocks(const MatrixTuple& y, const MatrixTuple& yp,
                                   const MatrixTuple& ypp, const BlockParts& p) {
  const Eigen::Index l = y.rows, m = yp.rows;
  const Eigen::Index k1 = p.c1.rows, k2 = p.c2.cols;
  const MatrixTuple ny = detail::scaled(y, -1.0);
  const MatrixTuple nyp = detail::scaled(yp, -1.0);
  const MatrixTuple nypp = detail::scaled(ypp, -1.0);
  return detail::block_tuple(
      {{&y, &ypp, nullptr, nullptr, nullptr},
       {&yp, nullptr, &nyp, &p.b1, nullptr},
       {nullptr, &nypp, &ny, &p.a1, nullptr},
       {nullptr, &p.b2, &p.a2, nullptr, &p.c2},
       {nullptr, nullptr, nullptr, &p.c1, nullptr}},
      {l, m, l, k2 + m, k1}, {l, m, l, k1 + m, k2}, y.d());
}

/// The scaled tuple
///   [[Y, 0, eY, eY'', 0], [0, 0, eA'', eB'', eC''], [eY, eA', 0, 0, 0],
///    [eY', eB', 0, 0, 0], [0, eC', 0, 0, 0]],
/// whose evaluation is invertible for every e != 0 once it is for one.
inline MatrixTuple assemble_eps(const MatrixTuple& y, const MatrixTuple& yp,
                                const MatrixTuple& ypp, const BlockParts& p, double eps) {
  const Eigen::Index l = y.rows, m = yp.rows;
  const Eigen::Index k1 = p.c1.rows, k2 = p.c2.cols;
  const MatrixTuple ey = detail::scaled(y, eps), eyp = detail::scaled(yp, eps),
                    eypp = detail::scaled(ypp, eps);
  const MatrixTuple ea1 = detail::scaled(p.a1, eps), eb1 = detail::scaled(p.b1, eps),
                    ec1 = detail::scaled(p.c1, eps);
  const MatrixTuple ea2 = detail::scaled(p.a2, eps), eb2 = detail::scaled(p.b2, eps),
                    ec2 = detail::scaled(p.c2, eps);
  return detail::block_tuple({{&y, nullptr, &ey, &eypp, nullptr},
                              {nullptr, nullptr, &ea2, &eb2, &ec2},
                              {&ey, &ea1, nullptr, nullptr, nullptr},
                              {&eyp, &eb1, nullptr, nullptr, nullptr},
                              {nullptr, &ec1, nullptr, nullptr, nullptr}},
                             {l, k2 + m, l, m, k1}, {l, k1 + m, l, m, k2}, y.d());
}

/// Finds n >= m and Z with Lambda([[Y, [Y'' 0]], [[Y'; 0], Z]]) invertible.
/// Sampling mode draws generic Z at n = m, 2m, ... up to remark_bound.
/// Blocks mode combines a column completion of [Y; Y'] and a row
/// completion of [Y Y''] into the five-by-five block tuple; its n is
/// 2m + l + k' + k'' and is not capped by remark_bound.
inline SquareExtension extend_square(const HomogeneousPencil& lambda, const MatrixTuple& y,
                                     const MatrixTuple& yp, const MatrixTuple& ypp,
                                     SquareMode mode, std::uint64_t seed,
                                     const ExtensionOptions& opt = {}) {
  const Eigen::Index l = y.rows, m = yp.rows, e = lambda.size();
  const RankConditions rc = rank_conditions(lambda, y, yp, ypp, opt.tol);
  if (!rc.column_full || !rc.row_full) {
    throw HypothesisError("extend_square: rank conditions fail");
  }
  SquareExtension out;
  out.mode = mode;
  out.bound_used = remark_bound(e, l, m);
  if (mode == SquareMode::blocks) {
    const SideExtension s1 = extend_side(lambda, vstack(y, yp), derive_seed(seed, 1), opt);
    const SideExtension s2 = extend_side(lambda.transpose(),
                                         vstack(detail::transpose(y), detail::transpose(ypp)),
                                         derive_seed(seed, 2), opt);
    BlockParts p;
    p.a1 = detail::rows_of(s1.x_hat, 0, l);
    p.b1 = detail::rows_of(s1.x_hat, l, m);
    p.c1 = s1.x_check;
    p.a2 = detail::transpose(detail::rows_of(s2.x_hat, 0, l));
    p.b2 = detail::transpose(detail::rows_of(s2.x_hat, l, m));
    p.c2 = detail::transpose(s2.x_check);
    const MatrixTuple full = assemble_blocks(y, yp, ypp, p);
    const CMatrix ev = rect_eval(lambda, full);
    const RankInfo info = svd_rank(ev, opt.tol);
    if (!detail::relatively_invertible(info, ev.rows(), opt.tol)) {
      throw BoundExhaustedError("extend_square: block assembly is singular",
                                {detail::relative_sigma(info)});
    }
    out.n = full.rows - l;
    std::vector<CMatrix> z;
    for (const auto& mat : full.mats) z.push_back(mat.bottomRightCorner(out.n, out.n));
    out.z = MatrixTuple(out.n, out.n, std::move(z));
    out.sigma_min = info.sigma_min;
    out.sigma_max = info.sigma_max;
    out.parts = std::move(p);
    return out;
  }
  const auto schedule = detail::size_schedule({m}, out.bound_used);
  std::vector<double> history;
  std::uint64_t stream = 0;
  for (long n : schedule) {
    if (e * (l + n) > opt.max_matrix_dim) break;
    for (int t = 0; t < opt.trials_per_size; ++t) {
      Rng rng(derive_seed(seed, stream++));
      MatrixTuple z = detail::random_generic(y.d(), n, n, rng);
      const CMatrix ev = rect_eval(lambda, assemble_square(y, yp, ypp, z));
      const RankInfo info = svd_rank(ev, opt.tol);
      if (detail::relatively_invertible(info, ev.rows(), opt.tol)) {
        out.n = n;
        out.z = std::move(z);
        out.sigma_min = info.sigma_min;
        out.sigma_max = info.sigma_max;
        return out;
      }
      history.push_back(detail::relative_sigma(info));
    }
  }
  throw BoundExhaustedError("extend_square: no invertible completion found up to n = " +
                                std::to_string(out.bound_used),
                            std::move(history));
}

// ---------------------------------------------------------------------------
// Extensions into the domain of an expression

struct HermitianExtension {
  long n = 0;
  CMatrix e;          // n x n, inverse of the lower Cholesky factor of Z'_0
  CMatrix z0_prime;   // positive definite
  MatrixTuple z;      // hermitian n x n
  MatrixTuple x_tilde;  // hermitian (l + n) x (l + n)
  double sigma_min = 0.0;  // of the realization pencil at X~
  double sigma_max = 0.0;
  long bound_used = 0;
};

namespace detail {

/// Prepends x_0 to a tuple (the homogenizing variable).
inline MatrixTuple with_x0(const CMatrix& x0, const MatrixTuple& x) {
  std::vector<CMatrix> mats{x0};
  for (const auto& m : x.mats) mats.push_back(m);
  return MatrixTuple(x0.rows(), x0.cols(), std::move(mats));
}

}  // namespace detail

/// Extends a hermitian l x l tuple X with an m x l tuple Y to a hermitian
/// tuple X~ = [[X, [Y^* 0] E^*], [E [Y; 0], Z]] in the hermitian domain of r.
/// Requires the homogenized realization pencil to have full column rank
/// at ([I; 0], [X; Y]) and full row rank at ([I 0], [X Y^*]).
inline HermitianExtension extend_hermitian(const Expr& r, const MatrixTuple& x,
                                           const MatrixTuple& y, std::uint64_t seed,
                                           const ExtensionOptions& opt = {}) {
  if (!x.square()) throw ShapeError("extend_hermitian: X must be square");
  if (y.cols != x.rows || y.d() != x.d()) {
    throw ShapeError("extend_hermitian: Y must be m x l with the same d as X");
  }
  for (const auto& xm : x.mats) {
    if (hermitian_deviation(xm) > 1e-12) {
      throw HypothesisError("extend_hermitian: X is not hermitian");
    }
  }
  const Eigen::Index l = x.rows, m = y.rows;
  const int d = x.d();
  const Realization rep = build_realization(r, d);
  const HomogeneousPencil lambda = HomogeneousPencil::homogenize(rep.pencil);
  const Eigen::Index e = lambda.size();

  CMatrix stack0 = CMatrix::Zero(l + m, l);
  stack0.topRows(l).setIdentity();
  const RankInfo ci = svd_rank(rect_eval(lambda, detail::with_x0(stack0, vstack(x, y))), opt.tol);
  const RankInfo ri =
      svd_rank(rect_eval(lambda, detail::with_x0(stack0.transpose(), hstack(x, y.adjoint()))),
               opt.tol);
  if (l > 0 && (ci.rank < e * l || ri.rank < e * l)) {
    throw HypothesisError("extend_hermitian: realization rank conditions fail");
  }

  HermitianExtension out;
  out.bound_used = remark_bound(e, l, m);
  const auto schedule = detail::size_schedule({m}, out.bound_used);
  std::vector<double> history;
  std::uint64_t stream = 0;
  for (long n : schedule) {
    if (e * (l + n) > opt.max_matrix_dim) break;
    for (int t = 0; t < opt.trials_per_size; ++t) {
      Rng rng(derive_seed(seed, stream++));
      CMatrix z0 = CMatrix::Identity(n, n);
      if (n > 0) {
        const CMatrix h = random_hermitian(n, rng);
        z0 += (0.5 / std::max(norm_2(h), 1e-300)) * h;
      }
      std::vector<CMatrix> zp;
      for (int j = 0; j < d; ++j) zp.push_back(random_hermitian(n, rng));

      std::vector<CMatrix> ypad;
      for (int j = 0; j < d; ++j) {
        CMatrix yp = CMatrix::Zero(n, l);
        yp.topRows(m) = y[j];
        ypad.push_back(std::move(yp));
      }
      // Invertibility of the congruent pencil at (diag(I, Z'_0), [[X, Y*],[Y, Z']]).
      std::vector<CMatrix> pre;
      CMatrix d0 = CMatrix::Zero(l + n, l + n);
      d0.topLeftCorner(l, l).setIdentity();
      d0.bottomRightCorner(n, n) = z0;
      pre.push_back(d0);
      for (int j = 0; j < d; ++j) {
        CMatrix b(l + n, l + n);
        b << x[j], ypad[j].adjoint(), ypad[j], zp[j];
        pre.push_back(std::move(b));
      }
      const CMatrix pre_eval = rect_eval(lambda, MatrixTuple(l + n, l + n, std::move(pre)));
      const RankInfo pinfo = svd_rank(pre_eval, opt.tol);
      if (!detail::relatively_invertible(pinfo, pre_eval.rows(), opt.tol)) {
        history.push_back(detail::relative_sigma(pinfo));
        continue;
      }

      const CMatrix lower = cholesky(z0);
      const CMatrix emat =
          lower.triangularView<Eigen::Lower>().solve(CMatrix::Identity(n, n));
      std::vector<CMatrix> zs, xt;
      for (int j = 0; j < d; ++j) {
        CMatrix zj = emat * zp[j] * emat.adjoint();
        zj = 0.5 * (zj + zj.adjoint());
        const CMatrix b21 = emat * ypad[j];
        CMatrix full(l + n, l + n);
        full.topLeftCorner(l, l) = x[j];
        full.bottomLeftCorner(n, l) = b21;
        full.topRightCorner(l, n) = b21.adjoint();
        full.bottomRightCorner(n, n) = zj;
        zs.push_back(std::move(zj));
        xt.push_back(std::move(full));
      }
      MatrixTuple xtilde(l + n, l + n, std::move(xt));
      xtilde.hermitian = true;
      const DomainCertificate cert = in_domain(rep, xtilde, DomainOptions{opt.tol, true});
      if (!cert.in_domain) {
        history.push_back(cert.sigma_max > 0 ? cert.sigma_min / cert.sigma_max : 0.0);
        continue;
      }
      out.n = n;
      out.e = emat;
      out.z0_prime = std::move(z0);
      out.z = MatrixTuple(n, n, std::move(zs));
      out.z.hermitian = true;
      out.x_tilde = std::move(xtilde);
      out.sigma_min = cert.sigma_min;
      out.sigma_max = cert.sigma_max;
      return out;
    }
  }
  throw BoundExhaustedError("extend_hermitian: no hermitian extension found up to n = " +
                                std::to_string(out.bound_used),
                            std::move(history));
}

struct NonHermitianExtension {
  MatrixTuple x_tilde;  // square, first l columns equal [X; 0]
  long n = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Completes an m x l tuple X (l <= m) to a square tuple in dom r whose first
/// l columns are [X; 0]. Runs the one-sided completion on the homogenized
/// realization pencil with x_0 = [I; 0] and normalizes by the completed x_0.
inline NonHermitianExtension extend_nonhermitian(const Expr& r, const MatrixTuple& x,
                                                 std::uint64_t seed,
                                                 const ExtensionOptions& opt = {}) {
  const Eigen::Index m = x.rows, l = x.cols;
  if (l > m) throw HypothesisError("extend_nonhermitian: needs l <= m");
  const int d = x.d();
  const Realization rep = build_realization(r, d);
  const HomogeneousPencil lambda = HomogeneousPencil::homogenize(rep.pencil);
  CMatrix x0 = CMatrix::Zero(m, l);
  x0.topRows(l).setIdentity();
  const MatrixTuple xh = detail::with_x0(x0, x);
  if (l > 0) {
    const RankInfo info = svd_rank(rect_eval(lambda, xh), opt.tol);
    if (info.rank < lambda.size() * l) {
      throw HypothesisError("extend_nonhermitian: stacked evaluation is rank deficient");
    }
  }
  std::vector<double> history;
  for (int attempt = 0; attempt < opt.trials_per_size; ++attempt) {
    const SideExtension s = extend_side(lambda, xh, derive_seed(seed, attempt), opt);
    const MatrixTuple w = assemble_side(xh, s);
    const Eigen::Index n = w.rows;
    const RankInfo w0 = svd_rank(w[0], opt.tol);
    if (!detail::relatively_invertible(w0, n, opt.tol)) {
      history.push_back(detail::relative_sigma(w0));
      continue;
    }
    const CMatrix w0inv = w[0].inverse();
    std::vector<CMatrix> mats;
    for (int j = 1; j <= d; ++j) {
      CMatrix t = w[j] * w0inv;
      t.leftCols(l).setZero();
      t.block(0, 0, m, l) = x[j - 1];
      mats.push_back(std::move(t));
    }
    NonHermitianExtension out;
    out.n = n;
    out.x_tilde = MatrixTuple(n, n, std::move(mats));
    const DomainCertificate cert = in_domain(rep, out.x_tilde, DomainOptions{opt.tol, true});
    if (!cert.in_domain) {
      history.push_back(cert.sigma_max > 0 ? cert.sigma_min / cert.sigma_max : 0.0);
      continue;
    }
    out.sigma_min = cert.sigma_min;
    out.sigma_max = cert.sigma_max;
    return out;
  }
  throw BoundExhaustedError("extend_nonhermitian: no completion in the domain found",
                            std::move(history));
}

}  // namespace ncrat
