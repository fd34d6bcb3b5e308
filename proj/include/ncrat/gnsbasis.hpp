#pragma once

// Spans of products of subexpressions, made numeric. Functions are compared
// through their values at hermitian sample tuples; a basis is extracted
// greedily so lower levels are prefixes of higher ones.

#include <cmath>
#include <string>
#include <vector>

#include "ncrat/expr.hpp"
#include "ncrat/numkernel.hpp"
#include "ncrat/realization.hpp"

namespace ncrat {

class SamplingError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// R = {1} and the non-scalar subexpressions of r and r^*. Scalar multiples
/// a*q or q*a of an element q are dropped: they add nothing to any span.
struct SubexprSet {
  Expr generator;
  std::vector<Expr> elements;  // elements[0] is the scalar 1
  int d = 0;

  std::size_t size() const { return elements.size(); }
};

inline SubexprSet build_R(const Expr& r, int d = -1) {
  SubexprSet out;
  out.generator = r;
  out.d = std::max(d, r.max_variable());
  out.elements.push_back(Expr::scalar(1.0));
  ExprSet seen;
  std::vector<Expr> candidates;
  for (const Expr& root : {r, involution(r)}) {
    for (const Expr& s : subexpressions(root)) {
      if (s.is_scalar() || seen.count(s)) continue;
      seen.insert(s);
      candidates.push_back(s);
    }
  }
  for (const Expr& s : candidates) {
    if (s.kind() == ExprKind::product) {
      const Expr& a = s.child(0);
      const Expr& b = s.child(1);
      if ((a.is_scalar() && seen.count(b)) || (b.is_scalar() && seen.count(a))) continue;
    }
    out.elements.push_back(s);
  }
  return out;
}

/// Hermitian sample tuples with positive weights; the inner product is
/// <s1, s2> = sum_k w_k tr(s2(X_k)^* s1(X_k)) / n_k.
struct EvalInnerProduct {
  std::vector<MatrixTuple> samples;
  std::vector<double> weights;
};

/// Values of R's elements at one tuple; throws DomainError when undefined.
inline std::vector<CMatrix> eval_R(const SubexprSet& rset, const MatrixTuple& x) {
  ExprEvaluator ev(x);
  std::vector<CMatrix> out;
  out.reserve(rset.size());
  for (const auto& q : rset.elements) out.push_back(ev(q));
  return out;
}

/// A word is a sequence of indices into R; its function is the product.
using Word = std::vector<int>;

inline Expr word_expr(const SubexprSet& rset, const Word& w) {
  Expr acc = Expr::scalar(1.0);
  for (int i : w) acc = ops::mul(acc, rset.elements[static_cast<std::size_t>(i)]);
  return acc;
}

inline CMatrix word_value(const std::vector<CMatrix>& rvals, const Word& w, Eigen::Index n) {
  CMatrix acc = CMatrix::Identity(n, n);
  for (int i : w) acc = acc * rvals[static_cast<std::size_t>(i)];
  return acc;
}

/// Words of length 1..level over R, by length then lexicographically,
/// dropping words whose product is structurally equal to an earlier one.
inline std::vector<Word> enumerate_words(const SubexprSet& rset, int level) {
  std::vector<Word> out;
  ExprSet seen;
  std::vector<Word> frontier{Word{}};
  const int r = static_cast<int>(rset.size());
  for (int len = 1; len <= level; ++len) {
    std::vector<Word> next;
    for (const Word& w : frontier) {
      for (int i = 0; i < r; ++i) {
        Word v = w;
        v.push_back(i);
        next.push_back(v);
      }
    }
    for (const Word& w : next) {
      if (seen.insert(word_expr(rset, w)).second) out.push_back(w);
    }
    frontier = std::move(next);
  }
  return out;
}

struct BasisOptions {
  double rank_tol = kDefaultRankTol;
  double norm_cap = 1e6;
  int samples_per_size = 2;
  int max_size = 10;
  int trials_per_sample = 40;
};

struct FunctionBasis {
  int level = 0;
  SubexprSet rset;
  std::vector<Word> words;  // basis words
  std::vector<Expr> exprs;  // basis functions
  CMatrix gram;             // gram(i, j) = <b_j, b_i>
  EvalInnerProduct ip;
  std::size_t candidates = 0;

  std::size_t dim() const { return words.size(); }
};

namespace detail {

inline bool sample_ok(const SubexprSet& rset, const MatrixTuple& x, double norm_cap,
                      std::string* blocker) {
  try {
    for (const auto& v : eval_R(rset, x)) {
      if (!v.allFinite() || norm_max(v) > norm_cap) {
        if (blocker) *blocker = "norm cap exceeded";
        return false;
      }
    }
    return true;
  } catch (const DomainError& err) {
    if (blocker) *blocker = err.subexpression();
    return false;
  }
}

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// Evaluation matrix: one column per word, rows are the vectorized values
/// at every sample scaled by sqrt(scale_k / n_k).
inline CMatrix evaluation_matrix(const SubexprSet& rset, const std::vector<Word>& words,
                                 const std::vector<MatrixTuple>& samples,
                                 const std::vector<double>& scale) {
  Eigen::Index rows = 0;
  for (const auto& x : samples) rows += x.rows * x.rows;
  CMatrix a(rows, static_cast<Eigen::Index>(words.size()));
  Eigen::Index r0 = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Eigen::Index n = samples[k].rows;
    const auto rvals = eval_R(rset, samples[k]);
    const double s = std::sqrt(scale[k] / static_cast<double>(n));
    for (std::size_t w = 0; w < words.size(); ++w) {
      const CMatrix v = word_value(rvals, words[w], n);
      a.block(r0, static_cast<Eigen::Index>(w), n * n, 1) =
          s * Eigen::Map<const CVector>(v.data(), n * n);
    }
    r0 += n * n;
  }
  return a;
}

/// Greedy ordered selection: keeps column j when its component orthogonal
/// to the kept columns exceeds tol times its norm (two Gram-Schmidt passes).
inline std::vector<std::size_t> greedy_independent(const CMatrix& a, double tol) {
  std::vector<std::size_t> kept;
  std::vector<CVector> q;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    CVector v = a.col(j);
    const double norm0 = v.norm();
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qi : q) v -= qi * qi.dot(v);
    const double res = v.norm();
    if (res > tol * norm0 && res > 1e-300) {
      kept.push_back(static_cast<std::size_t>(j));
      q.push_back(v / res);
    }
  }
  return kept;
}

}  // namespace detail

/// Draws hermitian samples at sizes n = 1, 2, ... until the dimension of
/// the span of the words of length <= level is unchanged over two size
/// increments. Weights are w_k = 1/k!.
inline EvalInnerProduct choose_samples(const SubexprSet& rset, int level, std::uint64_t seed,
                                       const BasisOptions& opt = {}) {
  const std::vector<Word> words = enumerate_words(rset, level);
  EvalInnerProduct ip;
  std::vector<double> unit;
  std::vector<long> ranks;
  std::string blocker;
  std::uint64_t stream = 0;
  for (int n = 1; n <= opt.max_size; ++n) {
    int added = 0;
    for (int s = 0; s < opt.samples_per_size; ++s) {
      for (int t = 0; t < opt.trials_per_sample; ++t) {
        MatrixTuple x = random_tuple(std::max(rset.d, 1), n, n, SampleMode::hermitian,
                                     derive_seed(seed, stream++));
        if (detail::sample_ok(rset, x, opt.norm_cap, &blocker)) {
          ip.samples.push_back(std::move(x));
          unit.push_back(1.0);
          ++added;
          break;
        }
      }
    }
    if (added == 0) continue;
    const CMatrix a = detail::evaluation_matrix(rset, words, ip.samples, unit);
    ranks.push_back(static_cast<long>(detail::greedy_independent(a, opt.rank_tol).size()));
    const std::size_t k = ranks.size();
    if (k >= 3 && ranks[k - 1] == ranks[k - 2] && ranks[k - 2] == ranks[k - 3]) break;
  }
  if (ip.samples.empty()) {
    throw SamplingError("no hermitian sample in the common domain (blocked by " + blocker + ")");
  }
  for (std::size_t k = 0; k < ip.samples.size(); ++k) {
    ip.weights.push_back(1.0 / detail::factorial(static_cast<int>(k + 1)));
  }
  return ip;
}

/// Basis of the span of words of length <= level over fixed samples.
/// Rank decisions use the unweighted values (each sample scaled by 1/n_k);
/// the Gram matrix uses the weighted inner product.
inline FunctionBasis build_basis(const SubexprSet& rset, int level, const EvalInnerProduct& ip,
                                 const BasisOptions& opt = {}) {
  if (level < 1) throw std::invalid_argument("build_basis: level must be >= 1");
  const std::vector<Word> words = enumerate_words(rset, level);
  const std::vector<double> unit(ip.samples.size(), 1.0);
  const CMatrix a = detail::evaluation_matrix(rset, words, ip.samples, unit);
  const auto kept = detail::greedy_independent(a, opt.rank_tol);
  FunctionBasis out;
  out.level = level;
  out.rset = rset;
  out.ip = ip;
  out.candidates = words.size();
  for (auto j : kept) {
    out.words.push_back(words[j]);
    out.exprs.push_back(word_expr(rset, words[j]));
  }
  const CMatrix wa = detail::evaluation_matrix(rset, out.words, ip.samples, ip.weights);
  out.gram = wa.adjoint() * wa;
  return out;
}

inline FunctionBasis build_basis(const SubexprSet& rset, int level, std::uint64_t seed,
                                 const BasisOptions& opt = {}) {
  return build_basis(rset, level, choose_samples(rset, level, seed, opt), opt);
}

inline Complex inner_product(const Expr& s1, const Expr& s2, const EvalInnerProduct& ip) {
  Complex acc = 0.0;
  for (std::size_t k = 0; k < ip.samples.size(); ++k) {
    const MatrixTuple& x = ip.samples[k];
    const CMatrix a = eval_expr(s1, x), b = eval_expr(s2, x);
    acc += ip.weights[k] * (b.adjoint() * a).trace() / static_cast<double>(x.rows);
  }
  return acc;
}

}  // namespace ncrat
