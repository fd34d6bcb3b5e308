#pragma once

// Homogeneous pencils, rectangular evaluation and probabilistic fullness.

#include <optional>
#include <string>
#include <vector>

#include "ncrat/numkernel.hpp"
#include "ncrat/realization.hpp"

namespace ncrat {

/// Lambda = Lambda_1 x_1 + ... + Lambda_d x_d.
struct HomogeneousPencil {
  std::vector<CMatrix> coeffs;  // coeffs[j-1] = Lambda_j

  HomogeneousPencil() = default;
  explicit HomogeneousPencil(std::vector<CMatrix> c) : coeffs(std::move(c)) {
    for (const auto& m : coeffs) {
      if (m.rows() != size() || m.cols() != size()) {
        throw ShapeError("HomogeneousPencil: coefficients must share size e x e");
      }
    }
  }

  Eigen::Index size() const { return coeffs.empty() ? 0 : coeffs[0].rows(); }
  int d() const { return static_cast<int>(coeffs.size()); }

  HomogeneousPencil transpose() const {
    std::vector<CMatrix> t;
    for (const auto& m : coeffs) t.push_back(m.transpose());
    return HomogeneousPencil(std::move(t));
  }

  /// Treats M_0 as the coefficient of an extra variable x_0 (listed first).
  static HomogeneousPencil homogenize(const AffinePencil& m) {
    return HomogeneousPencil(m.coeffs);
  }
};

/// sum_j Lambda_j (x) X_j, of shape (e rows) x (e cols).
inline CMatrix rect_eval(const HomogeneousPencil& lambda, const MatrixTuple& x) {
  if (lambda.d() > x.d()) throw ShapeError("rect_eval: tuple too short");
  const Eigen::Index e = lambda.size();
  CMatrix out = CMatrix::Zero(e * x.rows, e * x.cols);
  for (int j = 0; j < lambda.d(); ++j) out += kron(lambda.coeffs[j], x[j]);
  return out;
}

enum class FullnessVerdict { full, not_full_probabilistic, degenerate };

inline std::string to_string(FullnessVerdict v) {
  switch (v) {
    case FullnessVerdict::full: return "full";
    case FullnessVerdict::not_full_probabilistic: return "not-full-probabilistic";
    case FullnessVerdict::degenerate: return "degenerate";
  }
  return "degenerate";
}

struct FullnessReport {
  FullnessVerdict verdict = FullnessVerdict::degenerate;
  std::optional<MatrixTuple> witness;
  double witness_sigma_min = 0.0;
  int trials_used = 0;
  std::vector<Eigen::Index> sizes_probed;
};

namespace detail {

template <typename Eval>
FullnessReport fullness_search(Eigen::Index e, int d, bool all_zero, int trials,
                               std::uint64_t seed, double tol, Eval&& eval) {
  if (trials < 1) throw std::invalid_argument("is_full: trials must be >= 1");
  FullnessReport report;
  if (e == 0 || all_zero) {
    report.verdict = FullnessVerdict::degenerate;
    return report;
  }
  const Eigen::Index n = std::max<Eigen::Index>(1, e - 1);
  report.sizes_probed.push_back(n);
  for (int t = 0; t < trials; ++t) {
    ++report.trials_used;
    MatrixTuple x = random_tuple(d, n, n, SampleMode::generic, derive_seed(seed, t));
    const RankInfo info = svd_rank(eval(x), tol);
    if (info.sigma_max > 0.0 && info.sigma_min > tol * info.sigma_max) {
      report.verdict = FullnessVerdict::full;
      report.witness = std::move(x);
      report.witness_sigma_min = info.sigma_min;
      return report;
    }
  }
  report.verdict = FullnessVerdict::not_full_probabilistic;
  return report;
}

inline bool all_zero(const std::vector<CMatrix>& coeffs) {
  for (const auto& m : coeffs)
    if (norm_max(m) != 0.0) return false;
  return true;
}

}  // namespace detail

/// Samples generic tuples at n = max(1, e-1). A full pencil is invertible on
/// a nonempty Zariski open set at that size, so repeated singular samples
/// indicate a pencil that is not full (with probability one).
inline FullnessReport is_full(const HomogeneousPencil& lambda, int trials,
                              std::uint64_t seed, double tol = kDefaultRankTol) {
  return detail::fullness_search(
      lambda.size(), lambda.d(), detail::all_zero(lambda.coeffs), trials, seed, tol,
      [&](const MatrixTuple& x) { return rect_eval(lambda, x); });
}

inline FullnessReport is_full(const AffinePencil& m, int trials, std::uint64_t seed,
                              double tol = kDefaultRankTol) {
  return detail::fullness_search(
      m.size(), m.d(), detail::all_zero(m.coeffs), trials, seed, tol,
      [&](const MatrixTuple& x) { return pencil_eval(m, x); });
}

struct RankConditions {
  bool column_full = false;  // Lambda([Y; Y']) has full column rank
  bool row_full = false;     // Lambda([Y Y'']) has full row rank
  double column_sigma_min = 0.0;
  double row_sigma_min = 0.0;
};

inline RankConditions rank_conditions(const HomogeneousPencil& lambda,
                                      const MatrixTuple& y, const MatrixTuple& yp,
                                      const MatrixTuple& ypp,
                                      double tol = kDefaultRankTol) {
  if (!y.square()) throw ShapeError("rank_conditions: Y must be square");
  if (yp.cols != y.rows || ypp.rows != y.rows || yp.rows != ypp.cols) {
    throw ShapeError("rank_conditions: Y' must be m x l and Y'' l x m");
  }
  RankConditions rc;
  const CMatrix col = rect_eval(lambda, vstack(y, yp));
  const CMatrix row = rect_eval(lambda, hstack(y, ypp));
  const RankInfo ci = svd_rank(col, tol);
  const RankInfo ri = svd_rank(row, tol);
  rc.column_full = col.cols() == 0 || (ci.rank == col.cols());
  rc.row_full = row.rows() == 0 || (ri.rank == row.rows());
  rc.column_sigma_min = ci.sigma_min;
  rc.row_sigma_min = ri.sigma_min;
  return rc;
}

}  // namespace ncrat
