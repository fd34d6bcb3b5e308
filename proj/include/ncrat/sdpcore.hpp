#pragma once

// Dense semidefinite programming over hermitian blocks and free scalars:
//
//   minimize   sum_b Re tr(C_b X_b) + c^T t
//   subject to sum_b Re tr(A_ib X_b) + f_i^T t = b_i,   X_b >= 0.
//
// The complex problem is embedded once into a real symmetric one and solved
// by an infeasible-start primal-dual interior point method (HKM direction,
// Mehrotra predictor-corrector).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "ncrat/numkernel.hpp"

namespace ncrat {

struct SDPConstraint {
  std::vector<CMatrix> blocks;  // hermitian, one per block; empty = zero
  RVector free;                 // coefficients of the free scalars; empty = zero
  double rhs = 0.0;
};

struct SDPProblem {
  std::vector<Eigen::Index> block_dims;
  Eigen::Index num_free = 0;
  std::vector<CMatrix> objective;  // C_b; empty = zero
  RVector objective_free;          // c; empty = zero
  std::vector<SDPConstraint> constraints;

  std::size_t num_blocks() const { return block_dims.size(); }

  /// Throws ShapeError unless all pieces have consistent sizes and every
  /// coefficient matrix is hermitian to 1e-12 relative.
  void validate() const {
    auto check_blocks = [&](const std::vector<CMatrix>& bl, const char* what) {
      if (!bl.empty() && bl.size() != block_dims.size()) {
        throw ShapeError(std::string("SDPProblem: wrong block count in ") + what);
      }
      for (std::size_t b = 0; b < bl.size(); ++b) {
        if (bl[b].size() == 0) continue;
        if (bl[b].rows() != block_dims[b] || bl[b].cols() != block_dims[b]) {
          throw ShapeError(std::string("SDPProblem: wrong block shape in ") + what);
        }
        if (hermitian_deviation(bl[b]) > 1e-12 * (1.0 + norm_max(bl[b]))) {
          throw ShapeError(std::string("SDPProblem: non-hermitian coefficient in ") + what);
        }
      }
    };
    check_blocks(objective, "objective");
    if (objective_free.size() != 0 && objective_free.size() != num_free) {
      throw ShapeError("SDPProblem: objective free coefficient size");
    }
    for (const auto& c : constraints) {
      check_blocks(c.blocks, "constraint");
      if (c.free.size() != 0 && c.free.size() != num_free) {
        throw ShapeError("SDPProblem: constraint free coefficient size");
      }
    }
  }
};

enum class SDPStatus { optimal, primal_infeasible, dual_infeasible, max_iterations, numerical_failure };

inline std::string to_string(SDPStatus s) {
  switch (s) {
    case SDPStatus::optimal: return "optimal";
    case SDPStatus::primal_infeasible: return "primal-infeasible";
    case SDPStatus::dual_infeasible: return "dual-infeasible";
    case SDPStatus::max_iterations: return "max-iterations";
    case SDPStatus::numerical_failure: return "numerical-failure";
  }
  return "numerical-failure";
}

struct SDPIterate {
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double complementarity = 0.0;  // <X, S>
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  /// |<R_d, X>| + |r_f^T t| + |r_p^T y|: pobj - dobj = <X,S> minus at most this.
  double residual_slack = 0.0;
};

struct SDPSolution {
  SDPStatus status = SDPStatus::numerical_failure;
  std::vector<CMatrix> blocks;  // primal X_b
  RVector free;                 // t
  RVector dual;                 // y
  std::vector<CMatrix> dual_slack;  // S_b
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;  // |pobj - dobj|
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  std::vector<SDPIterate> history;
};

struct SDPOptions {
  double tol = 1e-9;          // target for gap and residuals (relative)
  double accept_tol = 1e-7;   // status optimal needs gap and feasibility below this
  int max_iterations = 100;
  double step_fraction = 0.98;
  double infeasibility_tol = 1e-8;
};

// ---------------------------------------------------------------------------
// Real embedding

/// [[Re A, -Im A], [Im A, Re A]].
inline RMatrix realify(const CMatrix& a) {
  const Eigen::Index n = a.rows();
  RMatrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = a.real();
  out.topRightCorner(n, n) = -a.imag();
  out.bottomLeftCorner(n, n) = a.imag();
  out.bottomRightCorner(n, n) = a.real();
  return out;
}

/// Inverse of the embedding, averaged: X = (X11 + X22)/2 + i (X21 - X12)/2.
inline CMatrix complexify(const RMatrix& x) {
  const Eigen::Index n = x.rows() / 2;
  CMatrix out(n, n);
  out.real() = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  out.imag() = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  return out;
}

/// Real symmetric problem: the same shape with real blocks.
struct RealSDP {
  std::vector<Eigen::Index> dims;
  Eigen::Index num_free = 0;
  std::vector<RMatrix> c;
  RVector c_free;
  std::vector<std::vector<RMatrix>> a;  // a[i][b]
  RMatrix f;                            // m x p
  RVector b;
};

/// Coefficients become realify(A)/2, so <A~/2, X~> = Re tr(A X) when
/// X~ = realify(X).
inline RealSDP realify(const SDPProblem& p) {
  p.validate();
  RealSDP r;
  const std::size_t nb = p.num_blocks();
  for (auto n : p.block_dims) r.dims.push_back(2 * n);
  r.num_free = p.num_free;
  auto emb = [&](const std::vector<CMatrix>& bl, std::size_t b) -> RMatrix {
    if (bl.empty() || bl[b].size() == 0) return RMatrix::Zero(r.dims[b], r.dims[b]);
    RMatrix m = 0.5 * realify(bl[b]);
    return 0.5 * (m + m.transpose());
  };
  for (std::size_t b = 0; b < nb; ++b) r.c.push_back(emb(p.objective, b));
  r.c_free = p.objective_free.size() ? p.objective_free : RVector(RVector::Zero(p.num_free));
  const auto m = static_cast<Eigen::Index>(p.constraints.size());
  r.f = RMatrix::Zero(m, p.num_free);
  r.b.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& con = p.constraints[static_cast<std::size_t>(i)];
    std::vector<RMatrix> row;
    for (std::size_t b = 0; b < nb; ++b) row.push_back(emb(con.blocks, b));
    r.a.push_back(std::move(row));
    if (con.free.size()) r.f.row(i) = con.free.transpose();
    r.b(i) = con.rhs;
  }
  return r;
}

namespace detail {

using Blocks = std::vector<RMatrix>;

inline double inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k].array() * b[k].array()).sum();
  return s;
}

inline double fro(const Blocks& a) { return std::sqrt(inner(a, a)); }

inline RMatrix sym(const RMatrix& a) { return 0.5 * (a + a.transpose()); }

/// A(X)_i = <A_i, X>.
inline RVector apply_a(const RealSDP& p, const Blocks& x) {
  RVector out(p.b.size());
  for (Eigen::Index i = 0; i < p.b.size(); ++i) out(i) = inner(p.a[static_cast<std::size_t>(i)], x);
  return out;
}

/// A^*(y) = sum_i y_i A_i.
inline Blocks apply_at(const RealSDP& p, const RVector& y) {
  Blocks out;
  for (auto n : p.dims) out.push_back(RMatrix::Zero(n, n));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) continue;
    for (std::size_t b = 0; b < out.size(); ++b) out[b] += y(i) * p.a[static_cast<std::size_t>(i)][b];
  }
  return out;
}

/// Largest alpha in (0, 1] (times the fraction) keeping X + alpha dX PD.
inline double max_step(const Blocks& x, const Blocks& dx, double fraction) {
  double alpha = 1.0;
  for (std::size_t b = 0; b < x.size(); ++b) {
    if (x[b].size() == 0) continue;
    Eigen::LLT<RMatrix> llt(x[b]);
    if (llt.info() != Eigen::Success) return 0.0;
    const RMatrix linv = llt.matrixL().solve(RMatrix::Identity(x[b].rows(), x[b].cols()));
    const RMatrix t = sym(linv * dx[b] * linv.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<RMatrix>(t, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, fraction * (-1.0 / lmin));
  }
  return alpha;
}

}  // namespace detail

struct RealSDPResult {
  SDPStatus status = SDPStatus::numerical_failure;
  std::vector<RMatrix> x, s;
  RVector t, y;
  double pobj = 0.0, dobj = 0.0, pinf = 0.0, dinf = 0.0;
  int iterations = 0;
  std::vector<SDPIterate> history;
};

inline RealSDPResult solve_real(const RealSDP& p, const SDPOptions& opt = {}) {
  using detail::Blocks;
  const auto m = p.b.size();
  const Eigen::Index np = p.num_free;
  const std::size_t nb = p.dims.size();
  Eigen::Index ntot = 0;
  for (auto n : p.dims) ntot += n;

  double norm_a = 0.0, norm_c = detail::fro(p.c) + p.c_free.norm();
  for (const auto& row : p.a) norm_a = std::max(norm_a, detail::fro(row));
  const double norm_b = p.b.norm();

  // Starting point: scaled identities.
  const double root_n = std::sqrt(static_cast<double>(std::max<Eigen::Index>(ntot, 1)));
  double xi = std::max(10.0, root_n);
  for (Eigen::Index i = 0; i < m; ++i) {
    xi = std::max(xi, root_n * (1.0 + std::abs(p.b(i))) /
                          (1.0 + detail::fro(p.a[static_cast<std::size_t>(i)])));
  }
  const double eta = std::max({10.0, root_n, norm_a, norm_c});
  Blocks x, s;
  for (auto n : p.dims) {
    x.push_back(xi * RMatrix::Identity(n, n));
    s.push_back(eta * RMatrix::Identity(n, n));
  }
  RVector y = RVector::Zero(m), t = RVector::Zero(np);

  RealSDPResult res;
  // A breakdown right at the end is acceptable when the last recorded
  // iterate already meets the looser tolerance.
  auto stalled_status = [&]() {
    const double scale = 1.0 + std::abs(res.pobj);
    const bool acceptable = !res.history.empty() && res.pinf <= opt.accept_tol && res.dinf <= opt.accept_tol &&
                            std::abs(res.pobj - res.dobj) <= opt.accept_tol * scale;
    return acceptable ? SDPStatus::optimal : SDPStatus::numerical_failure;
  };
  for (int iter = 0;; ++iter) {
    // Residuals and measures.
    const RVector ax = detail::apply_a(p, x);
    const RVector rp = p.b - ax - p.f * t;
    const Blocks aty = detail::apply_at(p, y);
    Blocks rd;
    for (std::size_t b = 0; b < nb; ++b) rd.push_back(p.c[b] - aty[b] - s[b]);
    const RVector rf = p.c_free - p.f.transpose() * y;
    const double pobj = detail::inner(p.c, x) + p.c_free.dot(t);
    const double dobj = p.b.dot(y);
    const double xs = detail::inner(x, s);
    const double pinf = rp.norm() / (1.0 + norm_b);
    const double dinf = (detail::fro(rd) + rf.norm()) / (1.0 + norm_c);
    const double gap = std::abs(pobj - dobj);
    SDPIterate it;
    it.primal_objective = pobj;
    it.dual_objective = dobj;
    it.complementarity = xs;
    it.primal_infeasibility = pinf;
    it.dual_infeasibility = dinf;
    it.residual_slack = std::abs(detail::inner(rd, x)) + std::abs(rf.dot(t)) + std::abs(rp.dot(y));
    res.history.push_back(it);
    res.x = x;
    res.s = s;
    res.y = y;
    res.t = t;
    res.pobj = pobj;
    res.dobj = dobj;
    res.pinf = pinf;
    res.dinf = dinf;
    res.iterations = iter;

    const double scale = 1.0 + std::abs(pobj);
    if (pinf <= opt.tol && dinf <= opt.tol && gap <= opt.tol * scale &&
        xs <= opt.tol * scale) {
      res.status = SDPStatus::optimal;
      return res;
    }
    // Infeasibility certificates from the normalized iterates.
    if (dobj > 0.0) {
      Blocks cert;
      for (std::size_t b = 0; b < nb; ++b) cert.push_back(aty[b] + s[b]);
      const double ratio = (detail::fro(cert) + (p.f.transpose() * y).norm()) / dobj;
      if (ratio < opt.infeasibility_tol && dobj > 1e6 * (1.0 + norm_c)) {
        res.status = SDPStatus::primal_infeasible;
        return res;
      }
    }
    if (pobj < 0.0) {
      const double ratio = (ax + p.f * t).norm() / (-pobj);
      if (ratio < opt.infeasibility_tol && -pobj > 1e6 * (1.0 + norm_b)) {
        res.status = SDPStatus::dual_infeasible;
        return res;
      }
    }
    if (iter >= opt.max_iterations) {
      const bool acceptable = pinf <= opt.accept_tol && dinf <= opt.accept_tol &&
                              gap <= opt.accept_tol * scale;
      res.status = acceptable ? SDPStatus::optimal : SDPStatus::max_iterations;
      return res;
    }

    // Schur complement matrix M_ij = tr(A_i X A_j S^{-1}).
    Blocks sinv;
    for (std::size_t b = 0; b < nb; ++b) {
      Eigen::LLT<RMatrix> llt(s[b]);
      if (llt.info() != Eigen::Success) {
        res.status = stalled_status();
        return res;
      }
      sinv.push_back(llt.solve(RMatrix::Identity(s[b].rows(), s[b].cols())));
    }
    RMatrix mm = RMatrix::Zero(m, m);
    for (std::size_t b = 0; b < nb; ++b) {
      std::vector<RMatrix> xaj(static_cast<std::size_t>(m));
      for (Eigen::Index j = 0; j < m; ++j) {
        xaj[static_cast<std::size_t>(j)] = x[b] * p.a[static_cast<std::size_t>(j)][b] * sinv[b];
      }
      for (Eigen::Index i = 0; i < m; ++i) {
        const RMatrix& ai = p.a[static_cast<std::size_t>(i)][b];
        for (Eigen::Index j = i; j < m; ++j) {
          const double v = (ai.array() * xaj[static_cast<std::size_t>(j)].transpose().array()).sum();
          mm(i, j) += v;
          if (j != i) mm(j, i) += v;
        }
      }
    }
    RMatrix kkt = RMatrix::Zero(m + np, m + np);
    kkt.topLeftCorner(m, m) = mm;
    kkt.topRightCorner(m, np) = p.f;
    kkt.bottomLeftCorner(np, m) = p.f.transpose();
    Eigen::PartialPivLU<RMatrix> lu;
    std::optional<Eigen::CompleteOrthogonalDecomposition<RMatrix>> cod;
    if (m + np > 0) {
      lu.compute(kkt);
      const double d = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
      if (!(d > 1e-14 * std::max(1.0, kkt.cwiseAbs().maxCoeff()))) cod.emplace(kkt);
    }
    auto kkt_solve = [&](const RVector& rhs) -> RVector {
      if (m + np == 0) return RVector();
      auto base = [&](const RVector& r) { return cod ? RVector(cod->solve(r)) : RVector(lu.solve(r)); };
      RVector sol = base(rhs);
      // Iterative refinement; the Schur matrix is badly conditioned near the end.
      for (int k = 0; k < 3; ++k) {
        const RVector res_k = rhs - kkt * sol;
        if (!(res_k.norm() > 1e-15 * (1.0 + rhs.norm()))) break;
        sol += base(res_k);
      }
      return sol;
    };

    const double mu = xs / static_cast<double>(std::max<Eigen::Index>(ntot, 1));
    // Direction for a given centering target and second-order term.
    auto direction = [&](double sigma, const Blocks* dxa, const Blocks* dsa, Blocks& dx,
                         Blocks& ds, RVector& dy, RVector& dt) {
      Blocks g;  // dX without the dy-dependent part
      for (std::size_t b = 0; b < nb; ++b) {
        RMatrix gb = sigma * mu * sinv[b] - x[b] - detail::sym(x[b] * rd[b] * sinv[b]);
        if (dxa) gb -= detail::sym((*dxa)[b] * (*dsa)[b] * sinv[b]);
        g.push_back(std::move(gb));
      }
      RVector rhs(m + np);
      rhs.head(m) = rp - detail::apply_a(p, g);
      rhs.tail(np) = rf;
      const RVector sol = kkt_solve(rhs);
      dy = sol.head(m);
      dt = sol.tail(np);
      const Blocks atdy = detail::apply_at(p, dy);
      dx.clear();
      ds.clear();
      for (std::size_t b = 0; b < nb; ++b) {
        ds.push_back(detail::sym(rd[b] - atdy[b]));
        dx.push_back(detail::sym(g[b] + detail::sym(x[b] * atdy[b] * sinv[b])));
      }
    };

    Blocks dxa, dsa, dx, ds;
    RVector dya, dta, dy, dt;
    direction(0.0, nullptr, nullptr, dxa, dsa, dya, dta);
    const double ap = detail::max_step(x, dxa, 1.0), ad = detail::max_step(s, dsa, 1.0);
    Blocks xa, sa;
    for (std::size_t b = 0; b < nb; ++b) {
      xa.push_back(x[b] + ap * dxa[b]);
      sa.push_back(s[b] + ad * dsa[b]);
    }
    const double mu_aff = detail::inner(xa, sa) / static_cast<double>(std::max<Eigen::Index>(ntot, 1));
    double sigma = mu > 0.0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);
    direction(sigma, &dxa, &dsa, dx, ds, dy, dt);

    const double alpha_p = detail::max_step(x, dx, opt.step_fraction);
    const double alpha_d = detail::max_step(s, ds, opt.step_fraction);
    if (!(alpha_p > 0.0) || !(alpha_d > 0.0) || !std::isfinite(alpha_p + alpha_d)) {
      res.status = stalled_status();
      return res;
    }
    for (std::size_t b = 0; b < nb; ++b) {
      x[b] = detail::sym(x[b] + alpha_p * dx[b]);
      s[b] = detail::sym(s[b] + alpha_d * ds[b]);
    }
    t += alpha_p * dt;
    y += alpha_d * dy;
    if (!y.allFinite() || !t.allFinite()) {
      res.status = stalled_status();
      return res;
    }
  }
}

/// Solves the complex problem through its real embedding.
inline SDPSolution solve(const SDPProblem& p, const SDPOptions& opt = {}) {
  const RealSDP r = realify(p);
  const RealSDPResult rr = solve_real(r, opt);
  SDPSolution out;
  out.status = rr.status;
  for (const auto& xb : rr.x) out.blocks.push_back(complexify(xb));
  for (const auto& sb : rr.s) out.dual_slack.push_back(complexify(sb));
  out.free = rr.t;
  out.dual = rr.y;
  out.primal_objective = rr.pobj;
  out.dual_objective = rr.dobj;
  out.gap = std::abs(rr.pobj - rr.dobj);
  out.primal_infeasibility = rr.pinf;
  out.dual_infeasibility = rr.dinf;
  out.iterations = rr.iterations;
  out.history = rr.history;
  if (out.status == SDPStatus::optimal) {
    const double scale = 1.0 + std::abs(out.primal_objective);
    if (out.gap > opt.accept_tol * scale || out.primal_infeasibility > opt.accept_tol ||
        out.dual_infeasibility > opt.accept_tol) {
      out.status = SDPStatus::max_iterations;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SDPA sparse format

namespace detail {

inline std::string shortest(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Writes the problem in SDPA ".dat-s" form. Our primal is SDPA's dual
/// (max <F0, Y> s.t. <F_i, Y> = c_i), so c = b, F_i = A~_i, F_0 = -C~, with
/// tilde the real embedding halved. Free scalars become pairs p - q in one
/// diagonal block. A leading comment records the complex block sizes and
/// the free count so import_sdpa restores the original problem.
inline void export_sdpa(const SDPProblem& p, std::ostream& os) {
  const RealSDP r = realify(p);
  const auto m = r.b.size();
  const bool lp = r.num_free > 0;
  os << "* ncrat: complex-blocks";
  for (auto n : p.block_dims) os << ' ' << n;
  os << " free " << p.num_free << '\n';
  os << m << '\n';
  os << (r.dims.size() + (lp ? 1 : 0)) << '\n';
  {
    std::string line;
    for (auto n : r.dims) line += std::to_string(n) + ' ';
    if (lp) line += std::to_string(-2 * r.num_free) + ' ';
    if (!line.empty()) line.pop_back();
    os << line << '\n';
  }
  {
    std::string line;
    for (Eigen::Index i = 0; i < m; ++i) line += detail::shortest(r.b(i)) + ' ';
    if (!line.empty()) line.pop_back();
    os << line << '\n';
  }
  auto emit = [&](Eigen::Index mat, std::size_t blk, const RMatrix& a, double sign) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = i; j < a.cols(); ++j)
        if (a(i, j) != 0.0) {
          os << mat << ' ' << (blk + 1) << ' ' << (i + 1) << ' ' << (j + 1) << ' '
             << detail::shortest(sign * a(i, j)) << '\n';
        }
  };
  auto emit_free = [&](Eigen::Index mat, const RVector& coef, double sign) {
    for (Eigen::Index k = 0; k < coef.size(); ++k) {
      if (coef(k) == 0.0) continue;
      const auto blk = r.dims.size() + 1;
      os << mat << ' ' << blk << ' ' << (2 * k + 1) << ' ' << (2 * k + 1) << ' '
         << detail::shortest(sign * coef(k)) << '\n';
      os << mat << ' ' << blk << ' ' << (2 * k + 2) << ' ' << (2 * k + 2) << ' '
         << detail::shortest(-sign * coef(k)) << '\n';
    }
  };
  for (std::size_t b = 0; b < r.dims.size(); ++b) emit(0, b, r.c[b], -1.0);
  if (lp) emit_free(0, r.c_free, -1.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (std::size_t b = 0; b < r.dims.size(); ++b) emit(i + 1, b, r.a[static_cast<std::size_t>(i)][b], 1.0);
    if (lp) emit_free(i + 1, RVector(r.f.row(i).transpose()), 1.0);
  }
}

inline void export_sdpa(const SDPProblem& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_sdpa: cannot open " + path);
  export_sdpa(p, os);
  if (!os) throw std::runtime_error("export_sdpa: write failed for " + path);
}

class SDPAFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a file written by export_sdpa. Files without the ncrat comment are
/// read as real problems (every SDP block becomes a complex block with real
/// data of the same size, diagonal blocks are rejected).
inline SDPProblem import_sdpa(std::istream& is) {
  std::vector<Eigen::Index> complex_dims;
  Eigen::Index num_free = 0;
  bool tagged = false;
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && (line[0] == '*' || line[0] == '"')) {
      const std::string tag = "* ncrat: complex-blocks";
      if (line.rfind(tag, 0) == 0) {
        tagged = true;
        std::istringstream ls(line.substr(tag.size()));
        std::string tok;
        while (ls >> tok) {
          if (tok == "free") {
            ls >> num_free;
            break;
          }
          complex_dims.push_back(std::stol(tok));
        }
      }
      continue;
    }
    for (char& ch : line)
      if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw SDPAFormatError("import_sdpa: unexpected end of file");
    return tokens[pos++];
  };
  auto to_double = [](const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw SDPAFormatError("import_sdpa: bad number " + s);
    }
    return v;
  };
  const auto m = std::stol(next());
  const auto nblocks = std::stol(next());
  std::vector<long> sizes;
  for (long k = 0; k < nblocks; ++k) sizes.push_back(std::stol(next()));
  RVector c(m);
  for (long i = 0; i < m; ++i) c(i) = to_double(next());

  // Real block data, F[mat][blk].
  std::vector<std::vector<RMatrix>> f(static_cast<std::size_t>(m + 1));
  for (auto& row : f)
    for (long sz : sizes) row.push_back(RMatrix::Zero(std::abs(sz), std::abs(sz)));
  while (pos < tokens.size()) {
    const long mat = std::stol(next()), blk = std::stol(next());
    const long i = std::stol(next()), j = std::stol(next());
    const double v = to_double(next());
    if (mat < 0 || mat > m || blk < 1 || blk > nblocks) throw SDPAFormatError("import_sdpa: index out of range");
    RMatrix& a = f[static_cast<std::size_t>(mat)][static_cast<std::size_t>(blk - 1)];
    if (i < 1 || j < 1 || i > a.rows() || j > a.rows()) throw SDPAFormatError("import_sdpa: entry out of range");
    a(i - 1, j - 1) = v;
    a(j - 1, i - 1) = v;
  }

  SDPProblem p;
  const std::size_t nsdp = tagged ? complex_dims.size() : sizes.size();
  if (!tagged) {
    for (long sz : sizes) {
      if (sz < 0) throw SDPAFormatError("import_sdpa: diagonal blocks need the ncrat header");
      complex_dims.push_back(sz);
    }
  }
  p.block_dims = complex_dims;
  p.num_free = num_free;
  auto back = [&](const RMatrix& a, Eigen::Index n) -> CMatrix {
    if (!tagged) return a.cast<Complex>();
    // a = realify(A)/2
    CMatrix out(n, n);
    out.real() = 2.0 * a.topLeftCorner(n, n);
    out.imag() = 2.0 * a.bottomLeftCorner(n, n);
    return out;
  };
  auto free_of = [&](const std::vector<RMatrix>& row) -> RVector {
    RVector out = RVector::Zero(num_free);
    if (num_free > 0) {
      const RMatrix& d = row.back();
      for (Eigen::Index k = 0; k < num_free; ++k) out(k) = d(2 * k, 2 * k);
    }
    return out;
  };
  for (std::size_t b = 0; b < nsdp; ++b) p.objective.push_back(-back(f[0][b], complex_dims[b]));
  p.objective_free = -free_of(f[0]);
  for (long i = 1; i <= m; ++i) {
    SDPConstraint con;
    for (std::size_t b = 0; b < nsdp; ++b) con.blocks.push_back(back(f[static_cast<std::size_t>(i)][b], complex_dims[b]));
    con.free = free_of(f[static_cast<std::size_t>(i)]);
    con.rhs = c(i - 1);
    p.constraints.push_back(std::move(con));
  }
  return p;
}

inline SDPProblem import_sdpa(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("import_sdpa: cannot open " + path);
  return import_sdpa(is);
}

}  // namespace ncrat
