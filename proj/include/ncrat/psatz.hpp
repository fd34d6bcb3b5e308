#pragma once

// Quadratic module certificates and eigenvalue optimization on free
// spectrahedra. A candidate identity
//
//   target = sum_ab H_ab w_a^* w_b + sum G_(alpha a)(beta b) w_a^* L_alpha,beta w_b
//
// over a basis w of V_l is imposed by equating evaluations at hermitian
// sample tuples; the resulting linear system is compressed to its row space
// and handed to the SDP kernel.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "ncrat/expr.hpp"
#include "ncrat/gnsbasis.hpp"
#include "ncrat/numkernel.hpp"
#include "ncrat/realization.hpp"
#include "ncrat/sdpcore.hpp"

namespace ncrat {

class NotHermitianError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnboundedError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// L(X) = I + sum_j H_j (x) X_j with hermitian H_j of size e.
struct MonicHermitianPencil {
  Eigen::Index e = 1;
  std::vector<CMatrix> h;  // h[j-1] = H_j

  static MonicHermitianPencil global() { return {}; }

  int d() const { return static_cast<int>(h.size()); }

  /// True when L = I, i.e. D(L) is everything.
  bool trivial() const {
    for (const auto& hj : h)
      if (norm_max(hj) != 0.0) return false;
    return true;
  }

  void validate() const {
    if (e < 1) throw ShapeError("MonicHermitianPencil: size must be >= 1");
    for (const auto& hj : h) {
      if (hj.rows() != e || hj.cols() != e) throw ShapeError("MonicHermitianPencil: coefficient shape");
      if (hermitian_deviation(hj) > 1e-12 * (1.0 + norm_max(hj))) {
        throw ShapeError("MonicHermitianPencil: coefficients must be hermitian");
      }
    }
  }

  /// Block (alpha, beta) of L(X): delta I + sum_j H_j(alpha, beta) X_j.
  CMatrix entry(Eigen::Index alpha, Eigen::Index beta, const MatrixTuple& x) const {
    const Eigen::Index n = x.rows;
    CMatrix out = alpha == beta ? CMatrix(CMatrix::Identity(n, n)) : CMatrix(CMatrix::Zero(n, n));
    for (std::size_t j = 0; j < h.size() && static_cast<int>(j) < x.d(); ++j) {
      const Complex c = h[j](alpha, beta);
      if (c != 0.0) out += c * x[j];
    }
    return out;
  }

  CMatrix eval(const MatrixTuple& x) const {
    const Eigen::Index n = x.rows;
    CMatrix out = CMatrix::Identity(e * n, e * n);
    for (std::size_t j = 0; j < h.size(); ++j) out += kron(h[j], x[j]);
    return out;
  }

  bool contains(const MatrixTuple& x, double tol = 0.0) const {
    return min_eigenvalue(eval(x)) >= -tol;
  }
};

/// The free interval -I <= X <= I in one variable: H_1 = diag(1, -1).
inline MonicHermitianPencil interval_pencil() {
  MonicHermitianPencil l;
  l.e = 2;
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 0) = 1.0;
  h(1, 1) = -1.0;
  l.h.push_back(h);
  return l;
}

struct PsatzOptions {
  int level = 1;
  std::uint64_t seed = 0;
  BasisOptions basis;
  SDPOptions sdp;
  double rank_tol = 1e-9;         // constraint rank decisions
  double certify_tol = 1e-7;      // certified when max lambda_min >= -certify_tol
  double residual_tol = 1e-6;     // held-out check, relative
  double eig_drop = 1e-12;        // after refinement, eigenvalues below this (relative) are roundoff
  double face_tol = 1e-6;         // relative eigenvalue threshold defining the numerical face
  double sample_norm_cap = 1e4;
  int samples_per_size = 2;
  int max_sample_size = 8;
  int trials_per_sample = 40;
  int holdout_samples = 50;
  bool caratheodory = true;       // compute 1 + dim hV_{2l+1} when affordable
  std::size_t caratheodory_word_cap = 20000;
};

struct QMCertificate {
  bool certified = false;
  std::string reason;
  int level = 0;
  long theoretical_level = 0;  // 2 tau(r) + 1
  std::vector<Expr> basis;
  CMatrix h;                   // Gram matrix over the basis
  CMatrix g;                   // localizing Gram matrix over C^e (x) basis (empty if L trivial)
  Eigen::Index e = 1;
  std::vector<Expr> squares;                // s_i
  std::vector<std::vector<Expr>> vectors;   // v_j, each of length e
  double lambda_min = 0.0;     // max over certificates of the smallest Gram eigenvalue
  double residual = 0.0;       // max relative residual at held-out samples
  int holdout = 0;
  std::size_t rank_h = 0;
  std::size_t caratheodory_bound = 0;  // 1 + dim hV_{2l+1}; 0 when not computed
  std::size_t constraint_rank = 0;
  std::size_t sample_count = 0;
  SDPStatus sdp_status = SDPStatus::numerical_failure;
  double gap = 0.0;
  int sdp_iterations = 0;
};

enum class OptStatus { optimal, infeasible_at_level, solver_failure };

inline std::string to_string(OptStatus s) {
  switch (s) {
    case OptStatus::optimal: return "optimal";
    case OptStatus::infeasible_at_level: return "infeasible-at-level";
    case OptStatus::solver_failure: return "solver-failure";
  }
  return "solver-failure";
}

enum class OptDirection { sup, inf };

struct OptResult {
  double mu = 0.0;
  OptStatus status = OptStatus::solver_failure;
  QMCertificate certificate;  // for mu - r (sup) or r - mu (inf)
  int level = 0;
  double gap = 0.0;
  std::string diagnostics;
};

namespace detail {

/// Real coordinates of a hermitian k x k matrix: diagonal entries, then
/// (Re, Im) of each strictly upper entry in row-major order.
inline Eigen::Index herm_params(Eigen::Index k) { return k * k; }

inline Eigen::Index herm_offdiag_index(Eigen::Index k, Eigen::Index a, Eigen::Index b) {
  // position of pair (a, b), a < b, in row-major order of the upper triangle
  return k + 2 * (a * k - a * (a + 1) / 2 + (b - a - 1));
}

/// Coefficient row (complex) of the map K -> sum_ab K_ab m_ab.
inline void herm_coeffs(const std::vector<Complex>& m, Eigen::Index k, std::vector<Complex>& out) {
  out.assign(static_cast<std::size_t>(k * k), Complex(0.0));
  for (Eigen::Index a = 0; a < k; ++a) out[static_cast<std::size_t>(a)] = m[static_cast<std::size_t>(a * k + a)];
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = a + 1; b < k; ++b) {
      const Complex mab = m[static_cast<std::size_t>(a * k + b)], mba = m[static_cast<std::size_t>(b * k + a)];
      const auto p = static_cast<std::size_t>(herm_offdiag_index(k, a, b));
      out[p] = mab + mba;
      out[p + 1] = Complex(0.0, 1.0) * (mab - mba);
    }
}

/// Hermitian A with Re tr(A K) = row . params(K).
inline CMatrix herm_from_row(const RVector& row, Eigen::Index off, Eigen::Index k) {
  CMatrix a = CMatrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) a(i, i) = row(off + i);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const Eigen::Index p = off + herm_offdiag_index(k, i, j);
      a(i, j) = 0.5 * Complex(row(p), row(p + 1));
      a(j, i) = std::conj(a(i, j));
    }
  return a;
}

inline RVector identity_params(Eigen::Index k) {
  RVector v = RVector::Zero(k * k);
  v.head(k).setOnes();
  return v;
}

/// Sampled linear system over (params(H), params(G), mu).
struct SampledSystem {
  Eigen::Index dim = 0;  // basis size D
  Eigen::Index e = 1;
  bool localizing = false;
  bool with_mu = false;
  std::vector<MatrixTuple> samples;
  std::vector<RVector> rows;  // length P (+1 for mu)
  std::vector<double> rhs;

  Eigen::Index params_h() const { return herm_params(dim); }
  Eigen::Index params_g() const { return localizing ? herm_params(e * dim) : 0; }
  Eigen::Index width() const { return params_h() + params_g() + (with_mu ? 1 : 0); }
};

/// Values of the basis and the target at x; nullopt when x is unusable.
inline std::optional<std::pair<std::vector<CMatrix>, CMatrix>> sample_values(
    const std::vector<Expr>& basis, const Expr& target, const MatrixTuple& x, double cap) {
  try {
    ExprEvaluator ev(x);
    std::vector<CMatrix> w;
    for (const auto& b : basis) {
      const CMatrix& v = ev(b);
      if (!v.allFinite() || norm_max(v) > cap) return std::nullopt;
      w.push_back(v);
    }
    CMatrix t = ev(target);
    if (!t.allFinite() || norm_max(t) > cap * cap) return std::nullopt;
    return std::make_pair(std::move(w), std::move(t));
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

/// Appends the n^2 real equations SOS(X) - mu I = T(X) for one sample,
/// scaled so the largest coefficient is about one.
inline void append_equations(SampledSystem& sys, const MonicHermitianPencil& l,
                             const MatrixTuple& x, const std::vector<CMatrix>& w, const CMatrix& t) {
  const Eigen::Index n = x.rows, dm = sys.dim, e = sys.e;
  const Eigen::Index ph = sys.params_h(), pg = sys.params_g();
  // products[a*D+b] = W_a^* W_b
  std::vector<CMatrix> prod(static_cast<std::size_t>(dm * dm));
  for (Eigen::Index a = 0; a < dm; ++a)
    for (Eigen::Index b = 0; b < dm; ++b) prod[static_cast<std::size_t>(a * dm + b)] = w[static_cast<std::size_t>(a)].adjoint() * w[static_cast<std::size_t>(b)];
  std::vector<CMatrix> lprod;
  if (sys.localizing) {
    const Eigen::Index k = e * dm;
    lprod.resize(static_cast<std::size_t>(k * k));
    for (Eigen::Index al = 0; al < e; ++al)
      for (Eigen::Index be = 0; be < e; ++be) {
        const CMatrix lab = l.entry(al, be, x);
        for (Eigen::Index b = 0; b < dm; ++b) {
          const CMatrix lw = lab * w[static_cast<std::size_t>(b)];
          for (Eigen::Index a = 0; a < dm; ++a) {
            lprod[static_cast<std::size_t>((al * dm + a) * k + (be * dm + b))] = w[static_cast<std::size_t>(a)].adjoint() * lw;
          }
        }
      }
  }
  std::vector<Complex> m, ch, cg;
  std::vector<RVector> new_rows;
  std::vector<double> new_rhs;
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index q = p; q < n; ++q) {
      m.resize(static_cast<std::size_t>(dm * dm));
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = prod[i](p, q);
      herm_coeffs(m, dm, ch);
      if (sys.localizing) {
        const Eigen::Index k = e * dm;
        m.resize(static_cast<std::size_t>(k * k));
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = lprod[i](p, q);
        herm_coeffs(m, k, cg);
      }
      for (int part = 0; part < (p == q ? 1 : 2); ++part) {
        auto pick = [&](Complex z) { return part == 0 ? z.real() : z.imag(); };
        RVector row = RVector::Zero(sys.width());
        for (Eigen::Index i = 0; i < ph; ++i) row(i) = pick(ch[static_cast<std::size_t>(i)]);
        for (Eigen::Index i = 0; i < pg; ++i) row(ph + i) = pick(cg[static_cast<std::size_t>(i)]);
        if (sys.with_mu && p == q) row(ph + pg) = -1.0;
        new_rows.push_back(std::move(row));
        new_rhs.push_back(pick(t(p, q)));
      }
    }
  }
  double scale = 1.0;
  for (const auto& r : new_rows) scale = std::max(scale, r.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < new_rows.size(); ++i) {
    sys.rows.push_back(new_rows[i] / scale);
    sys.rhs.push_back(new_rhs[i] / scale);
  }
  sys.samples.push_back(x);
}

inline RMatrix stack_rows(const SampledSystem& sys, bool with_rhs) {
  RMatrix a(static_cast<Eigen::Index>(sys.rows.size()), sys.width() + (with_rhs ? 1 : 0));
  for (std::size_t i = 0; i < sys.rows.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)).head(sys.width()) = sys.rows[i].transpose();
    if (with_rhs) a(static_cast<Eigen::Index>(i), sys.width()) = sys.rhs[i];
  }
  return a;
}

inline Eigen::Index numeric_rank(const RMatrix& a, double tol) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<RMatrix> svd(a);
  const RVector s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > tol * s(0)) ++r;
  return r;
}

/// Adds samples size by size until the rank of [A | T] is unchanged over
/// three consecutive sizes.
inline SampledSystem build_system(const std::vector<Expr>& basis, const Expr& target,
                                  const MonicHermitianPencil& l, bool with_mu, int d,
                                  const PsatzOptions& opt, std::uint64_t stream_base) {
  SampledSystem sys;
  sys.dim = static_cast<Eigen::Index>(basis.size());
  sys.e = l.e;
  sys.localizing = !l.trivial();
  sys.with_mu = with_mu;
  std::vector<Eigen::Index> ranks;
  std::uint64_t stream = stream_base;
  for (int n = 1; n <= opt.max_sample_size; ++n) {
    int added = 0;
    for (int s = 0; s < opt.samples_per_size; ++s) {
      for (int t = 0; t < opt.trials_per_sample; ++t) {
        const MatrixTuple x = random_tuple(std::max(d, 1), n, n, SampleMode::hermitian,
                                           derive_seed(opt.seed, stream++));
        auto vals = sample_values(basis, target, x, opt.sample_norm_cap);
        if (!vals) continue;
        append_equations(sys, l, x, vals->first, vals->second);
        ++added;
        break;
      }
    }
    if (added == 0) continue;
    ranks.push_back(numeric_rank(stack_rows(sys, true), opt.rank_tol));
    const std::size_t k = ranks.size();
    if (k >= 3 && ranks[k - 1] == ranks[k - 2] && ranks[k - 2] == ranks[k - 3]) break;
  }
  if (sys.samples.empty()) throw SamplingError("psatz: no hermitian sample in the common domain");
  return sys;
}

struct Compressed {
  RMatrix a;  // k x width, orthonormal rows
  RVector b;
  bool consistent = true;
  double inconsistency = 0.0;
};

inline Compressed compress(const SampledSystem& sys, double tol) {
  const RMatrix a = stack_rows(sys, false);
  RVector b(static_cast<Eigen::Index>(sys.rhs.size()));
  for (std::size_t i = 0; i < sys.rhs.size(); ++i) b(static_cast<Eigen::Index>(i)) = sys.rhs[i];
  Eigen::BDCSVD<RMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector s = svd.singularValues();
  Eigen::Index k = 0;
  while (k < s.size() && s(k) > tol * s(0)) ++k;
  Compressed out;
  const RMatrix u = svd.matrixU().leftCols(k);
  const RVector ub = u.transpose() * b;
  out.inconsistency = (b - u * ub).norm() / (1.0 + b.norm());
  out.consistent = out.inconsistency <= 1e3 * tol;
  // Rows stay in the scale of the sampled equations: dividing U^T b by small
  // singular values would amplify evaluation roundoff into the constraints.
  const double top = k > 0 ? s(0) : 1.0;
  out.a = (s.head(k) / top).asDiagonal() * svd.matrixV().leftCols(k).transpose();
  out.b = ub / top;
  return out;
}

inline std::vector<std::pair<double, CVector>> psd_factors(const CMatrix& k, double drop) {
  std::vector<std::pair<double, CVector>> out;
  if (k.size() == 0) return out;
  const HermitianEig eig = hermitian_eig(CMatrix(0.5 * (k + k.adjoint())));
  const double top = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = eig.values.size() - 1; i >= 0; --i) {
    if (eig.values(i) > drop * top && eig.values(i) > 0.0) out.emplace_back(eig.values(i), eig.vectors.col(i));
  }
  return out;
}

/// sqrt(lambda) * sum_b conj(g_b) w_b, skipping negligible coefficients.
inline Expr combine(const std::vector<Expr>& w, double lambda, const CVector& g, Eigen::Index off) {
  const double root = std::sqrt(lambda);
  double top = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b) top = std::max(top, std::abs(g(off + static_cast<Eigen::Index>(b))));
  std::vector<Expr> terms;
  for (std::size_t b = 0; b < w.size(); ++b) {
    const Complex c = root * std::conj(g(off + static_cast<Eigen::Index>(b)));
    if (std::abs(c) <= 1e-14 * root * top) continue;
    terms.push_back(ops::scale(c, w[b]));
  }
  return ops::sum_of(terms);
}

inline CMatrix combine_value(const std::vector<CMatrix>& wv, double lambda, const CVector& g, Eigen::Index off) {
  CMatrix acc = CMatrix::Zero(wv[0].rows(), wv[0].cols());
  for (std::size_t b = 0; b < wv.size(); ++b) acc += std::conj(g(off + static_cast<Eigen::Index>(b))) * wv[b];
  return std::sqrt(lambda) * acc;
}

inline RVector to_params(const CMatrix& k) {
  const Eigen::Index n = k.rows();
  RVector p(n * n);
  for (Eigen::Index a = 0; a < n; ++a) p(a) = k(a, a).real();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const Eigen::Index i = herm_offdiag_index(n, a, b);
      p(i) = k(a, b).real();
      p(i + 1) = k(a, b).imag();
    }
  return p;
}

/// Hermitian matrix whose parameter `idx` is one and the rest zero.
inline CMatrix param_unit(Eigen::Index n, Eigen::Index idx) {
  CMatrix e = CMatrix::Zero(n, n);
  if (idx < n) {
    e(idx, idx) = 1.0;
    return e;
  }
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const Eigen::Index i = herm_offdiag_index(n, a, b);
      if (idx == i) {
        e(a, b) = e(b, a) = 1.0;
        return e;
      }
      if (idx == i + 1) {
        e(a, b) = Complex(0.0, 1.0);
        e(b, a) = Complex(0.0, -1.0);
        return e;
      }
    }
  return e;
}

inline CMatrix face_basis(const CMatrix& k, double tol) {
  if (k.size() == 0) return CMatrix(0, 0);
  const HermitianEig eig = hermitian_eig(k);
  const double top = std::max(eig.values.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    if (eig.values(i) > tol * top) keep.push_back(i);
  CMatrix u(k.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) u.col(static_cast<Eigen::Index>(j)) = eig.vectors.col(keep[j]);
  return u;
}

/// Writes K = U C U^* (U spanning the eigenvectors above face_tol) and
/// corrects C, and mu when present, onto the sampled equations. Succeeds when
/// the refit is consistent and C is positive semidefinite.
inline bool refine_face(const Compressed& comp, Eigen::Index dm, Eigen::Index kg, bool with_mu,
                        double face_tol, CMatrix& h, CMatrix& g, double& mu) {
  const CMatrix uh = face_basis(h, face_tol);
  const CMatrix ug = kg > 0 ? face_basis(g, face_tol) : CMatrix(0, 0);
  const Eigen::Index rh = uh.cols(), rg = ug.cols();
  const Eigen::Index ph = dm * dm, pg = kg * kg;
  const Eigen::Index cols = rh * rh + rg * rg + (with_mu ? 1 : 0);
  RMatrix m(comp.a.rows(), cols);
  for (Eigen::Index c = 0; c < rh * rh; ++c) {
    const RVector pk = to_params(uh * param_unit(rh, c) * uh.adjoint());
    m.col(c) = comp.a.leftCols(ph) * pk;
  }
  for (Eigen::Index c = 0; c < rg * rg; ++c) {
    const RVector pk = to_params(ug * param_unit(rg, c) * ug.adjoint());
    m.col(rh * rh + c) = comp.a.middleCols(ph, pg) * pk;
  }
  if (with_mu) m.col(cols - 1) = comp.a.col(ph + pg);
  // Start from the solver's own point on the face and apply the smallest
  // correction that satisfies the equations.
  RVector z0(cols);
  z0.head(rh * rh) = to_params(CMatrix(uh.adjoint() * h * uh));
  if (rg > 0) z0.segment(rh * rh, rg * rg) = to_params(CMatrix(ug.adjoint() * g * ug));
  if (with_mu) z0(cols - 1) = mu;
  const Eigen::CompleteOrthogonalDecomposition<RMatrix> cod(m);
  const RVector z = z0 - cod.solve(RVector(m * z0 - comp.b));
  if (!z.allFinite() || (m * z - comp.b).norm() > 1e-10 * (1.0 + comp.b.norm())) return false;
  auto assemble = [](const CMatrix& u, Eigen::Index r, const RVector& zc) {
    CMatrix c = CMatrix::Zero(r, r);
    for (Eigen::Index i = 0; i < r * r; ++i) c += zc(i) * param_unit(r, i);
    return std::make_pair(CMatrix(u * c * u.adjoint()), c);
  };
  const auto [hn, ch] = assemble(uh, rh, z.head(rh * rh));
  const auto [gn, cg] = assemble(ug, rg, z.segment(rh * rh, rg * rg));
  const double scale = std::max(1.0, norm_max(ch));
  if (rh > 0 && min_eigenvalue(ch) < -1e-12 * scale) return false;
  if (rg > 0 && min_eigenvalue(cg) < -1e-12 * std::max(1.0, norm_max(cg))) return false;
  h = hn;
  if (kg > 0) g = gn;
  if (with_mu) mu = z(cols - 1);
  return true;
}

/// Common core: solve for target = SOS + LOC (+ mu I) and fill a certificate.
/// With mu: minimizes mu. Without: maximizes the smallest Gram eigenvalue.
struct CoreResult {
  QMCertificate cert;
  double mu = 0.0;
  bool solved = false;
  bool unbounded = false;
  std::string diagnostics;
};

struct QMProgram {
  SampledSystem sys;
  Compressed comp;
  SDPProblem problem;  // empty when the equations are inconsistent
};

/// Samples, compresses and poses the SDP. Block 0 is H, block 1 (when L is
/// not trivial) the localizing Gram matrix; the single free scalar is mu,
/// or the shift t with K = X - t I when maximizing the smallest eigenvalue.
inline QMProgram build_qm_program(const Expr& target, const MonicHermitianPencil& l,
                                  const std::vector<Expr>& basis, bool with_mu, int d,
                                  const PsatzOptions& opt) {
  QMProgram prog;
  prog.sys = build_system(basis, target, l, with_mu, d, opt, 0);
  prog.comp = compress(prog.sys, opt.rank_tol);
  if (!prog.comp.consistent) return prog;
  const SampledSystem& sys = prog.sys;
  const Compressed& comp = prog.comp;
  const Eigen::Index dm = sys.dim, kg = sys.localizing ? sys.e * dm : 0;
  const Eigen::Index ph = sys.params_h(), pg = sys.params_g();
  SDPProblem& p = prog.problem;
  p.block_dims.push_back(dm);
  if (sys.localizing) p.block_dims.push_back(kg);
  p.num_free = 1;
  p.objective.push_back(CMatrix::Zero(dm, dm));
  if (sys.localizing) p.objective.push_back(CMatrix::Zero(kg, kg));
  p.objective_free = RVector::Ones(1);
  const RVector id_h = identity_params(dm), id_g = sys.localizing ? identity_params(kg) : RVector();
  for (Eigen::Index i = 0; i < comp.a.rows(); ++i) {
    const RVector row = comp.a.row(i).transpose();
    SDPConstraint con;
    con.blocks.push_back(herm_from_row(row, 0, dm));
    if (sys.localizing) con.blocks.push_back(herm_from_row(row, ph, kg));
    con.free = RVector(1);
    if (with_mu) {
      con.free(0) = row(ph + pg);
    } else {
      double c = -row.head(ph).dot(id_h);
      if (sys.localizing) c -= row.segment(ph, pg).dot(id_g);
      con.free(0) = c;
    }
    con.rhs = comp.b(i);
    p.constraints.push_back(std::move(con));
  }
  return prog;
}

/// Largest spectral norm of the target over the sample tuples.
inline double sampled_scale(const Expr& target, const SampledSystem& sys) {
  double s = 0.0;
  for (const auto& x : sys.samples) {
    try {
      s = std::max(s, norm_2(eval_expr(target, x)));
    } catch (const DomainError&) {
    }
  }
  return s;
}

inline CoreResult solve_qm(const Expr& target, const MonicHermitianPencil& l, const std::vector<Expr>& basis,
                           bool with_mu, int d, const PsatzOptions& opt) {
  CoreResult res;
  QMCertificate& cert = res.cert;
  cert.level = opt.level;
  cert.basis = basis;
  cert.e = l.e;
  const QMProgram prog = build_qm_program(target, l, basis, with_mu, d, opt);
  const SampledSystem& sys = prog.sys;
  const Compressed& comp = prog.comp;
  cert.sample_count = sys.samples.size();
  cert.constraint_rank = static_cast<std::size_t>(comp.a.rows());
  if (!comp.consistent) {
    cert.reason = "target is not in the span of the level-" + std::to_string(opt.level) +
                  " products (linear residual " + std::to_string(comp.inconsistency) + ")";
    cert.sdp_status = SDPStatus::primal_infeasible;
    return res;
  }
  const Eigen::Index dm = sys.dim, kg = sys.localizing ? sys.e * dm : 0;
  const SDPProblem& p = prog.problem;
  const SDPSolution sol = solve(p, opt.sdp);
  cert.sdp_status = sol.status;
  cert.gap = sol.gap;
  cert.sdp_iterations = sol.iterations;
  if (sol.status == SDPStatus::dual_infeasible) {
    if (!with_mu) {
      // The smallest eigenvalue can be made arbitrarily large; any interior
      // iterate is a strict certificate.
    } else {
      res.unbounded = true;
      res.diagnostics = "SDP unbounded: mu has no lower bound at this level";
      cert.reason = res.diagnostics;
      return res;
    }
  } else if (with_mu && sol.status == SDPStatus::primal_infeasible) {
    res.unbounded = true;
    res.diagnostics = "SDP infeasible: no mu admits a certificate at this level";
    cert.reason = res.diagnostics;
    return res;
  } else if (with_mu && sol.dual_infeasibility <= 1e-5 &&
             sol.dual_objective > 1e3 * (1.0 + sampled_scale(target, sys))) {
    // Weak infeasibility: the iterates chase mu -> infinity without ever
    // becoming feasible. The dual objective is a lower bound on mu far above
    // every sampled value of the target.
    res.unbounded = true;
    res.diagnostics = "SDP stalled with mu >= " + std::to_string(sol.dual_objective) +
                      " (weakly infeasible): no finite mu at this level";
    cert.reason = res.diagnostics;
    return res;
  } else if (sol.status != SDPStatus::optimal) {
    res.diagnostics = "SDP status " + to_string(sol.status) + ", primal infeasibility " +
                      std::to_string(sol.primal_infeasibility) + ", dual infeasibility " +
                      std::to_string(sol.dual_infeasibility) + ", iterations " +
                      std::to_string(sol.iterations);
    cert.reason = sol.status == SDPStatus::primal_infeasible
                      ? "no certificate at level " + std::to_string(opt.level)
                      : res.diagnostics;
    return res;
  }
  res.solved = true;
  const double shift = with_mu ? 0.0 : sol.free(0);
  res.mu = with_mu ? sol.free(0) : 0.0;
  cert.lambda_min = -shift;
  cert.h = sol.blocks[0] - shift * CMatrix::Identity(dm, dm);
  if (sys.localizing) cert.g = sol.blocks[1] - shift * CMatrix::Identity(kg, kg);
  if (!with_mu && shift > opt.certify_tol) {
    cert.reason = "largest attainable smallest Gram eigenvalue is " + std::to_string(-shift) +
                  " < 0 at level " + std::to_string(opt.level);
    return res;
  }

  // Squares and localizing vectors. Interior point solutions carry tiny
  // eigenvalues in directions that should be zero; they are removed by
  // refitting on the numerical face instead of being truncated.
  double mu_fit = res.mu;
  double drop = 0.0;
  if (refine_face(comp, dm, kg, with_mu, opt.face_tol, cert.h, cert.g, mu_fit)) {
    res.mu = mu_fit;
    drop = opt.eig_drop;
  }
  const auto hf = psd_factors(cert.h, drop);
  cert.rank_h = hf.size();
  for (const auto& [lam, g] : hf) cert.squares.push_back(combine(basis, lam, g, 0));
  std::vector<std::pair<double, CVector>> gf;
  if (sys.localizing) {
    gf = psd_factors(cert.g, drop);
    for (const auto& [lam, g] : gf) {
      std::vector<Expr> v;
      for (Eigen::Index al = 0; al < sys.e; ++al) v.push_back(combine(basis, lam, g, al * dm));
      cert.vectors.push_back(std::move(v));
    }
  }

  // Held-out validation with fresh samples.
  double worst = 0.0;
  int used = 0;
  std::uint64_t stream = 1000003;
  for (int k = 0; used < opt.holdout_samples && k < opt.holdout_samples * 10; ++k) {
    const Eigen::Index n = 1 + k % 4;
    const MatrixTuple x = random_tuple(std::max(d, 1), n, n, SampleMode::hermitian,
                                       derive_seed(opt.seed, stream++));
    auto vals = sample_values(basis, target, x, opt.sample_norm_cap);
    if (!vals) continue;
    const auto& [wv, tv] = *vals;
    CMatrix acc = with_mu ? CMatrix(-res.mu * CMatrix::Identity(n, n)) : CMatrix(CMatrix::Zero(n, n));
    for (const auto& [lam, g] : hf) {
      const CMatrix s = combine_value(wv, lam, g, 0);
      acc += s.adjoint() * s;
    }
    for (const auto& [lam, g] : gf) {
      std::vector<CMatrix> v;
      for (Eigen::Index al = 0; al < sys.e; ++al) v.push_back(combine_value(wv, lam, g, al * dm));
      for (Eigen::Index al = 0; al < sys.e; ++al)
        for (Eigen::Index be = 0; be < sys.e; ++be)
          acc += v[static_cast<std::size_t>(al)].adjoint() * l.entry(al, be, x) * v[static_cast<std::size_t>(be)];
    }
    worst = std::max(worst, norm_max(acc - tv) / (1.0 + norm_max(tv)));
    ++used;
  }
  cert.residual = worst;
  cert.holdout = used;
  if (worst > opt.residual_tol) {
    cert.reason = "held-out residual " + std::to_string(worst) + " exceeds tolerance";
    return res;
  }
  cert.certified = true;
  return res;
}

inline int common_d(const Expr& r, const MonicHermitianPencil& l) {
  return std::max({r.max_variable(), l.d(), 1});
}

}  // namespace detail

/// Throws NotHermitianError unless r(X) is hermitian at sampled points.
inline void check_hermitian(const Expr& r, int d, std::uint64_t seed, int samples = 6) {
  int checked = 0;
  for (int k = 0; k < samples * 10 && checked < samples; ++k) {
    const Eigen::Index n = 1 + k % 3;
    const MatrixTuple x = random_tuple(std::max(d, 1), n, n, SampleMode::hermitian, derive_seed(seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(k)));
    try {
      const CMatrix v = eval_expr(r, x);
      ++checked;
      if (norm_max(v - v.adjoint()) > 1e-8 * (1.0 + norm_max(v))) {
        throw NotHermitianError("expression is not hermitian: r(X) != r(X)^* at a hermitian sample");
      }
    } catch (const DomainError&) {
    }
  }
  if (checked == 0) throw SamplingError("hermitian check: no sample in the domain");
}

/// Basis of V_level for r (and the variables of L).
inline FunctionBasis psatz_basis(const Expr& r, const MonicHermitianPencil& l, const PsatzOptions& opt) {
  const SubexprSet rset = build_R(r, detail::common_d(r, l));
  return build_basis(rset, opt.level, opt.seed, opt.basis);
}

/// 1 + dim V_{2l+1} (the space is closed under the involution, so its
/// hermitian part has the same real dimension), or 0 if too many words.
inline std::size_t caratheodory_bound(const Expr& r, const MonicHermitianPencil& l, const PsatzOptions& opt) {
  const SubexprSet rset = build_R(r, detail::common_d(r, l));
  double words = 0.0, pw = 1.0;
  for (int k = 1; k <= 2 * opt.level + 1; ++k) {
    pw *= static_cast<double>(rset.size());
    words += pw;
  }
  if (words > static_cast<double>(opt.caratheodory_word_cap)) return 0;
  return 1 + build_basis(rset, 2 * opt.level + 1, opt.seed, opt.basis).dim();
}

/// Tries to write r = sum s_i^* s_i + sum v_j^* L v_j with s_i, v_j over V_level.
/// `basis_override` replaces V_level by the span of the given functions.
inline QMCertificate certify_qm(const Expr& r, const MonicHermitianPencil& l, const PsatzOptions& opt = {},
                                const std::optional<std::vector<Expr>>& basis_override = {}) {
  l.validate();
  const int d = detail::common_d(r, l);
  check_hermitian(r, d, opt.seed);
  std::vector<Expr> basis = basis_override ? *basis_override : psatz_basis(r, l, opt).exprs;
  detail::CoreResult core = detail::solve_qm(r, l, basis, false, d, opt);
  core.cert.theoretical_level = 2 * tau(r) + 1;
  if (opt.caratheodory && !basis_override) core.cert.caratheodory_bound = caratheodory_bound(r, l, opt);
  return core.cert;
}

/// sup (or inf) of the eigenvalues of r over hdom r cap D(L), relaxed at
/// the given level: min mu with mu - r in Q_level (inf: max mu, r - mu).
inline OptResult optimize_eig(const Expr& r, const MonicHermitianPencil& l, OptDirection dir,
                              const PsatzOptions& opt = {},
                              const std::optional<std::vector<Expr>>& basis_override = {}) {
  l.validate();
  const int d = detail::common_d(r, l);
  check_hermitian(r, d, opt.seed);
  std::vector<Expr> basis = basis_override ? *basis_override : psatz_basis(r, l, opt).exprs;
  // sup: SOS - mu = -r ; inf: SOS - mu' = r with mu' = -mu.
  const Expr target = dir == OptDirection::sup ? ops::scale(-1.0, r) : r;
  detail::CoreResult core = detail::solve_qm(target, l, basis, true, d, opt);
  OptResult out;
  out.level = opt.level;
  core.cert.theoretical_level = 2 * tau(r) + 1;
  out.certificate = core.cert;
  out.gap = core.cert.gap;
  out.diagnostics = core.diagnostics;
  if (core.unbounded) throw UnboundedError("optimize_eig: unbounded at level " + std::to_string(opt.level));
  if (!core.solved) {
    out.status = core.cert.sdp_status == SDPStatus::primal_infeasible ? OptStatus::infeasible_at_level
                                                                       : OptStatus::solver_failure;
    return out;
  }
  out.mu = dir == OptDirection::sup ? core.mu : -core.mu;
  out.status = core.cert.certified ? OptStatus::optimal : OptStatus::solver_failure;
  if (!core.cert.certified && out.diagnostics.empty()) out.diagnostics = core.cert.reason;
  return out;
}

enum class QMTask { certify, sup, inf };

/// The SDP that certify_qm (or optimize_eig) would solve, for export.
inline SDPProblem qm_sdp(const Expr& r, const MonicHermitianPencil& l, QMTask task,
                         const PsatzOptions& opt = {},
                         const std::optional<std::vector<Expr>>& basis_override = {}) {
  l.validate();
  const int d = detail::common_d(r, l);
  const std::vector<Expr> basis = basis_override ? *basis_override : psatz_basis(r, l, opt).exprs;
  const Expr target = task == QMTask::sup ? ops::scale(-1.0, r) : r;
  detail::QMProgram prog = detail::build_qm_program(target, l, basis, task != QMTask::certify, d, opt);
  if (!prog.comp.consistent) {
    throw NumericError("qm_sdp: target is not in the span of the level-" + std::to_string(opt.level) +
                       " products");
  }
  return prog.problem;
}

struct ViolationWitness {
  MatrixTuple x;
  double min_eigenvalue = 0.0;
};

struct ViolationBudget {
  int max_size = 4;
  int trials_per_size = 50;
};

/// Random hermitian search in hdom r cap D(L) for min-eig r(X) < -1e-9.
/// Points outside D(L) are pulled toward 0 (D(L) contains a neighborhood of 0).
inline std::optional<ViolationWitness> find_violation(const Expr& r, const MonicHermitianPencil& l,
                                                      const ViolationBudget& budget = {},
                                                      std::uint64_t seed = 0) {
  const int d = detail::common_d(r, l);
  std::uint64_t stream = 0;
  for (int n = 1; n <= budget.max_size; ++n) {
    for (int t = 0; t < budget.trials_per_size; ++t) {
      MatrixTuple x = random_tuple(d, n, n, SampleMode::hermitian, derive_seed(seed, stream++));
      int shrink = 0;
      while (!l.trivial() && !l.contains(x) && shrink < 30) {
        x = x.scaled(0.5);
        ++shrink;
      }
      if (!l.contains(x)) continue;
      try {
        const CMatrix v = eval_expr(r, x);
        const double lmin = min_eigenvalue(CMatrix(0.5 * (v + v.adjoint())));
        if (lmin < -1e-9) return ViolationWitness{x, lmin};
      } catch (const DomainError&) {
      }
    }
  }
  return std::nullopt;
}

enum class IdentityMode { hermitian, generic };

struct IdentityResult {
  bool pass = false;
  double max_residual = 0.0;
  int samples = 0;
  Eigen::Index first_failure_size = 0;
};

/// Compares lhs and rhs at hermitian samples (sizes cycling 1..max_size) in
/// their common domain, relative to 1e-8. Expressions parsed with
/// complex_variables already encode generic points as hermitian pairs.
inline IdentityResult check_identity(const Expr& lhs, const Expr& rhs, int samples = 100,
                                     std::uint64_t seed = 0, Eigen::Index max_size = 4,
                                     double tol = 1e-8) {
  const int d = std::max({lhs.max_variable(), rhs.max_variable(), 1});
  IdentityResult out;
  std::uint64_t stream = 0;
  for (int k = 0; out.samples < samples && k < samples * 20; ++k) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(out.samples) % max_size;
    const MatrixTuple x = random_tuple(d, n, n, SampleMode::hermitian, derive_seed(seed, stream++));
    try {
      ExprEvaluator ev(x);
      const CMatrix a = ev(lhs), b = ev(rhs);
      const double res = norm_max(a - b) / std::max({1.0, norm_max(a), norm_max(b)});
      out.max_residual = std::max(out.max_residual, res);
      if (res > tol && out.first_failure_size == 0) out.first_failure_size = n;
      ++out.samples;
    } catch (const DomainError&) {
    }
  }
  if (out.samples == 0) throw SamplingError("check_identity: no sample in the common domain");
  out.pass = out.max_residual <= tol;
  return out;
}

inline IdentityResult check_identity(const std::string& lhs, const std::string& rhs, IdentityMode mode,
                                     int d, int samples = 100, std::uint64_t seed = 0) {
  ParseOptions po;
  po.complex_variables = mode == IdentityMode::generic;
  return check_identity(parse(lhs, d, po), parse(rhs, d, po), samples, seed);
}

}  // namespace ncrat
