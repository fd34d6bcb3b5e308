#pragma once

// Dense complex linear algebra and seeded random matrix tuples.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ncrat {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kDefaultRankTol = 1e-9;
inline constexpr double kDefaultPivotTol = 1e-13;

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericError {
 public:
  SingularMatrixError(const std::string& what, double pivot)
      : NumericError(what), pivot_(pivot) {}
  double pivot() const { return pivot_; }

 private:
  double pivot_;
};

class NotPositiveDefiniteError : public NumericError {
 public:
  NotPositiveDefiniteError(const std::string& what, double min_eigenvalue)
      : NumericError(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline double norm_max(const CMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline double norm_fro(const CMatrix& a) { return a.norm(); }

inline Eigen::VectorXd singular_values(const CMatrix& a) {
  if (a.size() == 0) return Eigen::VectorXd();
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues();
}

/// Spectral norm.
inline double norm_2(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  return singular_values(a)(0);
}

/// A^{-1} B by LU with partial pivoting. Throws SingularMatrixError when a
/// pivot falls below pivot_tol * ||A||_max.
inline CMatrix lu_solve(const CMatrix& a, const CMatrix& b,
                        double pivot_tol = kDefaultPivotTol) {
  if (a.rows() != a.cols()) throw ShapeError("lu_solve: matrix is not square");
  if (a.rows() != b.rows()) throw ShapeError("lu_solve: row count mismatch");
  if (a.rows() == 0) return CMatrix(0, b.cols());
  const double scale = norm_max(a);
  Eigen::PartialPivLU<CMatrix> lu(a);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (scale == 0.0 || min_pivot < pivot_tol * scale) {
    throw SingularMatrixError("lu_solve: singular matrix (pivot " +
                                  std::to_string(min_pivot) + ")",
                              min_pivot);
  }
  return lu.solve(b);
}

struct RankInfo {
  int rank = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Numerical rank: number of singular values above tol * sigma_max.
/// sigma_min is the smallest of the min(rows, cols) singular values.
inline RankInfo svd_rank(const CMatrix& a, double tol = kDefaultRankTol) {
  RankInfo info;
  if (a.size() == 0) return info;
  const Eigen::VectorXd s = singular_values(a);
  info.sigma_max = s(0);
  info.sigma_min = s(s.size() - 1);
  if (info.sigma_max == 0.0) return info;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * info.sigma_max) ++info.rank;
  }
  return info;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline CMatrix direct_sum(const CMatrix& a, const CMatrix& b) {
  CMatrix out = CMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline double hermitian_deviation(const CMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return norm_max(a - a.adjoint());
}

struct HermitianEig {
  Eigen::VectorXd values;  // ascending
  CMatrix vectors;         // columns
};

/// Eigendecomposition of the hermitian part of `a`.
inline HermitianEig hermitian_eig(const CMatrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("hermitian_eig: not square");
  HermitianEig out;
  if (a.rows() == 0) return out;
  const CMatrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

inline double min_eigenvalue(const CMatrix& a) {
  if (a.rows() == 0) return std::numeric_limits<double>::infinity();
  return hermitian_eig(a).values(0);
}

/// Lower Cholesky factor. Throws NotPositiveDefiniteError reporting the
/// smallest eigenvalue when `a` is not positive definite.
inline CMatrix cholesky(const CMatrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("cholesky: not square");
  if (a.rows() == 0) return CMatrix(0, 0);
  const CMatrix h = 0.5 * (a + a.adjoint());
  Eigen::LLT<CMatrix> llt(h);
  if (llt.info() != Eigen::Success) {
    const double lam = min_eigenvalue(h);
    throw NotPositiveDefiniteError(
        "cholesky: matrix not positive definite (min eigenvalue " +
            std::to_string(lam) + ")",
        lam);
  }
  const CMatrix l = llt.matrixL();
  if (l.diagonal().real().minCoeff() <= 0.0) {
    const double lam = min_eigenvalue(h);
    throw NotPositiveDefiniteError("cholesky: matrix not positive definite",
                                   lam);
  }
  return l;
}

// ---------------------------------------------------------------------------
// Random generation

/// Seedable generator. The uniform stream is std::mt19937_64 (its output
/// sequence is fixed by the standard); uniforms take the top 53 bits and
/// normals use the Box-Muller transform, so streams are bit-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Standard complex Gaussian: E|z|^2 = 1.
  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer; derives independent per-trial seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.complex_normal();
  return m;
}

inline CMatrix random_hermitian(Eigen::Index n, Rng& rng) {
  const CMatrix g = random_matrix(n, n, rng);
  return 0.5 * (g + g.adjoint());
}

inline CMatrix random_real_symmetric(Eigen::Index n, Rng& rng) {
  CMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  return 0.5 * (g + g.transpose());
}

enum class SampleMode { generic, hermitian, real_symmetric };

inline std::string to_string(SampleMode mode) {
  switch (mode) {
    case SampleMode::generic: return "generic";
    case SampleMode::hermitian: return "hermitian";
    case SampleMode::real_symmetric: return "real-symmetric";
  }
  return "generic";
}

inline SampleMode sample_mode_from_string(const std::string& s) {
  if (s == "generic") return SampleMode::generic;
  if (s == "hermitian") return SampleMode::hermitian;
  if (s == "real-symmetric" || s == "real_symmetric") {
    return SampleMode::real_symmetric;
  }
  throw std::invalid_argument("unknown sample mode: " + s);
}

/// A d-tuple of equally shaped complex matrices.
struct MatrixTuple {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<CMatrix> mats;
  bool hermitian = false;
  bool real_symmetric = false;

  MatrixTuple() = default;
  MatrixTuple(Eigen::Index r, Eigen::Index c, std::vector<CMatrix> m)
      : rows(r), cols(c), mats(std::move(m)) {
    for (const auto& x : mats) {
      if (x.rows() != rows || x.cols() != cols) {
        throw ShapeError("MatrixTuple: inconsistent matrix shapes");
      }
    }
  }

  int d() const { return static_cast<int>(mats.size()); }
  bool square() const { return rows == cols; }
  const CMatrix& operator[](std::size_t j) const { return mats[j]; }
  CMatrix& operator[](std::size_t j) { return mats[j]; }

  static MatrixTuple zeros(int d, Eigen::Index rows, Eigen::Index cols) {
    return MatrixTuple(rows, cols,
                       std::vector<CMatrix>(d, CMatrix::Zero(rows, cols)));
  }

  /// Recomputes the hermitian / real-symmetric flags from the data.
  MatrixTuple& refresh_flags(double tol = 1e-12) {
    hermitian = rows == cols;
    real_symmetric = hermitian;
    for (const auto& x : mats) {
      if (hermitian_deviation(x) > tol) hermitian = false;
      if (x.size() > 0 && x.imag().cwiseAbs().maxCoeff() > tol) {
        real_symmetric = false;
      }
    }
    real_symmetric = real_symmetric && hermitian;
    return *this;
  }

  MatrixTuple adjoint() const {
    std::vector<CMatrix> out;
    out.reserve(mats.size());
    for (const auto& x : mats) out.push_back(x.adjoint());
    MatrixTuple t(cols, rows, std::move(out));
    t.hermitian = hermitian;
    t.real_symmetric = real_symmetric;
    return t;
  }

  MatrixTuple scaled(double s) const {
    MatrixTuple t = *this;
    for (auto& x : t.mats) x *= s;
    return t;
  }
};

inline MatrixTuple direct_sum(const MatrixTuple& a, const MatrixTuple& b) {
  if (a.d() != b.d()) throw ShapeError("direct_sum: tuple lengths differ");
  std::vector<CMatrix> out;
  for (int j = 0; j < a.d(); ++j) out.push_back(direct_sum(a[j], b[j]));
  MatrixTuple t(a.rows + b.rows, a.cols + b.cols, std::move(out));
  t.hermitian = a.hermitian && b.hermitian;
  t.real_symmetric = a.real_symmetric && b.real_symmetric;
  return t;
}

/// Stacks two tuples vertically: [top; bottom].
inline MatrixTuple vstack(const MatrixTuple& top, const MatrixTuple& bottom) {
  if (top.d() != bottom.d() || top.cols != bottom.cols) {
    throw ShapeError("vstack: incompatible tuples");
  }
  std::vector<CMatrix> out;
  for (int j = 0; j < top.d(); ++j) {
    CMatrix m(top.rows + bottom.rows, top.cols);
    m << top[j], bottom[j];
    out.push_back(std::move(m));
  }
  return MatrixTuple(top.rows + bottom.rows, top.cols, std::move(out));
}

/// Concatenates two tuples horizontally: [left right].
inline MatrixTuple hstack(const MatrixTuple& left, const MatrixTuple& right) {
  if (left.d() != right.d() || left.rows != right.rows) {
    throw ShapeError("hstack: incompatible tuples");
  }
  std::vector<CMatrix> out;
  for (int j = 0; j < left.d(); ++j) {
    CMatrix m(left.rows, left.cols + right.cols);
    m << left[j], right[j];
    out.push_back(std::move(m));
  }
  return MatrixTuple(left.rows, left.cols + right.cols, std::move(out));
}

/// i.i.d. standard complex Gaussian entries; hermitian mode returns
/// (G + G^*)/2, real-symmetric mode does the same with a real G.
inline MatrixTuple random_tuple(int d, Eigen::Index rows, Eigen::Index cols,
                                SampleMode mode, std::uint64_t seed) {
  if (mode != SampleMode::generic && rows != cols) {
    throw ShapeError("random_tuple: hermitian sampling needs square shape");
  }
  Rng rng(seed);
  std::vector<CMatrix> mats;
  mats.reserve(d);
  for (int j = 0; j < d; ++j) {
    switch (mode) {
      case SampleMode::generic:
        mats.push_back(random_matrix(rows, cols, rng));
        break;
      case SampleMode::hermitian:
        mats.push_back(random_hermitian(rows, rng));
        break;
      case SampleMode::real_symmetric:
        mats.push_back(random_real_symmetric(rows, rng));
        break;
    }
  }
  MatrixTuple t(rows, cols, std::move(mats));
  t.hermitian = mode != SampleMode::generic;
  t.real_symmetric = mode == SampleMode::real_symmetric;
  return t;
}

}  // namespace ncrat
