#include <gtest/gtest.h>

#include "ncrat/extension.hpp"

using namespace ncrat;

namespace {
MatrixTuple mat1(std::initializer_list<Complex> col, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  auto it = col.begin();
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = *it++;
  return MatrixTuple(rows, cols, {m});
}

HomogeneousPencil random_pencil(int e, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CMatrix> c;
  for (int j = 0; j < d; ++j) c.push_back(random_matrix(e, e, rng));
  return HomogeneousPencil(c);
}

double inv_sigma(const HomogeneousPencil& l, const MatrixTuple& x) {
  const RankInfo info = svd_rank(rect_eval(l, x));
  return info.rank == rect_eval(l, x).rows() ? info.sigma_min / info.sigma_max : 0.0;
}
}  // namespace

TEST(RemarkBound, Values) {
  EXPECT_EQ(remark_bound(1, 1, 1), 2);
  EXPECT_EQ(remark_bound(2, 1, 1), 28);
  EXPECT_EQ(remark_bound(1, 0, 1), 1);  // formula gives 0, clamped to m
  EXPECT_EQ(remark_bound(3, 2, 0), 2 * 2 * (3 * 2 - 2));
}

TEST(SideBound, Values) {
  // m = l: n1 = 0, e1 = me, n = (me-2)m
  EXPECT_EQ(side_bound(2, 2, 2), (4 - 2) * 2);
  EXPECT_EQ(side_bound(2, 1, 2), (6 - 2) * 2 + 1 * 5);
}

TEST(ExtendSide, ScalarPencil) {
  const HomogeneousPencil l({CMatrix::Ones(1, 1)});
  const MatrixTuple x = mat1({1.0, 0.0}, 2, 1);
  const SideExtension s = extend_side(l, x, 1);
  const MatrixTuple w = assemble_side(x, s);
  EXPECT_EQ(w.rows, 2 + s.n);
  EXPECT_TRUE(w.square());
  EXPECT_EQ(w[0](0, 0), Complex(1.0));
  EXPECT_EQ(w[0](1, 0), Complex(0.0));
  EXPECT_GT(inv_sigma(l, w), 1e-9);
}

TEST(ExtendSide, RankDeficientInput) {
  const HomogeneousPencil l({CMatrix::Ones(1, 1)});
  EXPECT_THROW(extend_side(l, mat1({0.0, 0.0}, 2, 1), 1), HypothesisError);
  EXPECT_THROW(extend_side(HomogeneousPencil({CMatrix::Zero(2, 2)}), mat1({1.0, 0.0}, 2, 1), 1),
               HypothesisError);
}

TEST(ExtendSide, RandomFullPencils) {
  for (std::uint64_t t = 0; t < 12; ++t) {
    const int e = 1 + t % 3;
    const HomogeneousPencil l = random_pencil(e, 2, derive_seed(100, t));
    const Eigen::Index m = 1 + t % 3, lc = 1 + (t / 3) % m;
    const MatrixTuple x = random_tuple(2, m, lc, SampleMode::generic, derive_seed(200, t));
    const SideExtension s = extend_side(l, x, derive_seed(300, t));
    const MatrixTuple w = assemble_side(x, s);
    EXPECT_GT(inv_sigma(l, w), 1e-9);
    EXPECT_LE(s.n, s.bound_used);
    // The certificate recomputes identically for the same seed.
    const SideExtension again = extend_side(l, x, derive_seed(300, t));
    EXPECT_EQ(again.n, s.n);
    EXPECT_EQ(again.sigma_min, s.sigma_min);
  }
}

TEST(ExtendSquare, SamplingScalarExample) {
  const HomogeneousPencil l({CMatrix::Ones(1, 1)});
  const MatrixTuple y = mat1({0.0}, 1, 1), one = mat1({1.0}, 1, 1);
  const SquareExtension s = extend_square(l, y, one, one, SquareMode::sampling, 4);
  EXPECT_EQ(s.n, 1);
  EXPECT_LE(s.n, s.bound_used);
  const MatrixTuple full = assemble_square(y, one, one, s.z);
  EXPECT_NEAR(std::abs(full[0].determinant()), 1.0, 1e-12);
}

TEST(ExtendSquare, BlocksScalarExample) {
  const HomogeneousPencil l({CMatrix::Ones(1, 1)});
  const MatrixTuple y = mat1({0.0}, 1, 1), one = mat1({1.0}, 1, 1);
  const SquareExtension s = extend_square(l, y, one, one, SquareMode::blocks, 4);
  ASSERT_TRUE(s.parts.has_value());
  EXPECT_GE(s.n, 1);
  EXPECT_GT(s.sigma_min, 0.0);
  EXPECT_GT(inv_sigma(l, assemble_square(y, one, one, s.z)), 1e-9);
}

TEST(ExtendSquare, HypothesisFailure) {
  const HomogeneousPencil l({CMatrix::Ones(1, 1)});
  const MatrixTuple zero = mat1({0.0}, 1, 1);
  EXPECT_THROW(extend_square(l, zero, zero, zero, SquareMode::sampling, 1), HypothesisError);
  EXPECT_THROW(extend_square(l, zero, zero, zero, SquareMode::blocks, 1), HypothesisError);
}

TEST(ExtendSquare, BlocksAssemblyAndEpsilonScaling) {
  for (std::uint64_t t = 0; t < 8; ++t) {
    const int e = 1 + t % 2;
    const HomogeneousPencil l = random_pencil(e, 2, derive_seed(11, t));
    const Eigen::Index lc = 1 + t % 2, m = 1 + (t / 2) % 2;
    const MatrixTuple y = random_tuple(2, lc, lc, SampleMode::generic, derive_seed(12, t));
    const MatrixTuple yp = random_tuple(2, m, lc, SampleMode::generic, derive_seed(13, t));
    const MatrixTuple ypp = random_tuple(2, lc, m, SampleMode::generic, derive_seed(14, t));
    const SquareExtension s = extend_square(l, y, yp, ypp, SquareMode::blocks, t);
    ASSERT_TRUE(s.parts.has_value());
    const BlockParts& p = *s.parts;
    EXPECT_EQ(s.n, 2 * m + lc + p.c1.rows + p.c2.cols);
    EXPECT_GT(inv_sigma(l, assemble_square(y, yp, ypp, s.z)), 1e-9);
    // The two one-sided completions are invertible.
    const MatrixTuple zero_l1 = MatrixTuple::zeros(2, p.c1.rows, lc);
    const MatrixTuple side1 =
        hstack(vstack(vstack(y, yp), zero_l1), vstack(vstack(p.a1, p.b1), p.c1));
    EXPECT_GT(inv_sigma(l, side1), 1e-9);
    for (double eps : {0.5, 1.0, 2.0}) {
      EXPECT_GT(inv_sigma(l, assemble_eps(y, yp, ypp, p, eps)), 1e-12) << "eps " << eps;
    }
  }
}

TEST(ExtendSquare, SamplingRandomWithinBound) {
  for (std::uint64_t t = 0; t < 12; ++t) {
    const int e = 1 + t % 3;
    const HomogeneousPencil l = random_pencil(e, 2, derive_seed(21, t));
    const Eigen::Index lc = 1 + t % 3, m = 1 + (t / 3) % 3;
    const MatrixTuple y = random_tuple(2, lc, lc, SampleMode::generic, derive_seed(22, t));
    const MatrixTuple yp = random_tuple(2, m, lc, SampleMode::generic, derive_seed(23, t));
    const MatrixTuple ypp = random_tuple(2, lc, m, SampleMode::generic, derive_seed(24, t));
    const SquareExtension s = extend_square(l, y, yp, ypp, SquareMode::sampling, t);
    EXPECT_GE(s.n, m);
    EXPECT_LE(s.n, remark_bound(e, lc, m));
    EXPECT_GT(inv_sigma(l, assemble_square(y, yp, ypp, s.z)), 1e-9);
  }
}

TEST(ExtendHermitian, AlreadyInDomain) {
  const Expr r = parse("inv(x1)", 1);
  const MatrixTuple x = mat1({1.0}, 1, 1);
  const HermitianExtension h = extend_hermitian(r, x, MatrixTuple::zeros(1, 0, 1), 3);
  EXPECT_EQ(h.n, 0);
  EXPECT_EQ(h.x_tilde[0], x[0]);
}

TEST(ExtendHermitian, SingularScalar) {
  const Expr r = parse("inv(x1)", 1);
  const MatrixTuple x = mat1({0.0}, 1, 1);
  const MatrixTuple y = mat1({1.0}, 1, 1);
  const HermitianExtension h = extend_hermitian(r, x, y, 5);
  ASSERT_GE(h.n, 1);
  const CMatrix& xt = h.x_tilde[0];
  EXPECT_EQ(xt(0, 0), Complex(0.0));
  EXPECT_EQ(hermitian_deviation(xt), 0.0);
  EXPECT_EQ(svd_rank(xt).rank, xt.rows());
  if (h.n == 1) {
    // det [[0, y*],[y, z]] = -|y|^2
    EXPECT_NEAR(xt.determinant().real(), -std::norm(xt(1, 0)), 1e-12);
  }
  // Z'_0 is positive definite and E inverts its Cholesky factor.
  EXPECT_GT(min_eigenvalue(h.z0_prime), 0.0);
  EXPECT_LT(norm_max(h.e * h.z0_prime * h.e.adjoint() - CMatrix::Identity(h.n, h.n)), 1e-10);
}

TEST(ExtendHermitian, StructureOnRandomInstances) {
  const char* exprs[] = {"inv(x1)", "inv(x1*x2+x2*x1)", "x1*inv(1+x2*x2)*x1", "inv(x1-x2)"};
  int k = 0;
  for (const char* text : exprs) {
    const Expr r = parse(text, 2);
    for (int t = 0; t < 3; ++t, ++k) {
      const Eigen::Index lc = 1 + t % 2, m = 1 + t;
      const MatrixTuple x = random_tuple(2, lc, lc, SampleMode::hermitian, derive_seed(31, k));
      const MatrixTuple y = random_tuple(2, m, lc, SampleMode::generic, derive_seed(32, k));
      const HermitianExtension h = extend_hermitian(r, x, y, derive_seed(33, k));
      EXPECT_GE(h.n, m);
      for (int j = 0; j < 2; ++j) {
        const CMatrix& xt = h.x_tilde[j];
        EXPECT_LE(hermitian_deviation(xt), 1e-12);
        EXPECT_TRUE(xt.topLeftCorner(lc, lc) == x[j]);
        CMatrix ypad = CMatrix::Zero(h.n, lc);
        ypad.topRows(m) = y[j];
        EXPECT_TRUE(xt.bottomLeftCorner(h.n, lc) == h.e * ypad);
      }
      EXPECT_TRUE(in_domain(r, h.x_tilde).in_domain) << text;
    }
  }
}

TEST(ExtendHermitian, RankConditionFailure) {
  // inv(x1) at X = 0 with Y = 0: the stacked evaluation loses rank.
  EXPECT_THROW(extend_hermitian(parse("inv(x1)", 1), mat1({0.0}, 1, 1), mat1({0.0}, 1, 1), 1),
               HypothesisError);
}

TEST(ExtendNonHermitian, Examples) {
  const Expr r = parse("inv(x1)", 1);
  const NonHermitianExtension ext = extend_nonhermitian(r, mat1({1.0, 0.0}, 2, 1), 2);
  EXPECT_EQ(ext.n, 2);
  EXPECT_EQ(ext.x_tilde[0](0, 0), Complex(1.0));
  EXPECT_EQ(ext.x_tilde[0](1, 0), Complex(0.0));
  EXPECT_EQ(svd_rank(ext.x_tilde[0]).rank, 2);
  EXPECT_THROW(extend_nonhermitian(r, mat1({0.0, 0.0}, 2, 1), 2), HypothesisError);
}

TEST(ExtendNonHermitian, RandomExpressions) {
  const char* exprs[] = {"inv(x1)*x2", "inv(1+x1*x2)", "inv(x1*x2-x2*x1)", "x1+inv(x2)"};
  int k = 0;
  for (const char* text : exprs) {
    const Expr r = parse(text, 2);
    for (int t = 0; t < 3; ++t, ++k) {
      const Eigen::Index m = 2 + t, lc = 1 + t % 2;
      const MatrixTuple x = random_tuple(2, m, lc, SampleMode::generic, derive_seed(41, k));
      const NonHermitianExtension ext = extend_nonhermitian(r, x, derive_seed(42, k));
      EXPECT_GE(ext.n, m);
      for (int j = 0; j < 2; ++j) {
        EXPECT_TRUE(ext.x_tilde[j].block(0, 0, m, lc) == x[j]);
        EXPECT_EQ(norm_max(ext.x_tilde[j].block(m, 0, ext.n - m, lc)), 0.0);
      }
      EXPECT_TRUE(in_domain(r, ext.x_tilde).in_domain) << text;
    }
  }
}
