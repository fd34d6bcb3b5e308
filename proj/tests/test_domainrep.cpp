#include <gtest/gtest.h>

#include "ncrat/domainrep.hpp"
#include "test_support.hpp"

using namespace ncrat;

namespace {
Expr x(int j) { return Expr::variable(j); }

CMatrix unit(Eigen::Index i, Eigen::Index j) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(i, j) = 1.0;
  return m;
}

LinearRep block2x2() {
  LinearRep rep;
  rep.u = CVector::Unit(2, 1);
  rep.v = CVector::Unit(2, 1);
  rep.pencil = AffinePencil({CMatrix::Zero(2, 2), unit(0, 0), unit(0, 1), unit(1, 0), unit(1, 1)});
  return rep;
}

MatrixTuple scalars(std::vector<double> v) {
  std::vector<CMatrix> m;
  for (double a : v) m.push_back(CMatrix::Constant(1, 1, a));
  return MatrixTuple(1, 1, std::move(m));
}
}  // namespace

TEST(SchurInverse, BaseCase) {
  const ExprMatrix s = schur_inverse_rep(ExprMatrix(1, 1, {x(1)}));
  EXPECT_EQ(s(0, 0), Expr::inverse(x(1)));
}

TEST(SchurInverse, Identity) {
  for (std::size_t e : {1u, 2u, 3u}) {
    const ExprMatrix s = schur_inverse_rep(ExprMatrix::identity(e));
    for (std::size_t i = 0; i < e; ++i)
      for (std::size_t j = 0; j < e; ++j) EXPECT_EQ(s(i, j), Expr::scalar(i == j ? 1.0 : 0.0));
  }
}

TEST(SchurInverse, TwoByTwoIsTheInverse) {
  const ExprMatrix m(2, 2, {x(1), x(2), x(3), x(4)});
  const ExprMatrix s = schur_inverse_rep(m);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const Eigen::Index n = 1 + t % 3;
    const MatrixTuple pt = random_tuple(4, n, n, SampleMode::hermitian, derive_seed(3, t));
    const CMatrix mv = eval_matrix(m, pt);
    const CMatrix sv = eval_matrix(s, pt);
    EXPECT_LT(norm_max(sv * mv - CMatrix::Identity(2 * n, 2 * n)), 1e-8);
    ++checked;
  }
  EXPECT_EQ(checked, 40);
}

TEST(SchurInverse, SchurComplementMatchesClosedForm) {
  // The recursion's complement of x1^2+x3^2 in m^* m.
  const Expr closed = parse("x2*x2+x4*x4-(x2*x1+x4*x3)*inv(x1*x1+x3*x3)*(x1*x2+x3*x4)", 4);
  const ExprMatrix m(2, 2, {x(1), x(2), x(3), x(4)});
  const ExprMatrix s = schur_inverse_rep(m);
  // s(1,1) = inv(complement) * x4 + ... ; compare the inverse of the
  // complement with the closed form through (m^*m)^{-1}_{22}.
  for (int t = 0; t < 10; ++t) {
    const MatrixTuple pt = random_tuple(4, 2, 2, SampleMode::hermitian, derive_seed(5, t));
    const CMatrix mv = eval_matrix(m, pt);
    const CMatrix pinv = (mv.adjoint() * mv).inverse();
    EXPECT_LT(test_util::rel_err(pinv.bottomRightCorner(2, 2), eval_expr(closed, pt).inverse()),
              1e-8);
  }
}

TEST(SchurInverse, RejectsSingular) {
  const ExprMatrix m(2, 2, {x(1), x(2), x(1), x(2)});
  EXPECT_THROW(schur_inverse_rep(m), NotInvertibleError);
  EXPECT_THROW(schur_inverse_rep(ExprMatrix(2, 1)), ShapeError);
}

TEST(WidenHdom, BlockExample) {
  const Expr r = parse("inv(x4 - x3*inv(x1)*x2)", 4);
  const WidenResult w = widen_hdom(r, block2x2());
  const MatrixTuple pt = scalars({0, 1, 1, 1});
  EXPECT_THROW(eval_expr(r, pt), DomainError);
  const CMatrix val = eval_expr(w.expr, pt);
  // entry (2,2) of inv([[0,1],[1,1]]) = [[-1,1],[1,0]]
  EXPECT_LE(std::abs(val(0, 0)), 1e-10);
  EXPECT_GT(w.dag_nodes, 0u);
}

TEST(WidenHdom, BlockExampleAgreesOnDomain) {
  const Expr r = parse("inv(x4 - x3*inv(x1)*x2)", 4);
  const WidenResult w = widen_hdom(r, block2x2());
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index n = 1 + t % 3;
    const MatrixTuple pt = random_tuple(4, n, n, SampleMode::hermitian, derive_seed(9, t));
    EXPECT_LT(test_util::rel_err(eval_expr(w.expr, pt), eval_expr(r, pt)), 1e-8);
  }
}

TEST(WidenHdom, InverseOfVariable) {
  const Expr r = parse("inv(x1)", 1);
  const WidenResult w = widen_hdom(r);
  for (int t = 0; t < 20; ++t) {
    const MatrixTuple pt = random_tuple(1, 2, 2, SampleMode::hermitian, derive_seed(13, t));
    EXPECT_LT(test_util::rel_err(eval_expr(w.expr, pt), eval_expr(r, pt)), 1e-8);
  }
  EXPECT_FALSE(eval_defined(w.expr, scalars({0})));
}

// Same function on hdom r, and no hermitian domain loss.
TEST(WidenHdom, SameFunctionNoDomainLoss) {
  const char* corpus[] = {"inv(x1)*x2", "inv(1+x1*x1)", "x1*inv(x2)*x1", "inv(x1+x2)",
                          "inv(2-x1)"};
  for (const char* text : corpus) {
    const Expr r = parse(text, 2);
    const WidenResult w = widen_hdom(r);
    int agreed = 0;
    for (int t = 0; agreed < 100 && t < 400; ++t) {
      const Eigen::Index n = 1 + t % 3;
      const MatrixTuple pt = random_tuple(2, n, n, SampleMode::hermitian, derive_seed(17, t));
      CMatrix rv;
      try {
        rv = eval_expr(r, pt);
      } catch (const DomainError&) {
        continue;
      }
      CMatrix wv;
      ASSERT_NO_THROW(wv = eval_expr(w.expr, pt)) << text;
      EXPECT_LT(test_util::rel_err(wv, rv), 1e-8) << text;
      ++agreed;
    }
    EXPECT_EQ(agreed, 100) << text;
  }
}

TEST(PencilToExprMatrix, EvaluatesLikeThePencil) {
  const Realization rep = build_realization(parse("inv(1+x1*x2)", 2));
  const ExprMatrix m = pencil_to_expr_matrix(rep.pencil);
  const MatrixTuple pt = random_tuple(2, 2, 2, SampleMode::generic, 3);
  EXPECT_LT(norm_max(eval_matrix(m, pt) - pencil_eval(rep.pencil, pt)), 1e-13);
}
