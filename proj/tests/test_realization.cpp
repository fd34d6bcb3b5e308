#include <gtest/gtest.h>

#include "ncrat/realization.hpp"
#include "test_support.hpp"

using namespace ncrat;

namespace {
MatrixTuple tuple1(std::vector<CMatrix> m) {
  const auto r = m[0].rows(), c = m[0].cols();
  return MatrixTuple(r, c, std::move(m));
}
CMatrix scalar(Complex z) { return CMatrix::Constant(1, 1, z); }
}  // namespace

TEST(BuildRealization, Variable) {
  const Realization rep = build_realization(parse("x1", 1));
  EXPECT_EQ(rep.size(), 2);
  EXPECT_LT(std::abs(realization_eval(rep, tuple1({scalar(5.0)}))(0, 0) - 5.0), 1e-14);
}

TEST(BuildRealization, InverseAtZero) {
  const Realization rep = build_realization(parse("inv(2+x1)", 1));
  EXPECT_EQ(rep.size(), 4);
  EXPECT_LT(std::abs(realization_eval(rep, tuple1({scalar(0.0)}))(0, 0) - 0.5), 1e-14);
}

TEST(BuildRealization, DiagonalProduct) {
  const Realization rep = build_realization(parse("x1*x2", 2));
  CMatrix a = CMatrix::Zero(2, 2), b = CMatrix::Zero(2, 2);
  a.diagonal() << 1, 2;
  b.diagonal() << 3, 4;
  CMatrix expected = CMatrix::Zero(2, 2);
  expected.diagonal() << 3, 8;
  EXPECT_LT(norm_max(realization_eval(rep, MatrixTuple(2, 2, {a, b})) - expected), 1e-13);
}

TEST(BuildRealization, SizesAreAdditive) {
  Rng rng(41);
  for (int t = 0; t < 100; ++t) {
    const Expr a = test_util::random_expr(rng, 4, 3);
    const Expr b = test_util::random_expr(rng, 4, 3);
    const auto ea = build_realization(a, 3).size(), eb = build_realization(b, 3).size();
    EXPECT_EQ(build_realization(Expr::sum(a, b), 3).size(), ea + eb);
    EXPECT_EQ(build_realization(Expr::product(a, b), 3).size(), ea + eb);
    EXPECT_EQ(build_realization(Expr::inverse(a), 3).size(), ea + 1);
  }
}

TEST(PencilEval, Examples) {
  AffinePencil m({CMatrix::Zero(1, 1), CMatrix::Ones(1, 1)});
  CMatrix n(2, 2);
  n << 0, 1, 0, 0;
  EXPECT_EQ(pencil_eval(m, tuple1({n})), n);

  AffinePencil id({CMatrix::Identity(2, 2), CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)});
  const MatrixTuple x = random_tuple(2, 3, 3, SampleMode::generic, 1);
  EXPECT_EQ(pencil_eval(id, x), CMatrix(CMatrix::Identity(6, 6)));

  CMatrix m1 = CMatrix::Zero(2, 2);
  m1(0, 1) = -1.0;
  AffinePencil v({CMatrix::Identity(2, 2), m1});
  CMatrix expected(2, 2);
  expected << 1, -2, 0, 1;
  EXPECT_EQ(pencil_eval(v, tuple1({scalar(2.0)})), expected);
}

TEST(PencilEval, RectangularNeedsZeroConstant) {
  AffinePencil m({CMatrix::Identity(1, 1), CMatrix::Ones(1, 1)});
  EXPECT_THROW(pencil_eval(m, random_tuple(1, 2, 1, SampleMode::generic, 1)), ShapeError);
}

TEST(EvalExpr, MotivatingFunctionAtOnes) {
  const Expr r = parse("x3*x3+x4*x4-(x3*x1+x4*x2)*inv(x1*x1+x2*x2)*(x1*x3+x2*x4)", 4);
  const MatrixTuple ones(1, 1, std::vector<CMatrix>(4, scalar(1.0)));
  // 1+1 - (1+1)(2)^{-1}(1+1) = 0
  EXPECT_LT(std::abs(eval_expr(r, ones)(0, 0)), 1e-14);
}

TEST(EvalExpr, DomainErrorNamesSubexpression) {
  try {
    eval_expr(parse("x2 + inv(x1)", 2), MatrixTuple(1, 1, {scalar(0.0), scalar(1.0)}));
    FAIL() << "expected DomainError";
  } catch (const DomainError& err) {
    EXPECT_EQ(err.subexpression(), "inv(x1)");
    EXPECT_EQ(err.sigma_min(), 0.0);
  }
}

TEST(EvalExpr, DirectSumCompatible) {
  Rng rng(43);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const Expr r = test_util::random_expr(rng, 4, 2);
    const MatrixTuple a = random_tuple(2, 2, 2, SampleMode::generic, derive_seed(7, t));
    const MatrixTuple b = random_tuple(2, 3, 3, SampleMode::generic, derive_seed(8, t));
    try {
      const CMatrix ra = eval_expr(r, a), rb = eval_expr(r, b);
      const CMatrix rab = eval_expr(r, direct_sum(a, b));
      EXPECT_LT(test_util::rel_err(rab, direct_sum(ra, rb)), 1e-8) << print(r);
      ++checked;
    } catch (const DomainError&) {
    }
  }
  EXPECT_GT(checked, 50);
}

// Property (i): the realization computes the tree evaluation wherever the
// tree is defined. Property (ii) as used here: in_domain implies the tree
// evaluates.
TEST(Realization, AgreesWithTreeEvaluation) {
  Rng rng(47);
  int compared = 0;
  for (int t = 0; t < 220; ++t) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 3);
    const Expr r = test_util::random_expr(rng, 5, d);
    const Realization rep = build_realization(r, d);
    for (int k = 0; k < 5; ++k) {
      const Eigen::Index n = 1 + (k % 3);
      const MatrixTuple x =
          random_tuple(d, n, n, SampleMode::generic, derive_seed(1000 + t, k));
      CMatrix tree;
      try {
        tree = eval_expr(r, x);
      } catch (const DomainError&) {
        EXPECT_FALSE(in_domain(rep, x).in_domain);
        continue;
      }
      const double cond = svd_rank(pencil_eval(rep.pencil, x)).sigma_min;
      if (cond < 1e-6) continue;  // ill-conditioned sample, not a check of the identity
      const CMatrix via = realization_eval(rep, x);
      EXPECT_LE(norm_max(via - tree), 1e-8 * (1.0 + norm_max(tree))) << print(r);
      EXPECT_TRUE(in_domain(rep, x).in_domain);
      ++compared;
    }
  }
  EXPECT_GT(compared, 600);
}

TEST(InDomain, Examples) {
  EXPECT_TRUE(in_domain(parse("inv(x1)", 1), MatrixTuple(2, 2, {CMatrix::Identity(2, 2)})).in_domain);
  const DomainCertificate c = in_domain(parse("inv(x1)", 1), MatrixTuple(1, 1, {scalar(0.0)}));
  EXPECT_FALSE(c.in_domain);
  EXPECT_FALSE(c.pencil_invertible);
  const Expr comm = parse("inv(x1*x2-x2*x1)", 2);
  for (int t = 0; t < 10; ++t) {
    EXPECT_FALSE(in_domain(comm, random_tuple(2, 1, 1, SampleMode::generic, t)).in_domain);
  }
}

TEST(InDomain, NestedInverseCrossCheck) {
  // The bordered pencil of inv(inv(x1)) is invertible at 0 although the
  // inner inverse is not defined; the tree cross-check catches this.
  const Expr r = parse("inv(inv(x1))", 1);
  const DomainCertificate c = in_domain(r, MatrixTuple(1, 1, {scalar(0.0)}));
  EXPECT_TRUE(c.pencil_invertible);
  ASSERT_TRUE(c.tree_defined.has_value());
  EXPECT_FALSE(*c.tree_defined);
  EXPECT_FALSE(c.in_domain);
}

TEST(ProbeDegenerate, DetectsEmptyDomain) {
  EXPECT_TRUE(probe_degenerate(parse("inv(x1-x1)", 1), 1, 3).likely_degenerate);
  const DegeneracyProbe ok = probe_degenerate(parse("inv(x1)", 1), 1, 3);
  EXPECT_FALSE(ok.likely_degenerate);
  EXPECT_TRUE(ok.witness.has_value());
}
