#include <gtest/gtest.h>

#include "ncrat/pencil.hpp"

using namespace ncrat;

namespace {
CMatrix unit(Eigen::Index e, Eigen::Index i, Eigen::Index j) {
  CMatrix m = CMatrix::Zero(e, e);
  m(i, j) = 1.0;
  return m;
}
}  // namespace

TEST(RectEval, Examples) {
  const HomogeneousPencil l({CMatrix::Ones(1, 1)});
  CMatrix x(2, 1);
  x << 1, 0;
  EXPECT_EQ(rect_eval(l, MatrixTuple(2, 1, {x})), x);

  const HomogeneousPencil id({CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)});
  EXPECT_EQ(norm_max(rect_eval(id, MatrixTuple::zeros(2, 3, 2))), 0.0);
  EXPECT_EQ(rect_eval(id, MatrixTuple::zeros(2, 3, 2)).rows(), 6);
}

TEST(RectEval, MatchesKron) {
  Rng rng(3);
  std::vector<CMatrix> c{random_matrix(3, 3, rng), random_matrix(3, 3, rng)};
  const HomogeneousPencil l(c);
  const MatrixTuple x = random_tuple(2, 2, 4, SampleMode::generic, 5);
  const CMatrix expected = kron(c[0], x[0]) + kron(c[1], x[1]);
  EXPECT_LT(norm_max(rect_eval(l, x) - expected), 1e-14);
}

TEST(IsFull, IdenticalRowsNotFull) {
  const HomogeneousPencil l({unit(2, 0, 0) + unit(2, 1, 0), unit(2, 0, 1) + unit(2, 1, 1)});
  const FullnessReport r = is_full(l, 10, 1);
  EXPECT_EQ(r.verdict, FullnessVerdict::not_full_probabilistic);
  EXPECT_EQ(r.trials_used, 10);
  EXPECT_FALSE(r.witness.has_value());
}

TEST(IsFull, GenericTwoByTwo) {
  const HomogeneousPencil l({unit(2, 0, 0), unit(2, 0, 1), unit(2, 1, 0), unit(2, 1, 1)});
  const FullnessReport r = is_full(l, 10, 1);
  EXPECT_EQ(r.verdict, FullnessVerdict::full);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.witness->rows, 1);
  EXPECT_GT(r.witness_sigma_min, 0.0);
  // X = (1, 0, 0, 1) is a witness too.
  const MatrixTuple w(1, 1, {CMatrix::Ones(1, 1), CMatrix::Zero(1, 1), CMatrix::Zero(1, 1),
                             CMatrix::Ones(1, 1)});
  EXPECT_EQ(svd_rank(rect_eval(l, w)).rank, 2);
}

TEST(IsFull, ScalarPencil) {
  const FullnessReport r = is_full(HomogeneousPencil({CMatrix::Ones(1, 1)}), 3, 2);
  EXPECT_EQ(r.verdict, FullnessVerdict::full);
  EXPECT_EQ(r.sizes_probed, std::vector<Eigen::Index>{1});
}

TEST(IsFull, Degenerate) {
  EXPECT_EQ(is_full(HomogeneousPencil({CMatrix::Zero(2, 2)}), 3, 1).verdict,
            FullnessVerdict::degenerate);
  EXPECT_THROW(is_full(HomogeneousPencil({CMatrix::Ones(1, 1)}), 0, 1), std::invalid_argument);
}

TEST(IsFull, AffinePencil) {
  // 1 - x1 x2 style pencil [[1, x1],[x2, 1]] is full.
  const AffinePencil m({CMatrix::Identity(2, 2), unit(2, 0, 1), unit(2, 1, 0)});
  EXPECT_EQ(is_full(m, 5, 3).verdict, FullnessVerdict::full);
}

TEST(IsFull, InvariantUnderBasisChange) {
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const int e = 2 + t % 3;
    std::vector<CMatrix> c;
    for (int j = 0; j < 3; ++j) c.push_back(random_matrix(e, e, rng));
    if (t % 2 == 1) {
      // make the pencil not full: all coefficients share a zero last row
      for (auto& m : c) m.row(e - 1).setZero();
    }
    const CMatrix u = random_matrix(e, e, rng), v = random_matrix(e, e, rng);
    std::vector<CMatrix> cc;
    for (const auto& m : c) cc.push_back(u * m * v);
    const auto a = is_full(HomogeneousPencil(c), 8, derive_seed(5, t)).verdict;
    const auto b = is_full(HomogeneousPencil(cc), 8, derive_seed(6, t)).verdict;
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, t % 2 == 1 ? FullnessVerdict::not_full_probabilistic : FullnessVerdict::full);
  }
}

TEST(IsFull, StableAcrossSeeds) {
  Rng rng(13);
  std::vector<CMatrix> c;
  for (int j = 0; j < 2; ++j) c.push_back(random_matrix(4, 4, rng));
  const HomogeneousPencil l(c);
  for (std::uint64_t s = 0; s < 10; ++s) EXPECT_EQ(is_full(l, 3, s).verdict, FullnessVerdict::full);
}

TEST(RankConditions, Examples) {
  const HomogeneousPencil l({CMatrix::Ones(1, 1)});
  const MatrixTuple y(1, 1, {CMatrix::Zero(1, 1)});
  const MatrixTuple one(1, 1, {CMatrix::Ones(1, 1)});
  RankConditions rc = rank_conditions(l, y, one, one);
  EXPECT_TRUE(rc.column_full);
  EXPECT_TRUE(rc.row_full);
  rc = rank_conditions(l, y, y, y);
  EXPECT_FALSE(rc.column_full);
  EXPECT_FALSE(rc.row_full);
}

TEST(RankConditions, RandomInstance) {
  Rng rng(17);
  const HomogeneousPencil l({random_matrix(2, 2, rng), random_matrix(2, 2, rng)});
  const MatrixTuple y = random_tuple(2, 2, 2, SampleMode::generic, 1);
  const MatrixTuple yp = random_tuple(2, 3, 2, SampleMode::generic, 2);
  const MatrixTuple ypp = random_tuple(2, 2, 3, SampleMode::generic, 3);
  const RankConditions rc = rank_conditions(l, y, yp, ypp);
  EXPECT_TRUE(rc.column_full);
  EXPECT_TRUE(rc.row_full);
  EXPECT_THROW(rank_conditions(l, y, ypp, yp), ShapeError);
}
