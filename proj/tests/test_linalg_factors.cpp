#include "mbfgs/linalg_factors.hpp"
#include "mbfgs/verify.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mbfgs;

namespace {

Vector vec2(double a, double b)
{
    return (Vector(2) << a, b).finished();
}

Matrix lower_factor_of_gram(const Matrix& columns_oldest_first)
{
    return Eigen::LLT<Matrix>(oracle::newest_first_gram(columns_oldest_first)).matrixL();
}

// Grow a factor one column at a time through gram_append.
GramCholesky append_all(const Matrix& columns)
{
    GramCholesky chol;
    for (Index c = 0; c < columns.cols(); ++c) {
        auto res = gram_append(chol, columns.leftCols(c), columns.col(c));
        EXPECT_EQ(res.report.kind, DependenceKind::Independent);
        chol = res.chol;
    }
    return chol;
}

} // namespace

TEST(RankOneDowndate, ZeroVectorLeavesFactorUnchanged)
{
    const auto out = rank_one_downdate(Matrix::Identity(2, 2), Vector::Zero(2), 1e-8);
    ASSERT_TRUE(std::holds_alternative<DowndateSuccess>(out));
    EXPECT_TRUE(std::get<DowndateSuccess>(out).factor.isIdentity(0.0));
}

TEST(RankOneDowndate, RankOneGramMinusItselfBreaksDownAtFirstIndex)
{
    const double norm_s = 2.5;
    const auto out = rank_one_downdate(Matrix::Constant(1, 1, norm_s), Vector::Constant(1, norm_s), 1e-8 * norm_s);
    ASSERT_TRUE(std::holds_alternative<DowndateBreakdown>(out));
    const auto& brk = std::get<DowndateBreakdown>(out);
    EXPECT_EQ(brk.index, 1);
    EXPECT_EQ(brk.leading.rows(), 0);
    EXPECT_EQ(brk.row.size(), 0);
}

TEST(RankOneDowndate, SuccessReproducesDowndatedProduct)
{
    InstanceGenerator gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix cols = gen.gaussian(9, 5);
        const Matrix L = lower_factor_of_gram(cols);
        // A small v keeps L L^T - v v^T safely positive definite.
        const Vector v = 0.3 * oracle::min_eigenvalue(L * L.transpose()) * gen.gaussian(5).normalized();
        const auto out = rank_one_downdate(L, v, 1e-8);
        ASSERT_TRUE(std::holds_alternative<DowndateSuccess>(out));
        const Matrix& M = std::get<DowndateSuccess>(out).factor;
        EXPECT_TRUE(M.isLowerTriangular());
        EXPECT_LE(oracle::rel_diff(M * M.transpose(), L * L.transpose() - v * v.transpose()), 1e-10);
        EXPECT_GT(M.diagonal().minCoeff(), 0.0);
    }
}

TEST(RankOneDowndate, BreakdownIndexMatchesEigenvalueOracle)
{
    InstanceGenerator gen(5);
    for (int k = 1; k <= 4; ++k) {
        // Stored columns oldest-first; newest-first column c is cols.col(3 - c).
        const Matrix cols = gen.gaussian(8, 4);
        Vector s_new = Vector::Zero(8);
        for (int c = 0; c < k; ++c)
            s_new += gen.uniform(0.5, 2.0) * cols.col(3 - c);
        const double mu = s_new.norm();
        Vector zeta(4);
        for (int c = 0; c < 4; ++c)
            zeta(c) = cols.col(3 - c).dot(s_new) / mu;

        const Matrix L = lower_factor_of_gram(cols);
        const Matrix D = L * L.transpose() - zeta * zeta.transpose();
        int predicted = 0;
        for (int i = 1; i <= 4 && predicted == 0; ++i) {
            if (oracle::min_eigenvalue(D.topLeftCorner(i, i)) <= 1e-10 * D.norm())
                predicted = i;
        }
        ASSERT_EQ(predicted, k);

        const auto out = rank_one_downdate(L, zeta, 1e-8 * mu);
        ASSERT_TRUE(std::holds_alternative<DowndateBreakdown>(out));
        const auto& brk = std::get<DowndateBreakdown>(out);
        EXPECT_EQ(brk.index, predicted);

        // Leading block identity: [leading 0; row^T 0] times its transpose.
        Matrix F = Matrix::Zero(k, k);
        F.topLeftCorner(k - 1, k - 1) = brk.leading;
        F.row(k - 1).head(k - 1) = brk.row.transpose();
        EXPECT_LE((F * F.transpose() - D.topLeftCorner(k, k)).norm(), 1e-10 * D.norm());
    }
}

TEST(RankOneDowndate, RejectsNonPositiveDiagonal)
{
    Matrix L = Matrix::Identity(3, 3);
    L(1, 1) = 0.0;
    try {
        rank_one_downdate(L, Vector::Zero(3), 1e-8);
        FAIL() << "expected NotPositiveDiagonal";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotPositiveDiagonal);
    }
}

TEST(RankOneDowndate, IndefiniteResultIsANumericalFailure)
{
    try {
        rank_one_downdate(Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 2.0), 1e-8);
        FAIL() << "expected NumericalDowndateFailure";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NumericalDowndateFailure);
    }
}

TEST(GramAppend, FirstColumnGivesItsNorm)
{
    const Vector s = (Vector(3) << 3.0, 0.0, 4.0).finished();
    const auto res = gram_append(GramCholesky{}, Matrix(3, 0), s);
    EXPECT_EQ(res.report.kind, DependenceKind::Independent);
    ASSERT_EQ(res.chol.size(), 1);
    EXPECT_DOUBLE_EQ(res.chol.L(0, 0), 5.0);
    EXPECT_EQ(res.chol.order_map, std::vector<Index>{0});
}

TEST(GramAppend, ExactParallelReportsNewestWithCombinationCoefficient)
{
    const Matrix store = Vector::Unit(4, 0);
    const GramCholesky chol = rebuild_factor(store);
    const auto res = gram_append(chol, store, 3.0 * Vector::Unit(4, 0));
    EXPECT_EQ(res.report.kind, DependenceKind::ParallelNewest);
    EXPECT_EQ(res.report.breakdown_index, 1);
    EXPECT_EQ(res.report.dependent_store_index, 0);
    ASSERT_EQ(res.report.sigma.size(), 1);
    // s_dependent = sigma * s_new, i.e. e1 = sigma * 3 e1.
    EXPECT_NEAR(res.report.sigma(0), 1.0 / 3.0, 1e-15);
    // The factor is returned unchanged.
    EXPECT_EQ(res.chol.L, chol.L);
}

TEST(GramAppend, InteriorDependenceMatchesLeastSquares)
{
    Matrix store(5, 3);
    store << Vector::Unit(5, 0), Vector::Unit(5, 1), Vector::Unit(5, 2);
    const Vector s_new = Vector::Unit(5, 0) + 2.0 * Vector::Unit(5, 1);
    const auto res = gram_append(rebuild_factor(store), store, s_new);

    ASSERT_EQ(res.report.kind, DependenceKind::DependentAt);
    EXPECT_EQ(res.report.breakdown_index, 3);
    EXPECT_EQ(res.report.dependent_store_index, 0);

    // Newer columns newest-first: s_new, e3, e2.
    Matrix newer(5, 3);
    newer << s_new, store.col(2), store.col(1);
    const Vector dependent = store.col(0);
    const Vector ls = oracle::least_squares(newer, dependent);
    EXPECT_LE((res.report.sigma - ls).norm(), 1e-10);
    EXPECT_LE((newer * res.report.sigma - dependent).norm(), 1e-10);
    EXPECT_NEAR(res.report.sigma(0), 1.0, 1e-12);
    EXPECT_NEAR(res.report.sigma(1), 0.0, 1e-12);
    EXPECT_NEAR(res.report.sigma(2), -2.0, 1e-12);
}

TEST(GramAppend, RandomDependenceResidualIsSmall)
{
    InstanceGenerator gen(21);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = gen.uniform_int(4, 12);
        const int m = gen.uniform_int(2, std::min(6, n - 1));
        const Matrix store = gen.gaussian(n, m);
        const int spanned = gen.uniform_int(1, m);
        // s_new lies in the span of the `spanned` newest columns.
        const Vector s_new = store.rightCols(spanned) * gen.gaussian(spanned);
        const auto res = gram_append(rebuild_factor(store), store, s_new);
        ASSERT_NE(res.report.kind, DependenceKind::Independent);
        const Index i = res.report.breakdown_index;
        Matrix newer(n, i);
        newer.col(0) = s_new;
        for (Index c = 1; c < i; ++c)
            newer.col(c) = store.col(m - c);
        const Vector dependent = store.col(res.report.dependent_store_index);
        EXPECT_LE((newer * res.report.sigma - dependent).norm(), 1e-8 * dependent.norm());
        EXPECT_EQ(res.report.kind == DependenceKind::ParallelNewest, i == 1);

        // Removing the dependent column restores independence.
        Matrix kept(n, m);
        Index col = 0;
        for (Index c = 0; c < m; ++c)
            if (c != res.report.dependent_store_index)
                kept.col(col++) = store.col(c);
        kept.col(m - 1) = s_new;
        EXPECT_GT(rebuild_factor(kept).L.diagonal().minCoeff(), 0.0);
    }
}

TEST(GramAppend, GrownFactorReconstructsGram)
{
    InstanceGenerator gen(3);
    const Matrix cols = gen.gaussian(10, 6);
    const GramCholesky chol = append_all(cols);
    EXPECT_LE(oracle::rel_diff(chol.L * chol.L.transpose(), oracle::newest_first_gram(cols)), 1e-10);
    EXPECT_GT(chol.L.diagonal().minCoeff(), 0.0);
    for (Index c = 0; c < 6; ++c)
        EXPECT_EQ(chol.order_map[c], 5 - c);
}

TEST(GramAppend, IsDeterministic)
{
    InstanceGenerator gen(8);
    const Matrix store = gen.gaussian(7, 4);
    const Vector s_new = store.rightCols(2) * gen.gaussian(2);
    const auto a = gram_append(rebuild_factor(store), store, s_new);
    const auto b = gram_append(rebuild_factor(store), store, s_new);
    EXPECT_EQ(a.report.breakdown_index, b.report.breakdown_index);
    EXPECT_TRUE((a.report.sigma.array() == b.report.sigma.array()).all());
}

TEST(GramAppend, ZeroDisplacementIsRejected)
{
    const Matrix store = Vector::Unit(3, 0);
    try {
        gram_append(rebuild_factor(store), store, Vector::Zero(3));
        FAIL() << "expected ZeroDisplacement";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroDisplacement);
    }
}

TEST(RebuildFactor, SingleColumn)
{
    const Vector s = (Vector(2) << 0.0, 2.0).finished();
    const auto chol = rebuild_factor(s);
    ASSERT_EQ(chol.size(), 1);
    EXPECT_DOUBLE_EQ(chol.L(0, 0), 2.0);
}

TEST(RebuildFactor, OrthonormalColumnsGiveIdentity)
{
    InstanceGenerator gen(2);
    const Matrix Q = Eigen::HouseholderQR<Matrix>(gen.gaussian(6, 6)).householderQ();
    EXPECT_TRUE(rebuild_factor(Q.leftCols(4)).L.isIdentity(1e-12));
}

TEST(RebuildFactor, RandomFullRankMatchesDirectGram)
{
    InstanceGenerator gen(4);
    const Matrix cols = gen.gaussian(6, 4);
    const auto chol = rebuild_factor(cols);
    EXPECT_LE(oracle::rel_diff(chol.L * chol.L.transpose(), oracle::newest_first_gram(cols)), 1e-12);
}

TEST(RebuildFactor, DependentColumnsAreRankDeficient)
{
    Matrix cols(3, 2);
    cols << Vector::Unit(3, 0), 2.0 * Vector::Unit(3, 0);
    try {
        rebuild_factor(cols);
        FAIL() << "expected RankDeficient";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
    }
}

TEST(SpdSolve, IdentityReturnsRhs)
{
    InstanceGenerator gen(1);
    const Matrix rhs = gen.gaussian(3, 2);
    EXPECT_TRUE(spd_solve(Matrix::Identity(3, 3), rhs).isApprox(rhs, 1e-15));
}

TEST(SpdSolve, Diagonal)
{
    const Matrix M = vec2(4.0, 9.0).asDiagonal();
    const Vector x = spd_solve(M, vec2(4.0, 9.0));
    EXPECT_DOUBLE_EQ(x(0), 1.0);
    EXPECT_DOUBLE_EQ(x(1), 1.0);
}

TEST(SpdSolve, RandomResidual)
{
    InstanceGenerator gen(6);
    const Matrix M = gen.spd(5);
    const Matrix rhs = gen.gaussian(5, 3);
    const Matrix X = spd_solve(M, rhs);
    EXPECT_LE((M * X - rhs).norm(), 1e-10 * rhs.norm());
}

TEST(SpdSolve, IndefiniteIsNotSpd)
{
    const Matrix M = vec2(1.0, -1.0).asDiagonal();
    try {
        spd_solve(M, Vector::Ones(2));
        FAIL() << "expected NotSPD";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotSPD);
    }
}

TEST(NullSpace, SingleRow)
{
    const Matrix A = (Matrix(1, 2) << 1.0, 0.0).finished();
    const Vector v = null_space_vector(A);
    EXPECT_NEAR(std::abs(v(1)), 1.0, 1e-15);
    EXPECT_NEAR(v(0), 0.0, 1e-15);
}

TEST(NullSpace, ZeroMatrixAcceptsAnyUnitVector)
{
    const Vector v = null_space_vector(Matrix::Zero(2, 4));
    EXPECT_NEAR(v.norm(), 1.0, 1e-15);
}

TEST(NullSpace, RandomResidual)
{
    InstanceGenerator gen(9);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix A = gen.gaussian(3, 6);
        const Vector v = null_space_vector(A);
        EXPECT_NEAR(v.norm(), 1.0, 1e-12);
        EXPECT_LE((A * v).norm(), 1e-10 * A.norm() * v.norm());
    }
}

TEST(NullSpace, BasisSpansKernel)
{
    InstanceGenerator gen(10);
    const Matrix A = gen.gaussian(2, 5);
    const Matrix N = null_space_basis(A);
    ASSERT_EQ(N.cols(), 3);
    EXPECT_LE((A * N).norm(), 1e-12 * A.norm());
    EXPECT_TRUE((N.transpose() * N).isIdentity(1e-12));
}

TEST(NullSpace, LeadingZerosVariant)
{
    InstanceGenerator gen(12);
    for (int l = 0; l <= 2; ++l) {
        const Matrix A = gen.gaussian(2, 6);
        const Vector v = null_space_vector_leading_zeros(A, l);
        EXPECT_NEAR(v.norm(), 1.0, 1e-12);
        EXPECT_LE((A * v).norm(), 1e-10 * A.norm());
        if (l > 0)
            EXPECT_LE(v.head(l).norm(), 1e-12);
    }
}

TEST(NullSpace, RejectsTallMatrix)
{
    EXPECT_THROW(null_space_vector(Matrix::Identity(3, 3)), Error);
}
