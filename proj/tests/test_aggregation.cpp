#include "mbfgs/aggregation.hpp"
#include "mbfgs/verify.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mbfgs;

namespace {

// Dense matrix of the full window and of the reduced window, both over the
// identity-scaled base.
double window_mismatch(const std::vector<CurvaturePair>& full, const std::vector<CurvaturePair>& reduced,
                       double gamma0)
{
    const Index n = full.front().s.size();
    const Matrix W0 = gamma0 * Matrix::Identity(n, n);
    return oracle::rel_diff(oracle::inverse_via_hessian(W0, reduced), oracle::inverse_via_hessian(W0, full));
}

struct Window {
    std::vector<CurvaturePair> pairs;
    std::size_t dependent = 0;
    Vector sigma;
};

// `prefix` older pairs, then s0 = S sigma, then m newer pairs.
Window dependent_window(InstanceGenerator& gen, Index n, int m, int prefix)
{
    Window w;
    for (int i = 0; i < prefix; ++i)
        w.pairs.push_back(gen.random_pair(n));
    const Matrix S = gen.gaussian(n, m);
    w.sigma = gen.gaussian(m);
    w.pairs.push_back(gen.pair_for(S * w.sigma));
    for (int i = 0; i < m; ++i)
        w.pairs.push_back(gen.pair_for(S.col(i)));
    w.dependent = static_cast<std::size_t>(prefix);
    return w;
}

// Inputs for a window without older pairs, base W = gamma0 I.
AggregationInputs inputs_for(const Window& w, double gamma0)
{
    AggregationInputs in;
    const auto& dep = w.pairs[w.dependent];
    const Index n = dep.s.size();
    const auto m = static_cast<Index>(w.pairs.size() - w.dependent - 1);
    in.sigma = w.sigma;
    in.s0 = dep.s;
    in.ybar0 = dep.ybar;
    in.rho0 = dep.rho;
    in.S.resize(n, m);
    in.Ybar.resize(n, m);
    in.rho.resize(m);
    for (Index k = 0; k < m; ++k) {
        const auto& p = w.pairs[w.dependent + 1 + static_cast<std::size_t>(k)];
        in.S.col(k) = p.s;
        in.Ybar.col(k) = p.ybar;
        in.rho(k) = p.rho;
    }
    in.hessian_apply = [gamma0](const Matrix& V) { return Matrix(V / gamma0); };
    in.inverse_apply = [gamma0](const Matrix& V) { return Matrix(gamma0 * V); };
    return in;
}

std::vector<CurvaturePair> pairs_from_columns(const Matrix& S, const Matrix& Y)
{
    std::vector<CurvaturePair> out;
    for (Index k = 0; k < S.cols(); ++k) {
        CurvaturePair p;
        p.s = S.col(k);
        p.ybar = Y.col(k);
        p.rho = 1.0 / p.s.dot(p.ybar);
        out.push_back(p);
    }
    return out;
}

} // namespace

TEST(ComputeB, SingleColumnHasNoUnknowns)
{
    InstanceGenerator gen(1);
    const Matrix S = gen.gaussian(4, 1);
    const Matrix Y = gen.gaussian(4, 1);
    EXPECT_EQ(compute_b(S, Y, upper_block(S, Y), Vector::Ones(1), 0.5).size(), 0);
}

TEST(ComputeB, VanishesWhenInnerProductsAreUpperTriangular)
{
    // S = [e1 e2 e3], Ybar upper triangular in those coordinates.
    const Matrix S = Matrix::Identity(5, 3);
    Matrix Y = Matrix::Zero(5, 3);
    Y.topRows(3) << 2, 1, -1, 0, 3, 2, 0, 0, 1;
    const Vector b = compute_b(S, Y, upper_block(S, Y), Vector::Ones(3), 0.7);
    ASSERT_EQ(b.size(), 2);
    EXPECT_EQ(b, Vector::Zero(2));
}

TEST(ComputeB, MatchesEntrywiseFormula)
{
    InstanceGenerator gen(2);
    const Index n = 7, m = 4;
    const Matrix S = gen.gaussian(n, m);
    const Matrix Y = gen.gaussian(n, m);
    const Vector sigma = gen.gaussian(m);
    const double rho0 = 0.37;
    const Matrix U = upper_block(S, Y);
    ASSERT_EQ(U.rows(), m);
    ASSERT_EQ(U.cols(), m - 1);
    const Vector b = compute_b(S, Y, U, sigma, rho0);
    for (Index k = 0; k < m - 1; ++k) {
        // Only the strictly lower entries of S^T Ybar survive the subtraction.
        double acc = 0.0;
        for (Index i = k + 1; i < m; ++i)
            acc += sigma(i) * S.col(i).dot(Y.col(k));
        EXPECT_NEAR(b(k), -rho0 * acc, 1e-13 * std::max(1.0, std::abs(acc)));
    }
}

TEST(ComputeA, HomogeneousEquationGivesZero)
{
    // Upper triangular S^T Ybar makes b = 0, varpi = 0 and Psi = 0.
    Window w;
    const Matrix S = Matrix::Identity(6, 3);
    Matrix Y = Matrix::Zero(6, 3);
    Y.topRows(3) << 2, 1, -1, 0, 3, 2, 0, 0, 1;
    w.sigma = (Vector(3) << 1.0, -2.0, 0.5).finished();
    w.pairs.push_back(make_pair_from_ybar(S * w.sigma, (S * w.sigma) + Vector::Unit(6, 4)));
    for (Index k = 0; k < 3; ++k)
        w.pairs.push_back(make_pair_from_ybar(S.col(k), Y.col(k)));
    AggregationWorkspace ws;
    const Matrix Yhat = aggregate_displacements(inputs_for(w, 1.0), &ws);
    EXPECT_TRUE(ws.b.isZero(0.0));
    EXPECT_TRUE(ws.Psi.isZero(0.0));
    EXPECT_LE(ws.A.norm(), 1e-12);
    EXPECT_LE((Yhat - Y).norm(), 1e-12);
}

TEST(ComputeA, RandomInstanceSolvesQuadraticEquation)
{
    InstanceGenerator gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Window w = dependent_window(gen, 8, 3, 0);
        const double gamma0 = gen.uniform(0.5, 2.0);
        AggregationWorkspace ws;
        const auto out = aggregate_pair(w.pairs, w.dependent, w.sigma, gamma0, &ws);
        ASSERT_EQ(ws.A.rows(), 3);
        ASSERT_EQ(ws.A.cols(), 2);
        const double scale = ws.varpi.squaredNorm() + ws.Psi.squaredNorm() / oracle::min_eigenvalue(ws.M);
        EXPECT_LE(quadratic_residual(ws, ws.A), 1e-7 * scale);
        EXPECT_LE(window_mismatch(w.pairs, out, gamma0), 1e-7);
    }
}

TEST(AggregationWorkspace, IntermediatesSatisfyTheirInvariants)
{
    InstanceGenerator gen(4);
    const Window w = dependent_window(gen, 9, 4, 0);
    AggregationWorkspace ws;
    aggregate_displacements(inputs_for(w, 1.3), &ws);
    EXPECT_GT(oracle::min_eigenvalue(ws.M), 0.0);
    EXPECT_GE(ws.chi0, 1.0);
    EXPECT_LE(oracle::rel_diff(ws.Z.transpose() * ws.Z, ws.G), 1e-9);
    EXPECT_EQ(ws.lambda.size(), 3u);
}

TEST(AssembleYhat, ZeroCoefficientsReturnYbar)
{
    InstanceGenerator gen(5);
    const Window w = dependent_window(gen, 6, 3, 0);
    const auto in = inputs_for(w, 1.0);
    EXPECT_EQ(assemble_yhat(in, Matrix::Zero(3, 2), Vector::Zero(2)), in.Ybar);
}

TEST(AssembleYhat, TwoColumnUnrolling)
{
    InstanceGenerator gen(6);
    const Window w = dependent_window(gen, 5, 2, 0);
    const double gamma0 = 2.0;
    const auto in = inputs_for(w, gamma0);
    const Matrix A = (Matrix(2, 1) << 0.3, -1.1).finished();
    const Vector b = Vector::Constant(1, 0.25);
    const Matrix Yhat = assemble_yhat(in, A, b);
    const Vector expected = in.Ybar.col(0) + in.S * A.col(0) / gamma0 + b(0) * in.ybar0;
    EXPECT_LE((Yhat.col(0) - expected).norm(), 1e-14 * expected.norm());
    EXPECT_EQ(Yhat.col(1), in.Ybar.col(1));
}

TEST(AggregatePair, PreservesInnerProductsAndLastColumn)
{
    InstanceGenerator gen(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = gen.uniform_int(2, 5);
        const Window w = dependent_window(gen, 10, m, gen.uniform_int(0, 2));
        const auto out = aggregate_pair(w.pairs, w.dependent, w.sigma, 1.0);
        ASSERT_EQ(out.size(), w.pairs.size() - 1);
        for (std::size_t i = 0; i < w.dependent; ++i)
            EXPECT_EQ(out[i].ybar, w.pairs[i].ybar);
        EXPECT_EQ(out.back().ybar, w.pairs.back().ybar);
        EXPECT_FALSE(out.back().aggregated);

        // triu(S^T Yhat) equals triu(S^T Ybar) over the retained newer pairs.
        for (int i = 0; i < m; ++i) {
            for (int j = i; j < m; ++j) {
                const auto& si = w.pairs[w.dependent + 1 + i].s;
                const double ref = si.dot(w.pairs[w.dependent + 1 + j].ybar);
                const double got = si.dot(out[w.dependent + j].ybar);
                EXPECT_NEAR(got, ref, 1e-9 * std::max(1.0, std::abs(ref)));
            }
            const auto& p = out[w.dependent + i];
            EXPECT_NEAR(p.s.dot(p.ybar), w.pairs[w.dependent + 1 + i].s.dot(w.pairs[w.dependent + 1 + i].ybar),
                        1e-10 * p.s.dot(p.ybar));
            EXPECT_NEAR(p.rho * p.s.dot(p.ybar), 1.0, 1e-14);
        }
    }
}

TEST(AggregatePair, MatchesFullMemoryOracle)
{
    InstanceGenerator gen(8);
    const Window w = dependent_window(gen, 8, 3, 0);
    const auto out = aggregate_pair(w.pairs, w.dependent, w.sigma, 1.0);
    EXPECT_EQ(out.size(), 3u);
    EXPECT_LE(window_mismatch(w.pairs, out, 1.0), 1e-7);
}

TEST(AggregatePair, InteriorDependenceUsesPrefixBase)
{
    InstanceGenerator gen(9);
    for (int trial = 0; trial < 10; ++trial) {
        // Four pairs, the second one dependent on the two newest.
        const Window w = dependent_window(gen, 10, 2, 1);
        ASSERT_EQ(w.pairs.size(), 4u);
        const double gamma0 = gen.uniform(0.5, 2.0);
        const auto out = aggregate_pair(w.pairs, 1, w.sigma, gamma0);
        EXPECT_LE(window_mismatch(w.pairs, out, gamma0), 1e-7);
    }
}

TEST(AggregatePair, SingleNewerPairReducesToParallelDrop)
{
    InstanceGenerator gen(10);
    const auto last = gen.random_pair(6);
    std::vector<CurvaturePair> pairs{gen.random_pair(6), gen.pair_for(-0.7 * last.s), last};
    const auto agg = aggregate_pair(pairs, 1, Vector::Constant(1, -0.7), 1.0);
    const auto drop = drop_parallel_pair(pairs, -0.7);
    ASSERT_EQ(agg.size(), drop.size());
    for (std::size_t i = 0; i < agg.size(); ++i) {
        EXPECT_EQ(agg[i].s, drop[i].s);
        EXPECT_EQ(agg[i].ybar, drop[i].ybar);
        EXPECT_EQ(agg[i].rho, drop[i].rho);
    }
}

TEST(AggregatePair, FlippedBSignBreaksEquivalence)
{
    // Negative control: the oracle must notice a wrong sign in b.
    InstanceGenerator gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Window w = dependent_window(gen, 8, 3, 0);
        const auto in = inputs_for(w, 1.0);
        AggregationWorkspace ws = prepare_workspace(in);
        compute_A(ws, in);
        const Matrix good = assemble_yhat(in, ws.A, ws.b);
        const Matrix bad = assemble_yhat(in, ws.A, -ws.b);
        EXPECT_LE(window_mismatch(w.pairs, pairs_from_columns(in.S, good), 1.0), 1e-7);
        EXPECT_GT(window_mismatch(w.pairs, pairs_from_columns(in.S, bad), 1.0), 1e-4);
    }
}

TEST(DropParallelPair, IdenticalPairsCollapse)
{
    InstanceGenerator gen(12);
    const auto p = gen.random_pair(5);
    const std::vector<CurvaturePair> pairs{p, p};
    const auto out = drop_parallel_pair(pairs, 1.0);
    ASSERT_EQ(out.size(), 1u);
    const Matrix I = Matrix::Identity(5, 5);
    EXPECT_LE(oracle::rel_diff(mbfgs_iterative(I, out), mbfgs_iterative(I, pairs)), 1e-12);
}

TEST(DropParallelPair, NegativeMultipleWithDistinctYbar)
{
    InstanceGenerator gen(13);
    const auto last = gen.random_pair(5);
    const std::vector<CurvaturePair> pairs{gen.pair_for(-2.0 * last.s), last};
    const auto out = drop_parallel_pair(pairs, -2.0);
    ASSERT_EQ(out.size(), 1u);
    const Matrix I = Matrix::Identity(5, 5);
    EXPECT_LE(oracle::rel_diff(mbfgs_iterative(I, out), mbfgs_iterative(I, pairs)), 1e-12);
}

TEST(DropParallelPair, HoldsForNonIdentityBase)
{
    InstanceGenerator gen(14);
    const auto last = gen.random_pair(6);
    const std::vector<CurvaturePair> pairs{gen.random_pair(6), gen.pair_for(3.0 * last.s), last};
    const Matrix W0 = gen.spd(6);
    const auto out = drop_parallel_pair(pairs, 3.0);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_LE(oracle::rel_diff(mbfgs_iterative(W0, out), mbfgs_iterative(W0, pairs)), 1e-12);
    EXPECT_LE(oracle::rel_diff(oracle::inverse_via_hessian(W0, out), oracle::inverse_via_hessian(W0, pairs)), 1e-9);
}

TEST(DropParallelPair, RejectsNonParallelInput)
{
    InstanceGenerator gen(15);
    const std::vector<CurvaturePair> pairs{gen.random_pair(4), gen.random_pair(4)};
    EXPECT_THROW(drop_parallel_pair(pairs, 1.0), Error);
    EXPECT_THROW(drop_parallel_pair(pairs, 0.0), Error);
}
