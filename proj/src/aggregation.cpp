#include "mbfgs/aggregation.hpp"

#include "mbfgs/linalg_factors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mbfgs {

Matrix upper_block(const Matrix& S, const Matrix& Ybar)
{
    const Index m = S.cols();
    if (m == 0)
        return Matrix(0, 0);
    const Matrix StY = S.transpose() * Ybar.leftCols(m - 1);
    Matrix U = StY.triangularView<Eigen::Upper>();
    return U;
}

Vector compute_b(const Matrix& S, const Matrix& Ybar, const Matrix& Ubar, const Vector& sigma, double rho0)
{
    const Index m = S.cols();
    if (Ybar.cols() != m || sigma.size() != m || Ubar.rows() != m || Ubar.cols() != std::max<Index>(m - 1, 0))
        throw Error(ErrorCode::InvalidArgument, "compute_b: dimension mismatch");
    if (m <= 1)
        return Vector(0);
    const Matrix lower = S.transpose() * Ybar.leftCols(m - 1) - Ubar;
    return -rho0 * (lower.transpose() * sigma);
}

AggregationWorkspace prepare_workspace(const AggregationInputs& in)
{
    const Index m = in.S.cols();
    const Index n = in.S.rows();
    if (in.Ybar.rows() != n || in.Ybar.cols() != m || in.sigma.size() != m || in.s0.size() != n ||
        in.ybar0.size() != n)
        throw Error(ErrorCode::InvalidArgument, "prepare_workspace: dimension mismatch");
    if (!(in.rho0 > 0.0))
        throw Error(ErrorCode::InvalidArgument, "prepare_workspace: rho0 must be positive");
    if (!in.hessian_apply)
        throw Error(ErrorCode::InvalidArgument, "prepare_workspace: missing base Hessian action");

    AggregationWorkspace ws;
    ws.WinvS = in.hessian_apply(in.S);
    ws.M = in.S.transpose() * ws.WinvS;
    ws.M = 0.5 * (ws.M + ws.M.transpose()).eval();
    ws.M_llt.compute(ws.M);
    if (ws.M_llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotSPD, "prepare_workspace: S^T W^{-1} S is not positive definite");
    ws.Minv = ws.M_llt.solve(Matrix::Identity(m, m));

    if (in.inverse_apply) {
        const Matrix Wy0 = in.inverse_apply(in.ybar0);
        ws.chi0 = 1.0 + in.rho0 * in.ybar0.dot(Wy0.col(0));
    }

    ws.Ubar = upper_block(in.S, in.Ybar);
    ws.b = compute_b(in.S, in.Ybar, ws.Ubar, in.sigma, in.rho0);
    if (m <= 1) {
        ws.Psi.resize(m, 0);
        ws.varpi.resize(0);
        ws.G.resize(0, 0);
        ws.Z.resize(0, 0);
        return ws;
    }
    const Vector Sy0 = in.S.transpose() * in.ybar0;
    ws.Psi = Sy0 * ws.b.transpose() + in.S.transpose() * in.Ybar.leftCols(m - 1) - ws.Ubar;
    ws.varpi = ws.b / std::sqrt(in.rho0);
    ws.G = ws.varpi * ws.varpi.transpose() + ws.Psi.transpose() * ws.M_llt.solve(ws.Psi);
    ws.G = 0.5 * (ws.G + ws.G.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(ws.G);
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    ws.Z = root.asDiagonal() * eig.eigenvectors().transpose();
    return ws;
}

Matrix compute_A(AggregationWorkspace& ws, const AggregationInputs& in)
{
    const Index m = in.S.cols();
    if (m <= 1) {
        ws.A.resize(m, 0);
        return ws.A;
    }
    const Index cols = m - 1;
    const Vector Sy0 = in.S.transpose() * in.ybar0;
    // Column l of T is S^T (b_l ybar0 + ybar_l); its tail below row l is the offset c_l.
    const Matrix T = Sy0 * ws.b.transpose() + in.S.transpose() * in.Ybar.leftCols(cols);

    // V holds the columns v_l = (M A + Psi)_l = [0_{l+1}; a_{l,2} + c_l].
    Matrix V = Matrix::Zero(m, cols);
    ws.A.setZero(m, cols);
    ws.span_columns.assign(cols, {});
    ws.beta.assign(cols, Vector());
    ws.lambda.assign(cols, 0.0);

    for (Index l = cols - 1; l >= 0; --l) {
        const Index built = cols - 1 - l;
        const Matrix Vb = V.middleCols(l + 1, built);

        // Particular solution of the affine conditions against the built columns,
        // expressed in a maximal independent subset of them.
        Vector vstar = Vector::Zero(m);
        if (built > 0) {
            Eigen::ColPivHouseholderQR<Matrix> qr(Vb);
            qr.setThreshold(kSpanRankTol);
            const Index c = qr.rank();
            std::vector<Index> picked;
            for (Index k = 0; k < c; ++k)
                picked.push_back(qr.colsPermutation().indices()(k));
            std::sort(picked.begin(), picked.end());
            if (c > 0) {
                Matrix Vc(m, c);
                Vector target(c);
                for (Index k = 0; k < c; ++k) {
                    Vc.col(k) = Vb.col(picked[k]);
                    target(k) = ws.G(l + 1 + picked[k], l);
                }
                const Matrix K = Vc.transpose() * ws.Minv * Vc;
                Eigen::LLT<Matrix> kllt(K);
                if (kllt.info() != Eigen::Success)
                    throw Error(ErrorCode::NotSPD, "compute_A: span Gram matrix not positive definite");
                ws.beta[l] = kllt.solve(target);
                vstar = Vc * ws.beta[l];
            }
            for (Index& k : picked)
                k += l + 1;
            ws.span_columns[l] = std::move(picked);
        }

        // Direction that leaves every affine condition untouched and keeps the
        // first l+1 entries zero.
        const Matrix P = Vb.transpose() * ws.Minv;
        const Vector u = null_space_vector_leading_zeros(P, l + 1);

        const Vector Mu = ws.Minv * u;
        const double qa = u.dot(Mu);
        const double qb = 2.0 * vstar.dot(Mu);
        const double vMv = vstar.dot(ws.Minv * vstar);
        const double qc = vMv - ws.G(l, l);
        double lambda = 0.0;
        if (qa > std::numeric_limits<double>::min()) {
            double disc = qb * qb - 4.0 * qa * qc;
            const double scale = qb * qb + 4.0 * qa * (std::abs(ws.G(l, l)) + vMv);
            if (disc < -kDiscriminantTol * scale)
                throw Error(ErrorCode::NegativeDiscriminant,
                            "compute_A: no real root for column " + std::to_string(l + 1));
            disc = std::max(disc, 0.0);
            const double sq = std::sqrt(disc);
            const double plus = (-qb + sq) / (2.0 * qa);
            const double minus = (-qb - sq) / (2.0 * qa);
            lambda = std::abs(plus) <= std::abs(minus) ? plus : minus;
        }
        ws.lambda[l] = lambda;

        Vector v = vstar + lambda * u;
        v.head(l + 1).setZero();
        V.col(l) = v;

        const Index tail = m - l - 1;
        Vector rhs(m);
        rhs.head(l + 1) = -ws.b(l) * Sy0.head(l + 1);
        rhs.tail(tail) = v.tail(tail) - T.col(l).tail(tail);
        ws.A.col(l) = ws.M_llt.solve(rhs);
    }
    return ws.A;
}

Matrix assemble_yhat(const AggregationInputs& in, const Matrix& A, const Vector& b, const Matrix* winv_s)
{
    const Index m = in.S.cols();
    Matrix Yhat = in.Ybar;
    if (m <= 1)
        return Yhat;
    if (A.rows() != m || A.cols() != m - 1 || b.size() != m - 1)
        throw Error(ErrorCode::InvalidArgument, "assemble_yhat: dimension mismatch");
    const Matrix WinvS = winv_s ? *winv_s : in.hessian_apply(in.S);
    Yhat.leftCols(m - 1).noalias() += WinvS * A;
    Yhat.leftCols(m - 1).noalias() += in.ybar0 * b.transpose();
    return Yhat;
}

double quadratic_residual(const AggregationWorkspace& ws, const Matrix& A)
{
    if (A.cols() == 0)
        return 0.0;
    const Matrix R = A.transpose() * ws.M * A + ws.Psi.transpose() * A + A.transpose() * ws.Psi -
                     ws.varpi * ws.varpi.transpose();
    return R.norm();
}

Matrix aggregate_displacements(const AggregationInputs& in, AggregationWorkspace* ws)
{
    AggregationWorkspace local = prepare_workspace(in);
    compute_A(local, in);
    Matrix Yhat = assemble_yhat(in, local.A, local.b, &local.WinvS);
    if (ws)
        *ws = std::move(local);
    return Yhat;
}

std::vector<CurvaturePair> aggregate_pair(std::span<const CurvaturePair> pairs, std::size_t dependent,
                                          const Vector& sigma, double gamma0, AggregationWorkspace* ws)
{
    if (dependent + 1 >= pairs.size())
        throw Error(ErrorCode::InvalidArgument, "aggregate_pair: dependent pair has no newer pairs");
    const auto m = static_cast<Index>(pairs.size() - dependent - 1);
    if (sigma.size() != m)
        throw Error(ErrorCode::InvalidArgument, "aggregate_pair: sigma length mismatch");

    std::vector<CurvaturePair> out(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(dependent));
    out.reserve(pairs.size() - 1);
    if (m == 1) {
        out.push_back(pairs.back());
        return out;
    }

    const CurvaturePair& dep = pairs[dependent];
    AggregationInputs in;
    in.sigma = sigma;
    in.s0 = dep.s;
    in.ybar0 = dep.ybar;
    in.rho0 = 1.0 / dep.s.dot(dep.ybar);
    const Index n = dep.s.size();
    in.S.resize(n, m);
    in.Ybar.resize(n, m);
    in.rho.resize(m);
    for (Index k = 0; k < m; ++k) {
        const CurvaturePair& p = pairs[dependent + 1 + static_cast<std::size_t>(k)];
        in.S.col(k) = p.s;
        in.Ybar.col(k) = p.ybar;
        in.rho(k) = p.rho;
    }
    const auto prefix_end = static_cast<Index>(dependent) + 1;
    in.hessian_apply = [pairs, prefix_end, gamma0](const Matrix& V) {
        return apply_prefix_hessian(pairs, prefix_end, V, gamma0);
    };
    in.inverse_apply = [pairs, prefix_end, gamma0](const Matrix& V) {
        return apply_prefix_inverse(pairs, prefix_end, V, gamma0);
    };

    const Matrix Yhat = aggregate_displacements(in, ws);
    for (Index k = 0; k < m; ++k) {
        CurvaturePair p = pairs[dependent + 1 + static_cast<std::size_t>(k)];
        if (k + 1 < m) {
            p.ybar = Yhat.col(k);
            const double sy = p.s.dot(p.ybar);
            if (!(sy > 0.0) || !std::isfinite(sy))
                throw Error(ErrorCode::DegenerateCurvature, "aggregate_pair: aggregated curvature not positive");
            p.rho = 1.0 / sy;
            p.aggregated = true;
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<CurvaturePair> drop_parallel_pair(std::span<const CurvaturePair> pairs, double sigma)
{
    if (pairs.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "drop_parallel_pair: need at least two pairs");
    if (!(sigma != 0.0) || !std::isfinite(sigma))
        throw Error(ErrorCode::InvalidArgument, "drop_parallel_pair: sigma must be a nonzero real");
    const Vector& earlier = pairs[pairs.size() - 2].s;
    const Vector& later = pairs.back().s;
    const double scale = std::max(earlier.norm(), std::abs(sigma) * later.norm());
    if ((earlier - sigma * later).norm() > 1e-6 * scale)
        throw Error(ErrorCode::InvalidArgument, "drop_parallel_pair: displacements are not parallel");
    std::vector<CurvaturePair> out(pairs.begin(), pairs.end() - 2);
    out.push_back(pairs.back());
    return out;
}

} // namespace mbfgs
