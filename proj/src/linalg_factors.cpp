#include "mbfgs/linalg_factors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mbfgs {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
} // namespace

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NotPositiveDiagonal: return "NotPositiveDiagonal";
    case ErrorCode::NumericalDowndateFailure: return "NumericalDowndateFailure";
    case ErrorCode::ZeroDisplacement: return "ZeroDisplacement";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotSPD: return "NotSPD";
    case ErrorCode::DegenerateCurvature: return "DegenerateCurvature";
    case ErrorCode::SingularBbar: return "SingularBbar";
    case ErrorCode::NegativeDiscriminant: return "NegativeDiscriminant";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
    case ErrorCode::NotDescent: return "NotDescent";
    case ErrorCode::UnknownProblem: return "UnknownProblem";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

double rel_frobenius(const Matrix& a, const Matrix& b)
{
    return (a - b).norm() / std::max(b.norm(), std::numeric_limits<double>::min());
}

DowndateOutcome rank_one_downdate(const Matrix& L, const Vector& v, double zero_tol)
{
    const Index m = L.rows();
    if (L.cols() != m || v.size() != m)
        throw Error(ErrorCode::InvalidArgument, "rank_one_downdate: dimension mismatch");
    for (Index k = 0; k < m; ++k) {
        if (!(L(k, k) > 0.0))
            throw Error(ErrorCode::NotPositiveDiagonal, "rank_one_downdate: diagonal entry " + std::to_string(k));
    }
    if (!v.allFinite())
        throw Error(ErrorCode::InvalidArgument, "rank_one_downdate: non-finite downdate vector");

    Matrix M = L.triangularView<Eigen::Lower>();
    Vector x = v;
    // Each rotation divides by c = d / l, amplifying earlier rounding errors.
    double growth = 1.0;
    for (Index k = 0; k < m; ++k) {
        const double lkk = M(k, k);
        const double xk = x(k);
        // (l - x)(l + x) loses less than l^2 - x^2 near cancellation
        const double r2 = (lkk - xk) * (lkk + xk);
        const double d = r2 >= 0.0 ? std::sqrt(r2) : -std::sqrt(-r2);
        // r2 carries rounding error of order eps (l^2 + x^2) growth^2, so d itself
        // is only resolved to about sqrt(eps) l growth; pivots inside that band count as zero.
        const double noise = 8.0 * static_cast<double>(k + 1) * kEps * (lkk * lkk + xk * xk) * growth * growth;
        if (std::abs(d) <= zero_tol || std::abs(r2) <= noise) {
            DowndateBreakdown out;
            out.index = k + 1;
            out.leading = M.topLeftCorner(k, k).triangularView<Eigen::Lower>();
            out.row = M.row(k).head(k).transpose();
            return out;
        }
        if (d < 0.0)
            throw Error(ErrorCode::NumericalDowndateFailure,
                        "rank_one_downdate: indefinite result at index " + std::to_string(k + 1));
        const double c = d / lkk;
        const double s = xk / lkk;
        growth /= c;
        M(k, k) = d;
        const Index tail = m - k - 1;
        if (tail > 0) {
            M.col(k).tail(tail) = (M.col(k).tail(tail) - s * x.tail(tail)) / c;
            x.tail(tail) = c * x.tail(tail) - s * M.col(k).tail(tail);
        }
    }
    return DowndateSuccess{std::move(M)};
}

GramAppendResult gram_append(const GramCholesky& chol, const Matrix& store_columns, const Vector& s_new,
                             double dependence_tol)
{
    const Index m = chol.size();
    if (store_columns.cols() != m || static_cast<Index>(chol.order_map.size()) != m)
        throw Error(ErrorCode::InvalidArgument, "gram_append: factor and store disagree");
    if (m > 0 && store_columns.rows() != s_new.size())
        throw Error(ErrorCode::InvalidArgument, "gram_append: dimension mismatch");

    const double mu = s_new.norm();
    if (!std::isfinite(mu) || mu <= std::numeric_limits<double>::min())
        throw Error(ErrorCode::ZeroDisplacement, "gram_append: zero displacement");

    GramAppendResult result;
    if (m == 0) {
        result.chol.L = Matrix::Constant(1, 1, mu);
        result.chol.order_map = {0};
        return result;
    }

    Vector zeta(m);
    for (Index c = 0; c < m; ++c)
        zeta(c) = s_new.dot(store_columns.col(chol.order_map[c])) / mu;

    const DowndateOutcome outcome = rank_one_downdate(chol.L, zeta, dependence_tol * mu);
    if (const auto* ok = std::get_if<DowndateSuccess>(&outcome)) {
        Matrix L = Matrix::Zero(m + 1, m + 1);
        L(0, 0) = mu;
        L.col(0).tail(m) = zeta;
        L.bottomRightCorner(m, m) = ok->factor;
        result.chol.L = std::move(L);
        result.chol.order_map.reserve(m + 1);
        result.chol.order_map.push_back(m);
        result.chol.order_map.insert(result.chol.order_map.end(), chol.order_map.begin(), chol.order_map.end());
        return result;
    }

    const auto& brk = std::get<DowndateBreakdown>(outcome);
    const Index i = brk.index;
    // Leading i x i factor of the augmented Gram over [s_new, newer stored...]
    // and the row of the dependent column.
    Matrix xi_factor = Matrix::Zero(i, i);
    xi_factor(0, 0) = mu;
    if (i > 1) {
        xi_factor.col(0).tail(i - 1) = zeta.head(i - 1);
        xi_factor.bottomRightCorner(i - 1, i - 1) = brk.leading;
    }
    Vector xi(i);
    xi(0) = zeta(i - 1);
    if (i > 1)
        xi.tail(i - 1) = brk.row;

    result.chol = chol;
    result.report.kind = i == 1 ? DependenceKind::ParallelNewest : DependenceKind::DependentAt;
    result.report.breakdown_index = i;
    Vector sigma = xi_factor.transpose().triangularView<Eigen::Upper>().solve(xi);

    // One refinement step on the semi-normal equations against the actual
    // columns; back-substitution alone loses accuracy when xi_factor is ill-conditioned.
    Matrix newer(s_new.size(), i);
    newer.col(0) = s_new;
    for (Index c = 1; c < i; ++c)
        newer.col(c) = store_columns.col(chol.order_map[c - 1]);
    const Index dependent = chol.order_map[i - 1];
    const Vector residual = store_columns.col(dependent) - newer * sigma;
    Vector delta = xi_factor.triangularView<Eigen::Lower>().solve(newer.transpose() * residual);
    xi_factor.transpose().triangularView<Eigen::Upper>().solveInPlace(delta);
    sigma += delta;

    result.report.sigma = std::move(sigma);
    result.report.dependent_store_index = dependent;
    return result;
}

GramCholesky rebuild_factor(const Matrix& columns)
{
    const Index m = columns.cols();
    GramCholesky out;
    out.order_map.resize(m);
    for (Index c = 0; c < m; ++c)
        out.order_map[c] = m - 1 - c;
    if (m == 0) {
        out.L.resize(0, 0);
        return out;
    }
    const Matrix newest_first = columns.rowwise().reverse();
    const Matrix gram = newest_first.transpose() * newest_first;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::RankDeficient, "rebuild_factor: non-positive pivot");
    out.L = llt.matrixL();
    for (Index k = 0; k < m; ++k) {
        if (!(out.L(k, k) > 0.0))
            throw Error(ErrorCode::RankDeficient, "rebuild_factor: non-positive pivot");
    }
    return out;
}

Matrix spd_solve(const Matrix& M, const Matrix& rhs)
{
    if (M.rows() != M.cols() || M.rows() != rhs.rows())
        throw Error(ErrorCode::InvalidArgument, "spd_solve: dimension mismatch");
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotSPD, "spd_solve: non-positive pivot");
    return llt.solve(rhs);
}

Vector null_space_vector(const Matrix& A)
{
    const Index p = A.rows();
    const Index m = A.cols();
    if (p >= m)
        throw Error(ErrorCode::InvalidArgument, "null_space_vector: need fewer rows than columns");
    if (p == 0)
        return Vector::Unit(m, m - 1);
    // The trailing column of the full Q of A^T is orthogonal to range(A^T).
    Eigen::HouseholderQR<Matrix> qr(A.transpose());
    const Matrix Q = qr.householderQ() * Matrix::Identity(m, m);
    Vector v = Q.col(m - 1);
    return v / v.norm();
}

Matrix null_space_basis(const Matrix& A, double rank_tol)
{
    const Index p = A.rows();
    const Index m = A.cols();
    if (p == 0)
        return Matrix::Identity(m, m);
    Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
    qr.setThreshold(rank_tol);
    const Index r = qr.rank();
    const Matrix Q = qr.householderQ() * Matrix::Identity(m, m);
    return Q.rightCols(m - r);
}

Vector null_space_vector_leading_zeros(const Matrix& A, Index leading_zeros, double rank_tol)
{
    const Index m = A.cols();
    if (leading_zeros < 0 || leading_zeros >= m)
        throw Error(ErrorCode::InvalidArgument, "null_space_vector_leading_zeros: bad leading count");
    const Matrix N = null_space_basis(A, rank_tol);
    const Index k = N.cols();
    if (k <= leading_zeros)
        throw Error(ErrorCode::InvalidArgument, "null_space_vector_leading_zeros: kernel too small");
    Vector v;
    if (leading_zeros == 0) {
        v = N.col(k - 1);
    } else {
        const Vector zeta = null_space_vector(N.topRows(leading_zeros));
        v = N * zeta;
        v.head(leading_zeros).setZero();
    }
    return v / v.norm();
}

} // namespace mbfgs
