#include "mbfgs/qn_core.hpp"

#include <cmath>
#include <limits>

namespace mbfgs {

namespace {

void symmetrize(Matrix& W)
{
    W = 0.5 * (W + W.transpose()).eval();
}

void check_square(const Matrix& W, Index n, const char* who)
{
    if (W.rows() != W.cols() || W.rows() != n)
        throw Error(ErrorCode::InvalidArgument, std::string(who) + ": dimension mismatch");
}

} // namespace

CurvaturePair modified_displacement(const Vector& s, const Vector& y, const Vector& g, bool lifukushima_scaling,
                                    double curvature_tol)
{
    if (s.size() != y.size() || s.size() != g.size())
        throw Error(ErrorCode::InvalidArgument, "modified_displacement: dimension mismatch");
    const double ss = s.squaredNorm();
    if (!std::isfinite(ss) || ss <= std::numeric_limits<double>::min())
        throw Error(ErrorCode::ZeroDisplacement, "modified_displacement: zero step");

    CurvaturePair p;
    p.s = s;
    p.y = y;
    p.gnorm = g.norm();
    double excess = std::max(0.0, -y.dot(s) / ss);
    if (lifukushima_scaling && p.gnorm > 0.0)
        excess /= p.gnorm;
    p.r = 1.0 + excess;
    p.ybar = y + (p.r * p.gnorm) * s;

    const double sy = s.dot(p.ybar);
    if (!(sy > curvature_tol * std::sqrt(ss) * p.ybar.norm()))
        throw Error(ErrorCode::DegenerateCurvature, "modified_displacement: s^T ybar not positive");
    p.rho = 1.0 / sy;
    return p;
}

CurvaturePair make_pair_from_ybar(const Vector& s, const Vector& ybar)
{
    if (s.size() != ybar.size())
        throw Error(ErrorCode::InvalidArgument, "make_pair_from_ybar: dimension mismatch");
    const double sy = s.dot(ybar);
    if (!(sy > 0.0))
        throw Error(ErrorCode::DegenerateCurvature, "make_pair_from_ybar: s^T ybar not positive");
    CurvaturePair p;
    p.s = s;
    p.y = ybar;
    p.ybar = ybar;
    p.rho = 1.0 / sy;
    return p;
}

DisplacementStore::DisplacementStore(std::size_t capacity)
    : capacity_(capacity)
{
    gram_.L.resize(0, 0);
}

DisplacementStore::DisplacementStore(std::vector<CurvaturePair> pairs, GramCholesky gram, std::size_t capacity)
    : pairs_(std::move(pairs)), gram_(std::move(gram)), capacity_(capacity)
{
}

DisplacementStore DisplacementStore::from_pairs(std::vector<CurvaturePair> pairs, std::size_t capacity)
{
    if (pairs.size() > capacity)
        throw Error(ErrorCode::InvalidArgument, "DisplacementStore: more pairs than capacity");
    for (const auto& p : pairs) {
        if (!(p.rho > 0.0) || !(p.s.dot(p.ybar) > 0.0))
            throw Error(ErrorCode::DegenerateCurvature, "DisplacementStore: pair with non-positive curvature");
    }
    DisplacementStore store(capacity);
    store.pairs_ = std::move(pairs);
    store.gram_ = rebuild_factor(store.s_matrix());
    return store;
}

Matrix DisplacementStore::s_matrix() const
{
    if (pairs_.empty())
        return Matrix(0, 0);
    Matrix S(pairs_.front().s.size(), static_cast<Index>(pairs_.size()));
    for (std::size_t i = 0; i < pairs_.size(); ++i)
        S.col(static_cast<Index>(i)) = pairs_[i].s;
    return S;
}

Matrix DisplacementStore::ybar_matrix() const
{
    if (pairs_.empty())
        return Matrix(0, 0);
    Matrix Y(pairs_.front().ybar.size(), static_cast<Index>(pairs_.size()));
    for (std::size_t i = 0; i < pairs_.size(); ++i)
        Y.col(static_cast<Index>(i)) = pairs_[i].ybar;
    return Y;
}

CompactFactors compact_factors(std::span<const CurvaturePair> pairs)
{
    const auto m = static_cast<Index>(pairs.size());
    CompactFactors cf;
    cf.StY.resize(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j)
            cf.StY(i, j) = pairs[i].s.dot(pairs[j].ybar);
    cf.Bbar = cf.StY.triangularView<Eigen::Upper>();
    cf.Cbar = cf.StY.diagonal().asDiagonal();
    return cf;
}

Matrix mbfgs_iterative(const Matrix& W0, std::span<const CurvaturePair> pairs)
{
    Matrix W = W0;
    for (const auto& p : pairs) {
        check_square(W, p.s.size(), "mbfgs_iterative");
        const Vector Wy = W * p.ybar;
        const double yWy = p.ybar.dot(Wy);
        // E^T W E + rho s s^T expanded to rank-two form.
        W.noalias() -= p.rho * (p.s * Wy.transpose() + Wy * p.s.transpose());
        W.noalias() += (p.rho * p.rho * yWy + p.rho) * (p.s * p.s.transpose());
    }
    symmetrize(W);
    return W;
}

Matrix mbfgs_compact(const Matrix& W0, std::span<const CurvaturePair> pairs)
{
    if (pairs.empty())
        return W0;
    const auto m = static_cast<Index>(pairs.size());
    const Index n = pairs.front().s.size();
    check_square(W0, n, "mbfgs_compact");

    Matrix S(n, m), Y(n, m);
    for (Index i = 0; i < m; ++i) {
        S.col(i) = pairs[i].s;
        Y.col(i) = pairs[i].ybar;
    }
    const CompactFactors cf = compact_factors(pairs);
    for (Index i = 0; i < m; ++i) {
        if (!(cf.Bbar(i, i) > 0.0))
            throw Error(ErrorCode::SingularBbar, "mbfgs_compact: non-positive diagonal of Bbar");
    }

    const Matrix WY = W0 * Y;
    const auto Bup = cf.Bbar.triangularView<Eigen::Upper>();
    const Matrix Binv = Bup.solve(Matrix::Identity(m, m));
    const Matrix middle = cf.Cbar + Y.transpose() * WY;
    const Matrix K11 = Binv.transpose() * middle * Binv;

    Matrix W = W0;
    W.noalias() += S * K11 * S.transpose();
    const Matrix cross = WY * Binv * S.transpose();
    W.noalias() -= cross;
    W.noalias() -= cross.transpose();
    symmetrize(W);
    return W;
}

Vector two_loop_direction(std::span<const CurvaturePair> pairs, const Vector& g, double gamma0)
{
    const std::size_t m = pairs.size();
    std::vector<double> alpha(m);
    Vector q = g;
    for (std::size_t k = m; k-- > 0;) {
        alpha[k] = pairs[k].rho * pairs[k].s.dot(q);
        q.noalias() -= alpha[k] * pairs[k].ybar;
    }
    Vector r = gamma0 * q;
    for (std::size_t k = 0; k < m; ++k) {
        const double beta = pairs[k].rho * pairs[k].ybar.dot(r);
        r.noalias() += (alpha[k] - beta) * pairs[k].s;
    }
    return -r;
}

Matrix hessian_update_dense(const Matrix& B, const CurvaturePair& pair)
{
    check_square(B, pair.s.size(), "hessian_update_dense");
    const Vector Bs = B * pair.s;
    const double sBs = pair.s.dot(Bs);
    const double ys = pair.ybar.dot(pair.s);
    Matrix out = B;
    out.noalias() -= (Bs * Bs.transpose()) / sBs;
    out.noalias() += (pair.ybar * pair.ybar.transpose()) / ys;
    symmetrize(out);
    return out;
}

Matrix apply_prefix_hessian(std::span<const CurvaturePair> pairs, Index j, const Matrix& V, double gamma0)
{
    if (j < 1 || j > static_cast<Index>(pairs.size()) + 1)
        throw Error(ErrorCode::InvalidArgument, "apply_prefix_hessian: prefix index out of range");
    const Index count = j - 1;
    // B_k = B_0 + sum_{t<k} ( -u_t u_t^T / (s_t^T u_t) + ybar_t ybar_t^T rho_t ),  u_t = B_t s_t.
    std::vector<Vector> u(count);
    std::vector<double> su(count);
    for (Index t = 0; t < count; ++t) {
        const Vector& s = pairs[t].s;
        Vector ut = s / gamma0;
        for (Index q = 0; q < t; ++q) {
            ut.noalias() -= u[q] * (u[q].dot(s) / su[q]);
            ut.noalias() += pairs[q].ybar * (pairs[q].ybar.dot(s) * pairs[q].rho);
        }
        su[t] = s.dot(ut);
        u[t] = std::move(ut);
    }
    Matrix out = V / gamma0;
    for (Index t = 0; t < count; ++t) {
        out.noalias() -= u[t] * ((u[t].transpose() * V) / su[t]);
        out.noalias() += pairs[t].ybar * ((pairs[t].ybar.transpose() * V) * pairs[t].rho);
    }
    return out;
}

Matrix apply_prefix_inverse(std::span<const CurvaturePair> pairs, Index j, const Matrix& V, double gamma0)
{
    if (j < 1 || j > static_cast<Index>(pairs.size()) + 1)
        throw Error(ErrorCode::InvalidArgument, "apply_prefix_inverse: prefix index out of range");
    const auto prefix = pairs.first(static_cast<std::size_t>(j - 1));
    Matrix out(V.rows(), V.cols());
    for (Index c = 0; c < V.cols(); ++c)
        out.col(c) = -two_loop_direction(prefix, V.col(c), gamma0);
    return out;
}

} // namespace mbfgs
