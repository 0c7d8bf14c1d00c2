#ifndef MBFGS_QN_CORE_HPP
#define MBFGS_QN_CORE_HPP

#include "mbfgs/linalg_factors.hpp"
#include "mbfgs/types.hpp"

#include <span>
#include <vector>

namespace mbfgs {

/// Pairs with s^T ybar <= kCurvatureTol * ||s|| * ||ybar|| are rejected.
inline constexpr double kCurvatureTol = 1e-12;

/**
 * One stored curvature pair.
 *
 * For a freshly built pair ybar = y + r * gnorm * s and rho = 1 / (s^T ybar).
 * Once aggregation has replaced ybar the pair is flagged `aggregated`; y, r
 * and gnorm then describe the original step only.
 */
struct CurvaturePair {
    Vector s;
    Vector y;
    Vector ybar;
    double r = 1.0;
    double gnorm = 0.0;
    double rho = 0.0;
    bool aggregated = false;
};

/**
 * Build the modified pair from a step s, gradient change y and the gradient g
 * at the step's origin:
 *   r    = 1 + max(0, -y^T s / s^T s)
 *   ybar = y + r ||g|| s
 *
 * With `lifukushima_scaling` the max term is divided by ||g||, which makes
 * s^T ybar >= ||g|| s^T s hold for every input.
 */
CurvaturePair modified_displacement(const Vector& s, const Vector& y, const Vector& g,
                                    bool lifukushima_scaling = false, double curvature_tol = kCurvatureTol);

/// Pair whose ybar is given directly (test fixtures, aggregated pairs).
CurvaturePair make_pair_from_ybar(const Vector& s, const Vector& ybar);

/**
 * Bounded window of curvature pairs, oldest first, whose iterate
 * displacements are kept linearly independent. The Gram factor of the
 * s-columns travels with the pairs and is what detects dependence.
 */
class DisplacementStore {
public:
    explicit DisplacementStore(std::size_t capacity = 5);

    /// Validating constructor; throws RankDeficient if the s-columns are dependent.
    static DisplacementStore from_pairs(std::vector<CurvaturePair> pairs, std::size_t capacity);

    std::span<const CurvaturePair> pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return pairs_.empty(); }
    const GramCholesky& gram() const { return gram_; }

    Matrix s_matrix() const;
    Matrix ybar_matrix() const;

private:
    DisplacementStore(std::vector<CurvaturePair> pairs, GramCholesky gram, std::size_t capacity);

    std::vector<CurvaturePair> pairs_;
    GramCholesky gram_;
    std::size_t capacity_;

    friend struct StoreAccess;
};

/// Package-internal constructor access for the store maintenance routines.
struct StoreAccess {
    static DisplacementStore make(std::vector<CurvaturePair> pairs, GramCholesky gram, std::size_t capacity)
    {
        return DisplacementStore(std::move(pairs), std::move(gram), capacity);
    }
};

/** Upper-triangular and diagonal blocks of S^T Ybar used by the compact form. */
struct CompactFactors {
    Matrix Bbar;
    Matrix Cbar;
    Matrix StY;
};

CompactFactors compact_factors(std::span<const CurvaturePair> pairs);

/// W <- E_j^T W E_j + rho_j s_j s_j^T, E_j = I - rho_j ybar_j s_j^T, for j = 1..m.
Matrix mbfgs_iterative(const Matrix& W0, std::span<const CurvaturePair> pairs);

/// Same matrix assembled in one low-rank correction from S, Ybar and Bbar.
Matrix mbfgs_compact(const Matrix& W0, std::span<const CurvaturePair> pairs);

/// d = -W g with W = mbfgs_iterative(gamma0 * I, pairs), in O(mn).
Vector two_loop_direction(std::span<const CurvaturePair> pairs, const Vector& g, double gamma0);

/// B' = B - B s s^T B / (s^T B s) + ybar ybar^T / (ybar^T s).
Matrix hessian_update_dense(const Matrix& B, const CurvaturePair& pair);

/**
 * B_prefix V, where B_prefix is the direct Hessian approximation obtained
 * from B0 = I / gamma0 by the updates for pairs 1..j-1 (j is 1-based).
 * Never forms an n x n matrix.
 */
Matrix apply_prefix_hessian(std::span<const CurvaturePair> pairs, Index j, const Matrix& V, double gamma0);

/// W_prefix V with W_prefix = mbfgs_iterative(gamma0 * I, pairs 1..j-1).
Matrix apply_prefix_inverse(std::span<const CurvaturePair> pairs, Index j, const Matrix& V, double gamma0);

} // namespace mbfgs

#endif
