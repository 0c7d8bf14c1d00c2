#ifndef MBFGS_LINALG_FACTORS_HPP
#define MBFGS_LINALG_FACTORS_HPP

#include "mbfgs/types.hpp"

#include <variant>
#include <vector>

namespace mbfgs {

/// A computed downdate diagonal d counts as zero when d <= kDependenceTol * ||s_new||.
inline constexpr double kDependenceTol = 1e-8;

/**
 * Lower-triangular Cholesky factor of the Gram matrix of the stored iterate
 * displacements, taken newest-first. The store itself keeps its columns
 * oldest-first; order_map[c] is the store index of factor column c.
 */
struct GramCholesky {
    Matrix L;
    std::vector<Index> order_map;

    Index size() const { return L.rows(); }
};

struct DowndateSuccess {
    Matrix factor;
};

/**
 * The downdate reached a (numerically) zero diagonal at 1-based position
 * `index`. `leading` holds the (index-1) completed columns of the downdated
 * factor restricted to its leading block and `row` the sub-diagonal entries
 * of row `index`, so the leading index x index block of L L^T - v v^T equals
 * [leading 0; row^T 0] [leading 0; row^T 0]^T.
 */
struct DowndateBreakdown {
    Index index = 0;
    Matrix leading;
    Vector row;
};

using DowndateOutcome = std::variant<DowndateSuccess, DowndateBreakdown>;

/**
 * Hyperbolic-rotation rank-one downdate: factor of L L^T - v v^T.
 *
 * A diagonal whose signed square root lies in [-zero_tol, zero_tol] stops the
 * sweep and is reported as a breakdown at the smallest such index. A more
 * negative value means the downdated matrix is genuinely indefinite and
 * raises NumericalDowndateFailure.
 */
DowndateOutcome rank_one_downdate(const Matrix& L, const Vector& v, double zero_tol);

enum class DependenceKind { Independent, ParallelNewest, DependentAt };

/**
 * Result of appending a displacement to the Gram factor. For a dependence,
 * `sigma` expresses the dependent column through the newer ones listed
 * newest-first (sigma[0] multiplies s_new); `dependent_store_index` is the
 * oldest-first store index of the dependent column.
 */
struct DependenceReport {
    DependenceKind kind = DependenceKind::Independent;
    Index breakdown_index = 0;
    Vector sigma;
    Index dependent_store_index = -1;
};

struct GramAppendResult {
    GramCholesky chol;
    DependenceReport report;
};

/**
 * Append s_new as the newest column. `store_columns` holds the stored
 * displacements oldest-first and must be consistent with `chol`.
 * On independence the returned factor covers [s_new, stored...] newest-first
 * and its order_map assumes s_new is appended at store index m. On dependence
 * the input factor is returned unchanged.
 */
GramAppendResult gram_append(const GramCholesky& chol, const Matrix& store_columns, const Vector& s_new,
                             double dependence_tol = kDependenceTol);

/// Fresh factor of the newest-first Gram of oldest-first `columns`.
GramCholesky rebuild_factor(const Matrix& columns);

/// Solve M X = rhs for symmetric positive definite M.
Matrix spd_solve(const Matrix& M, const Matrix& rhs);

/// Unit vector v with A v = 0 for a p x m matrix with p < m.
Vector null_space_vector(const Matrix& A);

/// Orthonormal basis of ker(A); rank decided with relative pivot threshold `rank_tol`.
Matrix null_space_basis(const Matrix& A, double rank_tol = 1e-10);

/**
 * Unit vector v in ker(A) whose first `leading_zeros` entries vanish.
 * Built as N zeta with N a basis of ker(A) and zeta chosen so the leading
 * rows of N zeta cancel; requires dim ker(A) > leading_zeros.
 */
Vector null_space_vector_leading_zeros(const Matrix& A, Index leading_zeros, double rank_tol = 1e-10);

} // namespace mbfgs

#endif
