#ifndef MBFGS_AGGREGATION_HPP
#define MBFGS_AGGREGATION_HPP

#include "mbfgs/qn_core.hpp"
#include "mbfgs/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace mbfgs {

/// Applies a fixed symmetric positive definite operator to the columns of a matrix.
using MatrixApplier = std::function<Matrix(const Matrix&)>;

/**
 * Displacement aggregation.
 *
 * Setting: a base inverse Hessian W > 0, an older pair (s0, ybar0, rho0) and
 * m newer pairs S = [s_1..s_m], Ybar = [ybar_1..ybar_m] with s0 = S sigma.
 * We look for
 *
 *     Yhat = W^{-1} S [A 0] + ybar0 [b; 0]^T + Ybar,
 *
 * A in R^{m x (m-1)}, b in R^{m-1}, such that updating W with the m pairs
 * (S, Yhat) gives the same matrix as updating it with all m + 1 pairs.
 * b is explicit; A solves the quadratic matrix equation
 *
 *     A^T M A + Psi^T A + A^T Psi - varpi varpi^T = 0,   M = S^T W^{-1} S,
 *
 * one column at a time from the last to the first. Each column is pinned
 * down by a set of affine conditions against the columns already computed
 * plus one scalar quadratic along a null direction of those conditions.
 */
struct AggregationInputs {
    Vector sigma;
    Vector s0;
    Vector ybar0;
    double rho0 = 0.0;
    Matrix S;
    Matrix Ybar;
    Vector rho;
    /// V -> W^{-1} V for the base matrix.
    MatrixApplier hessian_apply;
    /// V -> W V for the base matrix; only used for chi0, may be empty.
    MatrixApplier inverse_apply;
};

struct AggregationWorkspace {
    Matrix M;
    Eigen::LLT<Matrix> M_llt;
    Matrix Minv;
    Matrix WinvS;
    double chi0 = 1.0;
    Vector b;
    Matrix A;
    Matrix Ubar;
    Matrix Psi;
    Vector varpi;
    /// varpi varpi^T + Psi^T M^{-1} Psi; the targets of the column conditions.
    Matrix G;
    Matrix Z;
    /// Per column l: the retained span columns and their coefficients.
    std::vector<std::vector<Index>> span_columns;
    std::vector<Vector> beta;
    std::vector<double> lambda;
};

/// Discriminants above -kDiscriminantTol * scale are clamped to zero.
inline constexpr double kDiscriminantTol = 1e-8;
/// Relative pivot threshold for the rank decision on the already-built columns.
inline constexpr double kSpanRankTol = 1e-10;

/// b = -rho0 (S^T Ybar_{1:m-1} - Ubar)^T sigma.
Vector compute_b(const Matrix& S, const Matrix& Ybar, const Matrix& Ubar, const Vector& sigma, double rho0);

/// Ubar: the first m-1 columns of triu(S^T Ybar).
Matrix upper_block(const Matrix& S, const Matrix& Ybar);

/// Builds M, its factorization, b, Psi, varpi, G and Z.
AggregationWorkspace prepare_workspace(const AggregationInputs& in);

/// Column-by-column construction of A; also stores the result in ws.A.
Matrix compute_A(AggregationWorkspace& ws, const AggregationInputs& in);

/// Yhat = W^{-1} S [A 0] + ybar0 [b; 0]^T + Ybar; the last column is copied verbatim.
Matrix assemble_yhat(const AggregationInputs& in, const Matrix& A, const Vector& b,
                     const Matrix* winv_s = nullptr);

/// Frobenius norm of A^T M A + Psi^T A + A^T Psi - varpi varpi^T.
double quadratic_residual(const AggregationWorkspace& ws, const Matrix& A);

/// Full transform on explicit inputs; returns Yhat.
Matrix aggregate_displacements(const AggregationInputs& in, AggregationWorkspace* ws = nullptr);

/**
 * Remove pairs[dependent] from a window (oldest first) in which
 * s_dependent = sum_k sigma[k] * s_{dependent+1+k}. Older pairs are untouched;
 * every newer pair gets its aggregated ybar and recomputed rho. The base
 * matrix is gamma0 * I updated with the pairs older than the dependent one.
 */
std::vector<CurvaturePair> aggregate_pair(std::span<const CurvaturePair> pairs, std::size_t dependent,
                                          const Vector& sigma, double gamma0,
                                          AggregationWorkspace* ws = nullptr);

/**
 * Parallel case: the second-to-last pair has s = sigma * s_last. Dropping it
 * leaves the quasi-Newton matrix unchanged for any base.
 */
std::vector<CurvaturePair> drop_parallel_pair(std::span<const CurvaturePair> pairs, double sigma);

} // namespace mbfgs

#endif
