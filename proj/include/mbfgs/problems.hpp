#ifndef MBFGS_PROBLEMS_HPP
#define MBFGS_PROBLEMS_HPP

#include "mbfgs/solver.hpp"

#include <string>
#include <vector>

namespace mbfgs {

struct ProblemInfo {
    std::string name;
    /// Reduced dimension used by default in tests and the bench harness.
    Index desk_dim = 0;
    /// Large-scale benchmark dimension.
    Index table_dim = 0;
    /// Optimal value when it is known in closed form (NaN otherwise).
    double f_star = 0.0;
};

/**
 * Native closed-form versions of unconstrained test problems from the
 * CUTEst collection: ARWHEAD, LIARWHD, POWELLSG, BDQRTIC, BROYDN3DLS,
 * DIXMAANA, DIXMAANE, DIXMAANI, CHNROSNB, NONDQUAR, TQUARTIC and BOX.
 */
const std::vector<ProblemInfo>& catalog();

/// dim <= 0 selects the desk dimension. Throws UnknownProblem or InvalidDimension.
Problem make_problem(const std::string& name, Index dim = 0);

/**
 * Largest componentwise error |g_i - fd_i| / max(1, |g_i|) between the
 * analytic gradient and central differences with step h * max(1, |x_i|).
 */
double fd_gradient_check(const Problem& problem, const Vector& x, double h = 1e-6);

} // namespace mbfgs

#endif
