#ifndef MBFGS_SOLVER_HPP
#define MBFGS_SOLVER_HPP

#include "mbfgs/qn_core.hpp"
#include "mbfgs/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace mbfgs {

/// Smooth objective with analytic gradient.
struct Problem {
    std::string name;
    Index dim = 0;
    Vector x0;
    std::function<double(const Vector&)> f;
    std::function<Vector(const Vector&)> grad;
};

enum class Variant { FullMBFGS, MLBFGS, AggMBFGS };

std::string_view to_string(Variant v);
/// Accepts the CLI spellings mbfgs, mlbfgs and agg.
Variant parse_variant(std::string_view name);

struct SolverConfig {
    Variant variant = Variant::AggMBFGS;
    int memory = 5;
    double grad_tol = 1e-6;
    long max_iters = 100000;
    double ls_contraction = 0.5;
    double ls_sufficient = 1e-4;
    int ls_max_backtracks = 60;
    double gamma0 = 1.0;
    /// Rescale gamma0 to s^T ybar / ybar^T ybar of the newest pair each iteration.
    bool bb_scaling = false;
    bool lifukushima_scaling = false;
    double dependence_tol = kDependenceTol;
    std::uint64_t seed = 0;

    /// Throws InvalidArgument when a field is out of range.
    void validate() const;
};

enum class SolveStatus { Converged, IterLimit, LineSearchFailure };

std::string_view to_string(SolveStatus s);

struct SolveResult {
    Vector x_final;
    double f_final = 0.0;
    double grad_inf_norm = 0.0;
    long iters = 0;
    long func_evals = 0;
    long grad_evals = 0;
    long agg_count = 0;
    long parallel_drops = 0;
    long fifo_evictions = 0;
    long skipped_updates = 0;
    long aggregation_fallbacks = 0;
    SolveStatus status = SolveStatus::IterLimit;
};

enum class StoreEvent { Append, ParallelDrop, Aggregate, FifoEvict, AggregateFallback, SkipDegenerate };

std::string_view to_string(StoreEvent e);

struct IterationTrace {
    long k = 0;
    double f = 0.0;
    double grad_inf = 0.0;
    double alpha = 0.0;
    std::size_t store_size = 0;
    StoreEvent event = StoreEvent::Append;
};

/// Called after every accepted step with the trace entry and the new iterate.
using IterationObserver = std::function<void(const IterationTrace&, const Vector&)>;

struct LineSearchResult {
    double alpha = 0.0;
    double f_new = 0.0;
    long evals = 0;
};

/**
 * Backtracking Armijo search: alpha = tau^j for the smallest j >= 0 with
 * f(x + alpha d) <= f(x) + c alpha g^T d. Throws NotDescent for g^T d >= 0
 * and LineSearchFailure after ls_max_backtracks reductions.
 */
LineSearchResult armijo_backtracking(const std::function<double(const Vector&)>& f, const Vector& x,
                                     const Vector& d, const Vector& g, double f_x, const SolverConfig& cfg);

struct StoreUpdate {
    DisplacementStore store;
    StoreEvent event = StoreEvent::Append;
};

/**
 * Insert a new pair into an aggregation store. Dispatch follows the Gram
 * downdate: independent (append, evicting the oldest at capacity), parallel
 * to the newest stored displacement (drop it), or dependent on newer ones
 * (aggregate it away). A failed aggregation evicts the dependent pair.
 */
StoreUpdate step_store_update(DisplacementStore store, const CurvaturePair& pair, double gamma0,
                              double dependence_tol = kDependenceTol);

SolveResult minimize(const Problem& problem, const SolverConfig& cfg, const IterationObserver& observer = {});

} // namespace mbfgs

#endif
