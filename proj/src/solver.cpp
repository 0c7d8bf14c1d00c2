#include "mbfgs/solver.hpp"

#include "mbfgs/aggregation.hpp"
#include "mbfgs/linalg_factors.hpp"

#include <cmath>
#include <optional>

namespace mbfgs {

std::string_view to_string(Variant v)
{
    switch (v) {
    case Variant::FullMBFGS: return "mbfgs";
    case Variant::MLBFGS: return "mlbfgs";
    case Variant::AggMBFGS: return "agg";
    }
    return "?";
}

Variant parse_variant(std::string_view name)
{
    if (name == "mbfgs" || name == "full")
        return Variant::FullMBFGS;
    if (name == "mlbfgs")
        return Variant::MLBFGS;
    if (name == "agg" || name == "aggmbfgs")
        return Variant::AggMBFGS;
    throw Error(ErrorCode::InvalidArgument, "unknown variant '" + std::string(name) + "'");
}

std::string_view to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::IterLimit: return "IterLimit";
    case SolveStatus::LineSearchFailure: return "LineSearchFailure";
    }
    return "?";
}

std::string_view to_string(StoreEvent e)
{
    switch (e) {
    case StoreEvent::Append: return "Append";
    case StoreEvent::ParallelDrop: return "ParallelDrop";
    case StoreEvent::Aggregate: return "Aggregate";
    case StoreEvent::FifoEvict: return "FifoEvict";
    case StoreEvent::AggregateFallback: return "AggregateFallback";
    case StoreEvent::SkipDegenerate: return "SkipDegenerate";
    }
    return "?";
}

void SolverConfig::validate() const
{
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "SolverConfig: " + what); };
    if (memory < 3 || memory > 10)
        fail("memory must lie in [3, 10]");
    if (!(grad_tol > 0.0))
        fail("grad_tol must be positive");
    if (max_iters < 0)
        fail("max_iters must be non-negative");
    if (!(ls_contraction > 0.0 && ls_contraction < 1.0))
        fail("ls_contraction must lie in (0, 1)");
    if (!(ls_sufficient > 0.0 && ls_sufficient < 1.0))
        fail("ls_sufficient must lie in (0, 1)");
    if (ls_max_backtracks < 0)
        fail("ls_max_backtracks must be non-negative");
    if (!(gamma0 > 0.0))
        fail("gamma0 must be positive");
    if (!(dependence_tol > 0.0))
        fail("dependence_tol must be positive");
}

namespace {

struct SearchOutcome {
    std::optional<LineSearchResult> accepted;
    long evals = 0;
};

SearchOutcome armijo_search(const std::function<double(const Vector&)>& f, const Vector& x, const Vector& d,
                            double gd, double f_x, const SolverConfig& cfg)
{
    SearchOutcome out;
    double alpha = 1.0;
    for (int j = 0; j <= cfg.ls_max_backtracks; ++j) {
        const double trial = f(x + alpha * d);
        ++out.evals;
        if (std::isfinite(trial) && trial <= f_x + cfg.ls_sufficient * alpha * gd) {
            out.accepted = LineSearchResult{alpha, trial, out.evals};
            return out;
        }
        alpha *= cfg.ls_contraction;
    }
    return out;
}

double inf_norm(const Vector& v)
{
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

Matrix columns_of(std::span<const CurvaturePair> pairs, Index n)
{
    Matrix S(n, static_cast<Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i)
        S.col(static_cast<Index>(i)) = pairs[i].s;
    return S;
}

// Factor the window, dropping the oldest pairs until the s-columns are
// numerically independent. The newest pair is always kept.
GramCholesky refactor(std::vector<CurvaturePair>& pairs, Index n)
{
    for (;;) {
        try {
            return rebuild_factor(columns_of(pairs, n));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RankDeficient || pairs.size() <= 1)
                throw;
            pairs.erase(pairs.begin());
        }
    }
}

} // namespace

LineSearchResult armijo_backtracking(const std::function<double(const Vector&)>& f, const Vector& x,
                                     const Vector& d, const Vector& g, double f_x, const SolverConfig& cfg)
{
    const double gd = g.dot(d);
    if (!(gd < 0.0))
        throw Error(ErrorCode::NotDescent, "armijo_backtracking: g^T d must be negative");
    SearchOutcome out = armijo_search(f, x, d, gd, f_x, cfg);
    if (!out.accepted)
        throw Error(ErrorCode::LineSearchFailure,
                    "armijo_backtracking: no acceptable step after " + std::to_string(cfg.ls_max_backtracks) +
                        " reductions");
    return *out.accepted;
}

StoreUpdate step_store_update(DisplacementStore store, const CurvaturePair& pair, double gamma0,
                              double dependence_tol)
{
    if (!(pair.rho > 0.0))
        throw Error(ErrorCode::DegenerateCurvature, "step_store_update: pair with non-positive curvature");
    const Index n = pair.s.size();
    const std::size_t capacity = store.capacity();
    std::vector<CurvaturePair> pairs(store.pairs().begin(), store.pairs().end());

    std::optional<GramAppendResult> appended;
    try {
        appended = gram_append(store.gram(), columns_of(pairs, n), pair.s, dependence_tol);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NumericalDowndateFailure)
            throw;
    }

    StoreUpdate out{DisplacementStore(capacity), StoreEvent::Append};
    if (!appended) {
        // Rounding made the augmented Gram indefinite: treat as dependence on
        // the oldest side and let the refactorization shed pairs.
        pairs.push_back(pair);
        if (pairs.size() > capacity)
            pairs.erase(pairs.begin());
        GramCholesky gram = refactor(pairs, n);
        out.event = StoreEvent::FifoEvict;
        out.store = StoreAccess::make(std::move(pairs), std::move(gram), capacity);
        return out;
    }

    const DependenceReport& rep = appended->report;
    switch (rep.kind) {
    case DependenceKind::Independent: {
        GramCholesky gram = std::move(appended->chol);
        pairs.push_back(pair);
        if (pairs.size() > capacity) {
            // The oldest displacement is the last factor column; its removal
            // leaves the leading block as the factor of the rest.
            pairs.erase(pairs.begin());
            const auto m = static_cast<Index>(pairs.size());
            gram.L = gram.L.topLeftCorner(m, m).eval();
            out.event = StoreEvent::FifoEvict;
        }
        gram.order_map.resize(pairs.size());
        for (std::size_t c = 0; c < pairs.size(); ++c)
            gram.order_map[c] = static_cast<Index>(pairs.size() - 1 - c);
        out.store = StoreAccess::make(std::move(pairs), std::move(gram), capacity);
        return out;
    }
    case DependenceKind::ParallelNewest: {
        pairs.push_back(pair);
        try {
            pairs = drop_parallel_pair(pairs, rep.sigma(0));
            out.event = StoreEvent::ParallelDrop;
        } catch (const Error&) {
            pairs.erase(pairs.end() - 2);
            out.event = StoreEvent::AggregateFallback;
        }
        break;
    }
    case DependenceKind::DependentAt: {
        pairs.push_back(pair);
        const auto dep = static_cast<std::size_t>(rep.dependent_store_index);
        const Vector sigma = rep.sigma.reverse();
        try {
            pairs = aggregate_pair(pairs, dep, sigma, gamma0);
            out.event = StoreEvent::Aggregate;
        } catch (const Error&) {
            pairs.erase(pairs.begin() + static_cast<std::ptrdiff_t>(dep));
            out.event = StoreEvent::AggregateFallback;
        }
        break;
    }
    }
    while (pairs.size() > capacity)
        pairs.erase(pairs.begin());
    GramCholesky gram = refactor(pairs, n);
    out.store = StoreAccess::make(std::move(pairs), std::move(gram), capacity);
    return out;
}

SolveResult minimize(const Problem& problem, const SolverConfig& cfg, const IterationObserver& observer)
{
    cfg.validate();
    if (!problem.f || !problem.grad)
        throw Error(ErrorCode::InvalidArgument, "minimize: problem lacks an evaluator");
    const Index n = problem.x0.size();
    if (n == 0 || !problem.x0.allFinite())
        throw Error(ErrorCode::InvalidArgument, "minimize: starting point must be finite and non-empty");

    SolveResult res;
    Vector x = problem.x0;
    double f = problem.f(x);
    ++res.func_evals;
    Vector g = problem.grad(x);
    ++res.grad_evals;
    const double tol = cfg.grad_tol * std::max(1.0, inf_norm(g));

    double gamma = cfg.gamma0;
    Matrix B;
    std::vector<CurvaturePair> window;
    DisplacementStore store(static_cast<std::size_t>(cfg.memory));
    auto reset_memory = [&] {
        gamma = cfg.gamma0;
        if (cfg.variant == Variant::FullMBFGS)
            B = Matrix::Identity(n, n) / cfg.gamma0;
        window.clear();
        store = DisplacementStore(static_cast<std::size_t>(cfg.memory));
    };
    reset_memory();

    auto direction = [&]() -> Vector {
        switch (cfg.variant) {
        case Variant::FullMBFGS: {
            Eigen::LLT<Matrix> llt(B);
            if (llt.info() != Eigen::Success)
                return Vector();
            return -llt.solve(g);
        }
        case Variant::MLBFGS: return two_loop_direction(window, g, gamma);
        case Variant::AggMBFGS: return two_loop_direction(store.pairs(), g, gamma);
        }
        return Vector();
    };

    res.status = SolveStatus::IterLimit;
    if (inf_norm(g) <= tol)
        res.status = SolveStatus::Converged;

    while (res.status != SolveStatus::Converged && res.iters < cfg.max_iters) {
        Vector d = direction();
        double gd = d.size() == n ? g.dot(d) : 0.0;
        if (!(gd < 0.0) || !d.allFinite()) {
            // Lost positive definiteness to rounding; restart from the initial matrix.
            reset_memory();
            d = direction();
            gd = g.dot(d);
        }

        SearchOutcome ls = armijo_search(problem.f, x, d, gd, f, cfg);
        res.func_evals += ls.evals;
        if (!ls.accepted) {
            res.status = SolveStatus::LineSearchFailure;
            break;
        }

        Vector x_new = x + ls.accepted->alpha * d;
        Vector g_new = problem.grad(x_new);
        ++res.grad_evals;
        if (!g_new.allFinite()) {
            res.status = SolveStatus::LineSearchFailure;
            break;
        }

        IterationTrace trace;
        trace.alpha = ls.accepted->alpha;
        try {
            const CurvaturePair pair =
                modified_displacement(x_new - x, g_new - g, g, cfg.lifukushima_scaling);
            switch (cfg.variant) {
            case Variant::FullMBFGS:
                B = hessian_update_dense(B, pair);
                trace.event = StoreEvent::Append;
                break;
            case Variant::MLBFGS:
                window.push_back(pair);
                trace.event = StoreEvent::Append;
                if (window.size() > static_cast<std::size_t>(cfg.memory)) {
                    window.erase(window.begin());
                    trace.event = StoreEvent::FifoEvict;
                }
                break;
            case Variant::AggMBFGS: {
                StoreUpdate upd = step_store_update(std::move(store), pair, gamma, cfg.dependence_tol);
                store = std::move(upd.store);
                trace.event = upd.event;
                break;
            }
            }
            if (cfg.bb_scaling && cfg.variant != Variant::FullMBFGS)
                gamma = 1.0 / (pair.rho * pair.ybar.squaredNorm());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateCurvature && e.code() != ErrorCode::ZeroDisplacement)
                throw;
            trace.event = StoreEvent::SkipDegenerate;
        }

        switch (trace.event) {
        case StoreEvent::Aggregate: ++res.agg_count; break;
        case StoreEvent::ParallelDrop: ++res.parallel_drops; break;
        case StoreEvent::FifoEvict: ++res.fifo_evictions; break;
        case StoreEvent::AggregateFallback: ++res.aggregation_fallbacks; break;
        case StoreEvent::SkipDegenerate: ++res.skipped_updates; break;
        case StoreEvent::Append: break;
        }

        x = std::move(x_new);
        f = ls.accepted->f_new;
        g = std::move(g_new);
        ++res.iters;

        trace.k = res.iters;
        trace.f = f;
        trace.grad_inf = inf_norm(g);
        trace.store_size = cfg.variant == Variant::AggMBFGS ? store.size()
                           : cfg.variant == Variant::MLBFGS ? window.size()
                                                            : 0;
        if (observer)
            observer(trace, x);
        if (trace.grad_inf <= tol)
            res.status = SolveStatus::Converged;
    }

    res.x_final = std::move(x);
    res.f_final = f;
    res.grad_inf_norm = inf_norm(g);
    return res;
}

} // namespace mbfgs
