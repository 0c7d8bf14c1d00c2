#ifndef MBFGS_BENCH_HPP
#define MBFGS_BENCH_HPP

#include "mbfgs/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mbfgs {

inline constexpr const char* kCsvHeader =
    "name,dim,variant,iters,func_evals,agg_count,final_f,final_gnorm,status,wall_ms";

struct RunRecord {
    std::string name;
    Index dim = 0;
    Variant variant = Variant::AggMBFGS;
    long iters = 0;
    long func_evals = 0;
    long agg_count = 0;
    double final_f = 0.0;
    double final_gnorm = 0.0;
    SolveStatus status = SolveStatus::IterLimit;
    double wall_ms = 0.0;
};

struct BenchJob {
    std::string name;
    Index dim = 0;
};

RunRecord run_one(const Problem& problem, const SolverConfig& cfg);

/**
 * Run every (job, variant) combination. Records come back sorted by
 * (name, dim, variant name) whatever the number of worker threads.
 */
std::vector<RunRecord> run_bench(const std::vector<BenchJob>& jobs, const std::vector<Variant>& variants,
                                 const SolverConfig& base, int threads = 1);

std::string csv_row(const RunRecord& r);
void write_csv(std::ostream& out, const std::vector<RunRecord>& records);
void write_table(std::ostream& out, const std::vector<RunRecord>& records);

/// One "name dim" pair per line; '#' starts a comment, blank lines are skipped.
std::vector<BenchJob> parse_job_list(std::istream& in);

/// Comma-separated variant names.
std::vector<Variant> parse_variant_list(const std::string& csv);

/// Exit code for a single solve: 0 Converged, 2 IterLimit, 3 LineSearchFailure.
int exit_code_for(SolveStatus s);

} // namespace mbfgs

#endif
