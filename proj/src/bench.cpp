#include "mbfgs/bench.hpp"

#include "mbfgs/problems.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace mbfgs {

RunRecord run_one(const Problem& problem, const SolverConfig& cfg)
{
    RunRecord rec;
    rec.name = problem.name;
    rec.dim = problem.dim;
    rec.variant = cfg.variant;
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult res = minimize(problem, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    rec.iters = res.iters;
    rec.func_evals = res.func_evals;
    rec.agg_count = res.agg_count;
    rec.final_f = res.f_final;
    rec.final_gnorm = res.grad_inf_norm;
    rec.status = res.status;
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return rec;
}

std::vector<RunRecord> run_bench(const std::vector<BenchJob>& jobs, const std::vector<Variant>& variants,
                                 const SolverConfig& base, int threads)
{
    if (jobs.empty() || variants.empty()) {
        throw Error(ErrorCode::InvalidArgument, "empty problem or variant list");
    }
    struct Task {
        Problem problem;
        Variant variant;
    };
    // Build problems up front so unknown names fail before any solve starts.
    std::vector<Task> tasks;
    for (const auto& job : jobs) {
        Problem p = make_problem(job.name, job.dim);
        for (Variant v : variants) tasks.push_back({p, v});
    }

    std::vector<RunRecord> out(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            SolverConfig cfg = base;
            cfg.variant = tasks[i].variant;
            out[i] = run_one(tasks[i].problem, cfg);
        }
    };
    const int n_threads = std::clamp<int>(threads, 1, static_cast<int>(tasks.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    std::sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
        if (a.name != b.name) return a.name < b.name;
        if (a.dim != b.dim) return a.dim < b.dim;
        return to_string(a.variant) < to_string(b.variant);
    });
    return out;
}

namespace {

std::string sci(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return buf;
}

} // namespace

std::string csv_row(const RunRecord& r)
{
    std::ostringstream os;
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
    os << r.name << ',' << r.dim << ',' << to_string(r.variant) << ',' << r.iters << ',' << r.func_evals << ','
       << r.agg_count << ',' << sci(r.final_f) << ',' << sci(r.final_gnorm) << ',' << to_string(r.status) << ','
       << wall;
    return os.str();
}

void write_csv(std::ostream& out, const std::vector<RunRecord>& records)
{
    out << kCsvHeader << '\n';
    for (const auto& r : records) out << csv_row(r) << '\n';
}

void write_table(std::ostream& out, const std::vector<RunRecord>& records)
{
    out << std::left << std::setw(12) << "problem" << std::right << std::setw(7) << "dim" << std::setw(8) << "variant"
        << std::setw(8) << "iters" << std::setw(8) << "fevals" << std::setw(6) << "agg" << std::setw(18) << "f"
        << std::setw(12) << "|g|_inf" << std::setw(16) << "status" << std::setw(11) << "ms" << '\n';
    for (const auto& r : records) {
        out << std::left << std::setw(12) << r.name << std::right << std::setw(7) << r.dim << std::setw(8)
            << to_string(r.variant) << std::setw(8) << r.iters << std::setw(8) << r.func_evals << std::setw(6)
            << r.agg_count << std::setw(18) << std::setprecision(9) << std::scientific << r.final_f
            << std::setw(12) << std::setprecision(2) << r.final_gnorm << std::setw(16) << to_string(r.status)
            << std::setw(11) << std::fixed << std::setprecision(1) << r.wall_ms << '\n';
        out << std::defaultfloat;
    }
}

std::vector<BenchJob> parse_job_list(std::istream& in)
{
    std::vector<BenchJob> jobs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name)) continue;
        long long dim = 0;
        std::string extra;
        if (!(ls >> dim) || (ls >> extra)) {
            throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(lineno) + ": expected 'name dim'");
        }
        jobs.push_back({name, static_cast<Index>(dim)});
    }
    return jobs;
}

std::vector<Variant> parse_variant_list(const std::string& csv)
{
    std::vector<Variant> out;
    std::istringstream is(csv);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        out.push_back(parse_variant(item));
    }
    return out;
}

int exit_code_for(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Converged: return 0;
    case SolveStatus::IterLimit: return 2;
    case SolveStatus::LineSearchFailure: return 3;
    }
    return 1;
}

} // namespace mbfgs
