#include "mbfgs/verify.hpp"

#include "mbfgs/aggregation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <ostream>

namespace mbfgs {

Vector InstanceGenerator::gaussian(Index n)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector v(n);
    for (auto& x : v) x = nd(rng_);
    return v;
}

Matrix InstanceGenerator::gaussian(Index rows, Index cols)
{
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng_);
    return m;
}

Matrix InstanceGenerator::spd(Index n)
{
    const Eigen::HouseholderQR<Matrix> qr(gaussian(n, n));
    const Matrix Q = qr.householderQ();
    Vector eig(n);
    for (auto& e : eig) e = uniform(0.5, 4.5);
    Matrix out = Q * eig.asDiagonal() * Q.transpose();
    return 0.5 * (out + out.transpose());
}

CurvaturePair InstanceGenerator::pair_for(const Vector& s)
{
    for (;;) {
        const Vector z = gaussian(s.size());
        const Vector ybar = z + uniform(0.5, 2.0) * (z.norm() / s.norm()) * s;
        if (s.dot(ybar) >= 0.1 * s.norm() * ybar.norm()) return make_pair_from_ybar(s, ybar);
    }
}

int InstanceGenerator::uniform_int(int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
}

double InstanceGenerator::uniform(double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
}

namespace {

SuiteResult timed_suite(const std::string& name, double tol, const VerifyOptions& opt,
                        const std::function<double(InstanceGenerator&, int)>& trial)
{
    SuiteResult r;
    r.name = name;
    r.tol = tol;
    r.trials = opt.trials;
    InstanceGenerator gen(opt.seed);
    const auto t0 = std::chrono::steady_clock::now();
    for (int t = 0; t < opt.trials; ++t) {
        const double e = trial(gen, t);
        // NaN must fail the suite, so compare with !(e <= worst).
        if (!(e <= r.worst)) r.worst = e;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.passed = r.worst <= tol;
    return r;
}

/// Window for the aggregation suites: `pre` older pairs, the dependent pair s0 = S sigma, then m pairs.
struct AggregationInstance {
    std::vector<CurvaturePair> pairs;
    std::size_t dependent = 0;
    Vector sigma;
    double gamma0 = 1.0;
};

AggregationInstance make_aggregation_instance(InstanceGenerator& gen, const VerifyOptions& opt)
{
    AggregationInstance inst;
    const int n = gen.uniform_int(4, std::max(4, opt.agg_max_n));
    const int m = gen.uniform_int(2, std::clamp(opt.agg_max_m, 2, n - 1));
    const int pre = gen.uniform_int(0, std::min(2, n - m - 1));
    for (int i = 0; i < pre; ++i) inst.pairs.push_back(gen.random_pair(n));
    const Matrix S = gen.gaussian(n, m);
    inst.sigma = gen.gaussian(m);
    inst.pairs.push_back(gen.pair_for(S * inst.sigma));
    for (int i = 0; i < m; ++i) inst.pairs.push_back(gen.pair_for(S.col(i)));
    inst.dependent = static_cast<std::size_t>(pre);
    inst.gamma0 = gen.uniform(0.5, 2.5);
    return inst;
}

} // namespace

SuiteResult verify_compact(const VerifyOptions& opt)
{
    return timed_suite("compact_vs_iterative", 1e-10, opt, [&](InstanceGenerator& gen, int) {
        const int n = gen.uniform_int(2, std::max(2, opt.max_n));
        const int m = gen.uniform_int(1, std::clamp(opt.max_m, 1, n));
        const Matrix W0 = gen.spd(n);
        std::vector<CurvaturePair> pairs;
        for (int i = 0; i < m; ++i) pairs.push_back(gen.random_pair(n));
        return rel_frobenius(mbfgs_compact(W0, pairs), mbfgs_iterative(W0, pairs));
    });
}

SuiteResult verify_parallel(const VerifyOptions& opt)
{
    static constexpr double kSigmas[] = {3.0, -3.0, 1.0, -1.0, 0.01};
    return timed_suite("parallel_drop", 1e-12, opt, [&](InstanceGenerator& gen, int t) {
        const int n = gen.uniform_int(2, std::max(2, opt.max_n));
        const int pre = gen.uniform_int(0, std::min(3, n - 1));
        const double sigma = kSigmas[t % 5];
        const Matrix W0 = gen.spd(n);
        std::vector<CurvaturePair> pairs;
        for (int i = 0; i < pre; ++i) pairs.push_back(gen.random_pair(n));
        const CurvaturePair last = gen.random_pair(n);
        pairs.push_back(gen.pair_for(sigma * last.s));
        pairs.push_back(last);
        const auto reduced = drop_parallel_pair(pairs, sigma);
        return rel_frobenius(mbfgs_iterative(W0, reduced), mbfgs_iterative(W0, pairs));
    });
}

SuiteResult verify_aggregation(const VerifyOptions& opt)
{
    return timed_suite("aggregation_equivalence", 1e-7, opt, [&](InstanceGenerator& gen, int) {
        const auto inst = make_aggregation_instance(gen, opt);
        const Index n = inst.pairs.front().s.size();
        const Matrix W0 = inst.gamma0 * Matrix::Identity(n, n);
        const auto out = aggregate_pair(inst.pairs, inst.dependent, inst.sigma, inst.gamma0);
        return rel_frobenius(mbfgs_iterative(W0, out), mbfgs_iterative(W0, inst.pairs));
    });
}

SuiteResult verify_curvature_preserved(const VerifyOptions& opt)
{
    return timed_suite("aggregated_curvature", 1e-10, opt, [&](InstanceGenerator& gen, int) {
        const auto inst = make_aggregation_instance(gen, opt);
        const auto out = aggregate_pair(inst.pairs, inst.dependent, inst.sigma, inst.gamma0);
        double worst = 0.0;
        for (std::size_t i = inst.dependent; i < out.size(); ++i) {
            const auto& orig = inst.pairs[i + 1];
            const double ref = orig.s.dot(orig.ybar);
            worst = std::max(worst, std::abs(out[i].s.dot(out[i].ybar) - ref) / std::abs(ref));
        }
        return worst;
    });
}

SuiteResult verify_quadratic_residual(const VerifyOptions& opt)
{
    return timed_suite("quadratic_residual", 1e-7, opt, [&](InstanceGenerator& gen, int) {
        const auto inst = make_aggregation_instance(gen, opt);
        AggregationWorkspace ws;
        aggregate_pair(inst.pairs, inst.dependent, inst.sigma, inst.gamma0, &ws);
        const double lambda_min = Eigen::SelfAdjointEigenSolver<Matrix>(ws.M, Eigen::EigenvaluesOnly).eigenvalues()(0);
        const double scale = ws.varpi.squaredNorm() + ws.Psi.squaredNorm() / lambda_min;
        return quadratic_residual(ws, ws.A) / std::max(scale, 1e-300);
    });
}

SuiteResult verify_two_loop(const VerifyOptions& opt)
{
    return timed_suite("two_loop_vs_dense", 1e-10, opt, [&](InstanceGenerator& gen, int) {
        const int n = gen.uniform_int(2, std::max(2, opt.max_n));
        const int m = gen.uniform_int(0, std::clamp(opt.max_m, 0, n));
        const double gamma0 = gen.uniform(0.1, 3.0);
        std::vector<CurvaturePair> pairs;
        for (int i = 0; i < m; ++i) pairs.push_back(gen.random_pair(n));
        const Vector g = gen.gaussian(n);
        const Vector ref = -(mbfgs_iterative(gamma0 * Matrix::Identity(n, n), pairs) * g);
        return (two_loop_direction(pairs, g, gamma0) - ref).norm() / ref.norm();
    });
}

SuiteResult verify_secant(const VerifyOptions& opt)
{
    return timed_suite("secant", 1e-10, opt, [&](InstanceGenerator& gen, int) {
        const int n = gen.uniform_int(2, std::max(2, opt.max_n));
        const Matrix B = gen.spd(n);
        const CurvaturePair p = gen.random_pair(n);
        return (hessian_update_dense(B, p) * p.s - p.ybar).norm() / p.ybar.norm();
    });
}

std::vector<SuiteResult> run_all_suites(const VerifyOptions& opt)
{
    return {verify_compact(opt),         verify_parallel(opt),           verify_aggregation(opt),
            verify_curvature_preserved(opt), verify_quadratic_residual(opt), verify_two_loop(opt),
            verify_secant(opt)};
}

void print_suite(std::ostream& out, const SuiteResult& r)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %-24s trials=%d worst=%.3e tol=%.1e time=%.2fs", r.passed ? "PASS" : "FAIL",
                  r.name.c_str(), r.trials, r.worst, r.tol, r.seconds);
    out << buf << '\n';
}

} // namespace mbfgs
