#ifndef MBFGS_VERIFY_HPP
#define MBFGS_VERIFY_HPP

#include "mbfgs/qn_core.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace mbfgs {

struct VerifyOptions {
    int trials = 200;
    /// Upper bounds for the dimension and memory of the random instances.
    int max_n = 50;
    int max_m = 10;
    /// Separate, smaller bounds for the aggregation suite.
    int agg_max_n = 12;
    int agg_max_m = 6;
    std::uint64_t seed = 20240611;
};

struct SuiteResult {
    std::string name;
    int trials = 0;
    double worst = 0.0;
    double tol = 0.0;
    double seconds = 0.0;
    bool passed = false;
};

/// Random instance helpers shared by the suites and the tests.
class InstanceGenerator {
public:
    explicit InstanceGenerator(std::uint64_t seed) : rng_(seed) {}

    Vector gaussian(Index n);
    Matrix gaussian(Index rows, Index cols);
    /// Symmetric positive definite with eigenvalues in [0.5, 4.5].
    Matrix spd(Index n);
    /// Pair with s^T ybar >= 0.1 ||s|| ||ybar||.
    CurvaturePair pair_for(const Vector& s);
    CurvaturePair random_pair(Index n) { return pair_for(gaussian(n)); }
    int uniform_int(int lo, int hi);
    double uniform(double lo, double hi);
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// mbfgs_compact against mbfgs_iterative from a random W0 > 0.
SuiteResult verify_compact(const VerifyOptions& opt);
/// Dropping a pair parallel to its successor leaves the matrix unchanged.
SuiteResult verify_parallel(const VerifyOptions& opt);
/// Aggregated store against the full dense update, including interior dependence.
SuiteResult verify_aggregation(const VerifyOptions& opt);
/// s_i^T yhat_i = s_i^T ybar_i for the aggregated pairs.
SuiteResult verify_curvature_preserved(const VerifyOptions& opt);
/// Normalized residual of the quadratic matrix equation for A.
SuiteResult verify_quadratic_residual(const VerifyOptions& opt);
/// two_loop_direction against -W g with the dense matrix.
SuiteResult verify_two_loop(const VerifyOptions& opt);
/// hessian_update_dense satisfies B' s = ybar.
SuiteResult verify_secant(const VerifyOptions& opt);

std::vector<SuiteResult> run_all_suites(const VerifyOptions& opt);

void print_suite(std::ostream& out, const SuiteResult& r);

} // namespace mbfgs

#endif
