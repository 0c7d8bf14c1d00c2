#include "mbfgs/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

// Objective definitions follow the CUTEst SIF files of the same names
// (collections of Conn, Gould and Toint; Dixon and Maany; Toint; Powell;
// Broyden). Dimensions are free parameters wherever the family allows.

namespace mbfgs {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void bad_dim(const std::string& name, Index n, const std::string& rule)
{
    throw Error(ErrorCode::InvalidDimension, name + ": n = " + std::to_string(n) + " (" + rule + ")");
}

Problem make(std::string name, Index n, Vector x0, std::function<double(const Vector&)> f,
             std::function<Vector(const Vector&)> g)
{
    Problem p;
    p.name = std::move(name);
    p.dim = n;
    p.x0 = std::move(x0);
    p.f = std::move(f);
    p.grad = std::move(g);
    return p;
}

// sum_{i<n} (-4 x_i + 3) + (x_i^2 + x_n^2)^2
Problem arwhead(Index n)
{
    if (n < 2)
        bad_dim("ARWHEAD", n, "n >= 2");
    auto f = [n](const Vector& x) {
        const double xn2 = x(n - 1) * x(n - 1);
        double s = 0.0;
        for (Index i = 0; i < n - 1; ++i) {
            const double q = x(i) * x(i) + xn2;
            s += -4.0 * x(i) + 3.0 + q * q;
        }
        return s;
    };
    auto g = [n](const Vector& x) {
        Vector out = Vector::Zero(n);
        const double xn = x(n - 1);
        for (Index i = 0; i < n - 1; ++i) {
            const double q = x(i) * x(i) + xn * xn;
            out(i) = -4.0 + 4.0 * q * x(i);
            out(n - 1) += 4.0 * q * xn;
        }
        return out;
    };
    return make("ARWHEAD", n, Vector::Ones(n), f, g);
}

// sum_i 4 (x_i^2 - x_1)^2 + (x_i - 1)^2
Problem liarwhd(Index n)
{
    if (n < 2)
        bad_dim("LIARWHD", n, "n >= 2");
    auto f = [n](const Vector& x) {
        double s = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double t = x(i) * x(i) - x(0);
            s += 4.0 * t * t + (x(i) - 1.0) * (x(i) - 1.0);
        }
        return s;
    };
    auto g = [n](const Vector& x) {
        Vector out = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
            const double t = x(i) * x(i) - x(0);
            out(i) += 16.0 * t * x(i) + 2.0 * (x(i) - 1.0);
            out(0) -= 8.0 * t;
        }
        return out;
    };
    return make("LIARWHD", n, Vector::Constant(n, 4.0), f, g);
}

// Extended Powell singular function, blocks of four.
Problem powellsg(Index n)
{
    if (n < 4 || n % 4 != 0)
        bad_dim("POWELLSG", n, "n must be a positive multiple of 4");
    auto f = [n](const Vector& x) {
        double s = 0.0;
        for (Index i = 0; i < n; i += 4) {
            const double t1 = x(i) + 10.0 * x(i + 1);
            const double t2 = x(i + 2) - x(i + 3);
            const double t3 = x(i + 1) - 2.0 * x(i + 2);
            const double t4 = x(i) - x(i + 3);
            s += t1 * t1 + 5.0 * t2 * t2 + std::pow(t3, 4) + 10.0 * std::pow(t4, 4);
        }
        return s;
    };
    auto g = [n](const Vector& x) {
        Vector out(n);
        for (Index i = 0; i < n; i += 4) {
            const double t1 = x(i) + 10.0 * x(i + 1);
            const double t2 = x(i + 2) - x(i + 3);
            const double t3 = x(i + 1) - 2.0 * x(i + 2);
            const double t4 = x(i) - x(i + 3);
            const double c3 = 4.0 * t3 * t3 * t3;
            const double c4 = 40.0 * t4 * t4 * t4;
            out(i) = 2.0 * t1 + c4;
            out(i + 1) = 20.0 * t1 + c3;
            out(i + 2) = 10.0 * t2 - 2.0 * c3;
            out(i + 3) = -10.0 * t2 - c4;
        }
        return out;
    };
    Vector x0(n);
    for (Index i = 0; i < n; i += 4)
        x0.segment(i, 4) << 3.0, -1.0, 0.0, 1.0;
    return make("POWELLSG", n, x0, f, g);
}

// sum_{i<=n-4} (-4 x_i + 3)^2 + (x_i^2 + 2 x_{i+1}^2 + 3 x_{i+2}^2 + 4 x_{i+3}^2 + 5 x_n^2)^2
Problem bdqrtic(Index n)
{
    if (n < 5)
        bad_dim("BDQRTIC", n, "n >= 5");
    auto quad = [n](const Vector& x, Index i) {
        return x(i) * x(i) + 2.0 * x(i + 1) * x(i + 1) + 3.0 * x(i + 2) * x(i + 2) + 4.0 * x(i + 3) * x(i + 3) +
               5.0 * x(n - 1) * x(n - 1);
    };
    auto f = [n, quad](const Vector& x) {
        double s = 0.0;
        for (Index i = 0; i + 4 < n; ++i) {
            const double e = -4.0 * x(i) + 3.0;
            const double q = quad(x, i);
            s += e * e + q * q;
        }
        return s;
    };
    auto g = [n, quad](const Vector& x) {
        Vector out = Vector::Zero(n);
        for (Index i = 0; i + 4 < n; ++i) {
            const double e = -4.0 * x(i) + 3.0;
            const double q2 = 2.0 * quad(x, i);
            out(i) += -8.0 * e + q2 * 2.0 * x(i);
            out(i + 1) += q2 * 4.0 * x(i + 1);
            out(i + 2) += q2 * 6.0 * x(i + 2);
            out(i + 3) += q2 * 8.0 * x(i + 3);
            out(n - 1) += q2 * 10.0 * x(n - 1);
        }
        return out;
    };
    return make("BDQRTIC", n, Vector::Ones(n), f, g);
}

// Broyden tridiagonal residuals (3 - 2 x_i) x_i - x_{i-1} - 2 x_{i+1} + 1, squared.
Problem broydn3dls(Index n)
{
    if (n < 1)
        bad_dim("BROYDN3DLS", n, "n >= 1");
    auto residual = [n](const Vector& x, Index i) {
        const double prev = i > 0 ? x(i - 1) : 0.0;
        const double next = i + 1 < n ? x(i + 1) : 0.0;
        return (3.0 - 2.0 * x(i)) * x(i) - prev - 2.0 * next + 1.0;
    };
    auto f = [n, residual](const Vector& x) {
        double s = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double r = residual(x, i);
            s += r * r;
        }
        return s;
    };
    auto g = [n, residual](const Vector& x) {
        Vector out = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
            const double r2 = 2.0 * residual(x, i);
            out(i) += r2 * (3.0 - 4.0 * x(i));
            if (i > 0)
                out(i - 1) -= r2;
            if (i + 1 < n)
                out(i + 1) -= 2.0 * r2;
        }
        return out;
    };
    return make("BROYDN3DLS", n, Vector::Constant(n, -1.0), f, g);
}

struct DixmaanParams {
    double alpha, beta, gamma, delta;
    std::array<int, 4> k;
};

// Dixon-Maany family, n = 3M:
//   1 + sum alpha x_i^2 (i/n)^k1 + sum_{i<n} beta x_i^2 (x_{i+1} + x_{i+1}^2)^2 (i/n)^k2
//     + sum_{i<=2M} gamma x_i^2 x_{i+M}^4 (i/n)^k3 + sum_{i<=M} delta x_i x_{i+2M} (i/n)^k4
Problem dixmaan(const std::string& name, Index n, DixmaanParams p)
{
    if (n < 3 || n % 3 != 0)
        bad_dim(name, n, "n must be a positive multiple of 3");
    const Index M = n / 3;
    auto weight = [n](Index i, int k) { return std::pow(static_cast<double>(i + 1) / static_cast<double>(n), k); };
    auto f = [n, M, p, weight](const Vector& x) {
        double s = 1.0;
        for (Index i = 0; i < n; ++i)
            s += p.alpha * x(i) * x(i) * weight(i, p.k[0]);
        if (p.beta != 0.0) {
            for (Index i = 0; i + 1 < n; ++i) {
                const double t = x(i + 1) + x(i + 1) * x(i + 1);
                s += p.beta * x(i) * x(i) * t * t * weight(i, p.k[1]);
            }
        }
        for (Index i = 0; i < 2 * M; ++i)
            s += p.gamma * x(i) * x(i) * std::pow(x(i + M), 4) * weight(i, p.k[2]);
        for (Index i = 0; i < M; ++i)
            s += p.delta * x(i) * x(i + 2 * M) * weight(i, p.k[3]);
        return s;
    };
    auto g = [n, M, p, weight](const Vector& x) {
        Vector out = Vector::Zero(n);
        for (Index i = 0; i < n; ++i)
            out(i) += 2.0 * p.alpha * x(i) * weight(i, p.k[0]);
        if (p.beta != 0.0) {
            for (Index i = 0; i + 1 < n; ++i) {
                const double w = p.beta * weight(i, p.k[1]);
                const double t = x(i + 1) + x(i + 1) * x(i + 1);
                out(i) += 2.0 * w * x(i) * t * t;
                out(i + 1) += 2.0 * w * x(i) * x(i) * t * (1.0 + 2.0 * x(i + 1));
            }
        }
        for (Index i = 0; i < 2 * M; ++i) {
            const double w = p.gamma * weight(i, p.k[2]);
            const double xm = x(i + M);
            out(i) += 2.0 * w * x(i) * std::pow(xm, 4);
            out(i + M) += 4.0 * w * x(i) * x(i) * xm * xm * xm;
        }
        for (Index i = 0; i < M; ++i) {
            const double w = p.delta * weight(i, p.k[3]);
            out(i) += w * x(i + 2 * M);
            out(i + 2 * M) += w * x(i);
        }
        return out;
    };
    return make(name, n, Vector::Constant(n, 2.0), f, g);
}

// Chained Rosenbrock with Toint's weights: sum_{i>=2} 16 a_i^2 (x_{i-1} - x_i^2)^2 + (x_i - 1)^2.
Problem chnrosnb(Index n)
{
    static constexpr std::array<double, 50> kAlpha = {
        1.25, 1.40, 2.40, 1.40, 1.75, 1.20, 2.25, 1.20, 1.00, 1.10, 1.50, 1.60, 1.25, 1.25, 1.20, 1.20, 1.40,
        0.50, 0.50, 1.25, 1.80, 0.75, 1.25, 1.40, 1.60, 2.00, 1.00, 1.60, 1.25, 2.75, 1.25, 1.25, 1.25, 3.00,
        1.50, 2.00, 1.25, 1.40, 1.80, 1.50, 2.20, 1.40, 1.50, 1.25, 2.00, 1.50, 1.25, 1.40, 0.60, 1.50};
    if (n != 50)
        bad_dim("CHNROSNB", n, "fixed at n = 50");
    auto f = [n](const Vector& x) {
        double s = 0.0;
        for (Index i = 1; i < n; ++i) {
            const double w = 16.0 * kAlpha[i] * kAlpha[i];
            const double t = x(i - 1) - x(i) * x(i);
            s += w * t * t + (x(i) - 1.0) * (x(i) - 1.0);
        }
        return s;
    };
    auto g = [n](const Vector& x) {
        Vector out = Vector::Zero(n);
        for (Index i = 1; i < n; ++i) {
            const double w = 16.0 * kAlpha[i] * kAlpha[i];
            const double t = x(i - 1) - x(i) * x(i);
            out(i - 1) += 2.0 * w * t;
            out(i) += -4.0 * w * t * x(i) + 2.0 * (x(i) - 1.0);
        }
        return out;
    };
    return make("CHNROSNB", n, Vector::Constant(n, -1.0), f, g);
}

// (x_1 - x_2)^2 + sum_{i<=n-2} (x_i + x_{i+1} + x_n)^4 + (x_{n-1} + x_n)^2
Problem nondquar(Index n)
{
    if (n < 3)
        bad_dim("NONDQUAR", n, "n >= 3");
    auto f = [n](const Vector& x) {
        double s = (x(0) - x(1)) * (x(0) - x(1));
        for (Index i = 0; i + 2 < n; ++i)
            s += std::pow(x(i) + x(i + 1) + x(n - 1), 4);
        const double t = x(n - 2) + x(n - 1);
        return s + t * t;
    };
    auto g = [n](const Vector& x) {
        Vector out = Vector::Zero(n);
        out(0) += 2.0 * (x(0) - x(1));
        out(1) -= 2.0 * (x(0) - x(1));
        for (Index i = 0; i + 2 < n; ++i) {
            const double t = x(i) + x(i + 1) + x(n - 1);
            const double c = 4.0 * t * t * t;
            out(i) += c;
            out(i + 1) += c;
            out(n - 1) += c;
        }
        const double t = x(n - 2) + x(n - 1);
        out(n - 2) += 2.0 * t;
        out(n - 1) += 2.0 * t;
        return out;
    };
    Vector x0(n);
    for (Index i = 0; i < n; ++i)
        x0(i) = i % 2 == 0 ? 1.0 : -1.0;
    return make("NONDQUAR", n, x0, f, g);
}

// (x_1 - 1)^2 + sum_{i>=2} (x_1^2 - x_i^2)^2
Problem tquartic(Index n)
{
    if (n < 2)
        bad_dim("TQUARTIC", n, "n >= 2");
    auto f = [n](const Vector& x) {
        double s = (x(0) - 1.0) * (x(0) - 1.0);
        const double x12 = x(0) * x(0);
        for (Index i = 1; i < n; ++i) {
            const double t = x12 - x(i) * x(i);
            s += t * t;
        }
        return s;
    };
    auto g = [n](const Vector& x) {
        Vector out = Vector::Zero(n);
        out(0) = 2.0 * (x(0) - 1.0);
        const double x12 = x(0) * x(0);
        for (Index i = 1; i < n; ++i) {
            const double t = x12 - x(i) * x(i);
            out(0) += 4.0 * t * x(0);
            out(i) = -4.0 * t * x(i);
        }
        return out;
    };
    return make("TQUARTIC", n, Vector::Constant(n, 0.1), f, g);
}

// x_1^2 / 2 + sum_{1<i<n} (x_1 + x_i + x_n)^4 + x_n^2 / 2
Problem box(Index n)
{
    if (n < 3)
        bad_dim("BOX", n, "n >= 3");
    auto f = [n](const Vector& x) {
        double s = 0.5 * (x(0) * x(0) + x(n - 1) * x(n - 1));
        for (Index i = 1; i + 1 < n; ++i)
            s += std::pow(x(0) + x(i) + x(n - 1), 4);
        return s;
    };
    auto g = [n](const Vector& x) {
        Vector out = Vector::Zero(n);
        out(0) = x(0);
        out(n - 1) = x(n - 1);
        for (Index i = 1; i + 1 < n; ++i) {
            const double t = x(0) + x(i) + x(n - 1);
            const double c = 4.0 * t * t * t;
            out(0) += c;
            out(i) += c;
            out(n - 1) += c;
        }
        return out;
    };
    return make("BOX", n, Vector::Ones(n), f, g);
}

} // namespace

const std::vector<ProblemInfo>& catalog()
{
    static const std::vector<ProblemInfo> infos = {
        {"ARWHEAD", 100, 5000, 0.0},    {"LIARWHD", 100, 5000, 0.0},  {"POWELLSG", 100, 5000, 0.0},
        {"BDQRTIC", 100, 5000, kNaN},   {"BROYDN3DLS", 100, 5000, 0.0}, {"DIXMAANA", 99, 3000, 1.0},
        {"DIXMAANE", 99, 3000, 1.0},    {"DIXMAANI", 99, 3000, 1.0},  {"CHNROSNB", 50, 50, 0.0},
        {"NONDQUAR", 100, 5000, 0.0},   {"TQUARTIC", 100, 5000, 0.0}, {"BOX", 100, 10000, 0.0},
    };
    return infos;
}

Problem make_problem(const std::string& name, Index dim)
{
    const auto& infos = catalog();
    const auto it = std::find_if(infos.begin(), infos.end(), [&](const ProblemInfo& p) { return p.name == name; });
    if (it == infos.end())
        throw Error(ErrorCode::UnknownProblem, "no problem named '" + name + "'");
    const Index n = dim > 0 ? dim : it->desk_dim;

    if (name == "ARWHEAD") return arwhead(n);
    if (name == "LIARWHD") return liarwhd(n);
    if (name == "POWELLSG") return powellsg(n);
    if (name == "BDQRTIC") return bdqrtic(n);
    if (name == "BROYDN3DLS") return broydn3dls(n);
    if (name == "DIXMAANA") return dixmaan(name, n, {1.0, 0.0, 0.125, 0.125, {0, 0, 0, 0}});
    if (name == "DIXMAANE") return dixmaan(name, n, {1.0, 0.0, 0.125, 0.125, {1, 0, 0, 1}});
    if (name == "DIXMAANI") return dixmaan(name, n, {1.0, 0.0, 0.125, 0.125, {2, 0, 0, 2}});
    if (name == "CHNROSNB") return chnrosnb(n);
    if (name == "NONDQUAR") return nondquar(n);
    if (name == "TQUARTIC") return tquartic(n);
    return box(n);
}

double fd_gradient_check(const Problem& problem, const Vector& x, double h)
{
    if (!(h > 0.0))
        throw Error(ErrorCode::InvalidArgument, "fd_gradient_check: step must be positive");
    const Vector g = problem.grad(x);
    Vector xp = x;
    double worst = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const double hi = h * std::max(1.0, std::abs(x(i)));
        xp(i) = x(i) + hi;
        const double fp = problem.f(xp);
        xp(i) = x(i) - hi;
        const double fm = problem.f(xp);
        xp(i) = x(i);
        const double fd = (fp - fm) / (2.0 * hi);
        worst = std::max(worst, std::abs(g(i) - fd) / std::max(1.0, std::abs(g(i))));
    }
    return worst;
}

} // namespace mbfgs
