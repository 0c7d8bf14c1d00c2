#ifndef MBFGS_TYPES_HPP
#define MBFGS_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace mbfgs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/** Failure categories raised by the library. */
enum class ErrorCode {
    NotPositiveDiagonal,
    NumericalDowndateFailure,
    ZeroDisplacement,
    RankDeficient,
    NotSPD,
    DegenerateCurvature,
    SingularBbar,
    NegativeDiscriminant,
    LineSearchFailure,
    NotDescent,
    UnknownProblem,
    InvalidDimension,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Relative Frobenius distance ||a - b|| / max(||b||, tiny).
double rel_frobenius(const Matrix& a, const Matrix& b);

} // namespace mbfgs

#endif
