#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace itm {

enum class ErrorCode {
    Parse,
    InvalidMap,
    InvalidPoint,
    RangeViolation,
    GeometricDiscontinuity,
    WitnessNotFound,
    NotPeriodic,
    NotEventuallyPeriodic,
    NotInvariant,
    Diverged,
    DimensionMismatch,
    NotInC1,
    OrbitsOverlap,
    Infeasible,
    BudgetExhausted,
    PreconditionViolated,
    OutOfTriangle,
    Degenerate,
    CornerHit,
};

const char* error_code_name(ErrorCode c);

// Stable classification used by the CLI exit status and HTTP mapping.
enum class ErrorClass { Validation, Infeasible, Budget };
ErrorClass error_class(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::vector<std::string> details = {})
        : std::runtime_error(message), code_(code), details_(std::move(details)) {}

    ErrorCode code() const { return code_; }
    const std::vector<std::string>& details() const { return details_; }

private:
    ErrorCode code_;
    std::vector<std::string> details_;
};

}  // namespace itm
