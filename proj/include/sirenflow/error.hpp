#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sirenflow {

enum class ErrorKind {
    // configuration / input validation
    InvalidArgument,
    BadSpec,
    EmptyInput,
    EmptySampleSet,
    FluidCoordOutsideMask,
    NotEnoughPoints,
    NotDivisible,
    DegenerateGrid,
    OddDims,
    InfeasibleBudget,
    VencExceeded,
    TooFewSamples,
    OutsideDomain,
    // numeric
    NonFiniteObjective,
    LineSearchFailed,
    ZeroReference,
    AllPointsDegenerate,
    SingularLocalSystem,
    // files
    Io,
    Format,
};

enum class ErrorCategory { Config, Numeric, Io };

std::string_view to_string(ErrorKind kind);
ErrorCategory category(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace sirenflow
