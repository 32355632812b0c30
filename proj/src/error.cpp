#include "sirenflow/error.hpp"

namespace sirenflow {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptySampleSet: return "EmptySampleSet";
    case ErrorKind::FluidCoordOutsideMask: return "FluidCoordOutsideMask";
    case ErrorKind::NotEnoughPoints: return "NotEnoughPoints";
    case ErrorKind::NotDivisible: return "NotDivisible";
    case ErrorKind::DegenerateGrid: return "DegenerateGrid";
    case ErrorKind::OddDims: return "OddDims";
    case ErrorKind::InfeasibleBudget: return "InfeasibleBudget";
    case ErrorKind::VencExceeded: return "VencExceeded";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::OutsideDomain: return "OutsideDomain";
    case ErrorKind::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorKind::LineSearchFailed: return "LineSearchFailed";
    case ErrorKind::ZeroReference: return "ZeroReference";
    case ErrorKind::AllPointsDegenerate: return "AllPointsDegenerate";
    case ErrorKind::SingularLocalSystem: return "SingularLocalSystem";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Format: return "Format";
    }
    return "Unknown";
}

ErrorCategory category(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NonFiniteObjective:
    case ErrorKind::LineSearchFailed:
    case ErrorKind::ZeroReference:
    case ErrorKind::AllPointsDegenerate:
    case ErrorKind::SingularLocalSystem:
        return ErrorCategory::Numeric;
    case ErrorKind::Io:
    case ErrorKind::Format:
        return ErrorCategory::Io;
    default:
        return ErrorCategory::Config;
    }
}

} // namespace sirenflow
