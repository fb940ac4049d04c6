#include "srcloc/error.hpp"

namespace srcloc {

std::string_view category_name(ErrorCategory category) noexcept {
    switch (category) {
        case ErrorCategory::InvalidParameter: return "invalid-parameter";
        case ErrorCategory::InvalidInput: return "invalid-input";
        case ErrorCategory::DegenerateGraph: return "degenerate-graph";
        case ErrorCategory::NumericalFailure: return "numerical-failure";
        case ErrorCategory::InvalidReference: return "invalid-reference";
        case ErrorCategory::Schema: return "schema";
        case ErrorCategory::Parse: return "parse";
        case ErrorCategory::InterpolationFailure: return "interpolation-failure";
        case ErrorCategory::Io: return "io";
        case ErrorCategory::GenerationFailure: return "generation-failure";
        case ErrorCategory::InfeasibleDistance: return "infeasible-distance";
    }
    return "unknown";
}

}  // namespace srcloc
