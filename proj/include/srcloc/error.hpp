#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace srcloc {

enum class ErrorCategory {
    InvalidParameter,
    InvalidInput,
    DegenerateGraph,
    NumericalFailure,
    InvalidReference,
    Schema,
    Parse,
    InterpolationFailure,
    Io,
    GenerationFailure,
    InfeasibleDistance,
};

// Stable lowercase token used in CLI error lines, e.g. "invalid-parameter".
std::string_view category_name(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

  private:
    ErrorCategory category_;
};

// Raised by the x-step when the objective stops being finite. Carries the
// offending iterate for post-mortem inspection.
class NumericalFailure : public Error {
  public:
    NumericalFailure(const std::string& message, std::vector<double> iterate, int iteration)
        : Error(ErrorCategory::NumericalFailure, message),
          iterate_(std::move(iterate)),
          iteration_(iteration) {}

    const std::vector<double>& iterate() const noexcept { return iterate_; }
    int iteration() const noexcept { return iteration_; }

  private:
    std::vector<double> iterate_;
    int iteration_;
};

}  // namespace srcloc
