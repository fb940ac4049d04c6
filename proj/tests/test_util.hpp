#pragma once

#include "srcloc/error.hpp"

#include <optional>

namespace srcloc::testing {

// Category of the srcloc::Error thrown by f, or nullopt when nothing is thrown.
template <class F>
std::optional<ErrorCategory> thrown_category(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.category();
    }
    return std::nullopt;
}

}  // namespace srcloc::testing
