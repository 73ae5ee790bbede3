#pragma once

#include <stdexcept>
#include <string>

namespace fieldqubit {

enum class ErrorKind {
    invalid_input,
    numerical_failure,
    non_identifiable,
    degenerate_geometry,
    field_exceeds_critical,
    invalid_population,
    non_physical,
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::non_identifiable: return "non-identifiable";
    case ErrorKind::degenerate_geometry: return "degenerate-geometry";
    case ErrorKind::field_exceeds_critical: return "field-exceeds-critical";
    case ErrorKind::invalid_population: return "invalid-population";
    case ErrorKind::non_physical: return "non-physical";
    }
    return "unknown";
}

/// Library error carrying a machine-readable category.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
    if (!condition) fail(ErrorKind::invalid_input, what);
}

} // namespace fieldqubit
