#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbo {

enum class ErrorKind {
    invalid_argument,
    bounds_violation,
    degenerate_data,
    numeric,
    protocol,
    data,
    invalid_state,
    io,
    parse,
    unsupported_version,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace cbo
