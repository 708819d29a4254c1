#include "cbo/errors.hpp"

namespace cbo {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::bounds_violation: return "bounds violation";
    case ErrorKind::degenerate_data: return "degenerate data";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::protocol: return "protocol error";
    case ErrorKind::data: return "data error";
    case ErrorKind::invalid_state: return "invalid state";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::unsupported_version: return "unsupported version";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
{
}

} // namespace cbo
