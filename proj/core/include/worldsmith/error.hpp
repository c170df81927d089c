#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace worldsmith {

enum class ErrorCode {
    invalid_argument,   // malformed or out-of-range input
    not_found,          // unknown id
    conflict,           // version mismatch, duplicate, missing precondition state
    validation,         // protocol or document invariant violated
    unsupported,        // backend cannot serve the request kind
    unavailable,        // remote backend unreachable
    storage,            // filesystem failure
};

std::string_view to_string(ErrorCode code) noexcept;

/// HTTP status the service and backend servers answer with.
int http_status(ErrorCode code) noexcept;

/// Every engine failure is reported through this exception; `code` drives the
/// HTTP status the service maps it to.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace worldsmith
