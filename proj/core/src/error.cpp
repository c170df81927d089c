#include "worldsmith/error.hpp"

namespace worldsmith {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::not_found: return "not-found";
        case ErrorCode::conflict: return "conflict";
        case ErrorCode::validation: return "validation";
        case ErrorCode::unsupported: return "unsupported";
        case ErrorCode::unavailable: return "unavailable";
        case ErrorCode::storage: return "storage";
    }
    return "unknown";
}

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::validation: return 422;
        case ErrorCode::not_found: return 404;
        case ErrorCode::conflict: return 409;
        case ErrorCode::unsupported: return 400;
        case ErrorCode::unavailable: return 503;
        case ErrorCode::storage: return 500;
    }
    return 500;
}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace worldsmith
