#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blockhouse {

enum class ErrorCode {
    InvalidArgument,
    Malformed,
    OutOfRange,
    Overflow,
    UnknownNode,
    UnknownContract,
    UnknownCase,
    Banned,
    ClockSkew,
    NotStarted,
    AlreadyStarted,
    InvalidState,
    InvalidTerms,
    InsufficientFunds,
    InsufficientCapacity,
    NotAuthorized,
    OutsideWindow,
    Duplicate,
    InsufficientAuditors,
};

std::string_view to_string(ErrorCode code);

/// Raised for every rejected operation. A throwing operation leaves no side effects.
class ProtocolError : public std::runtime_error {
public:
    ProtocolError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace blockhouse
