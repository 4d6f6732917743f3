#include "blockhouse/types.hpp"

#include "blockhouse/error.hpp"

namespace blockhouse {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::Malformed: return "malformed";
        case ErrorCode::OutOfRange: return "out of range";
        case ErrorCode::Overflow: return "overflow";
        case ErrorCode::UnknownNode: return "unknown node";
        case ErrorCode::UnknownContract: return "unknown contract";
        case ErrorCode::UnknownCase: return "unknown audit case";
        case ErrorCode::Banned: return "banned";
        case ErrorCode::ClockSkew: return "clock skew";
        case ErrorCode::NotStarted: return "not started";
        case ErrorCode::AlreadyStarted: return "already started";
        case ErrorCode::InvalidState: return "invalid state";
        case ErrorCode::InvalidTerms: return "invalid terms";
        case ErrorCode::InsufficientFunds: return "insufficient funds";
        case ErrorCode::InsufficientCapacity: return "insufficient capacity";
        case ErrorCode::NotAuthorized: return "not authorized";
        case ErrorCode::OutsideWindow: return "outside window";
        case ErrorCode::Duplicate: return "duplicate";
        case ErrorCode::InsufficientAuditors: return "insufficient auditors";
    }
    return "unknown";
}

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Client: return "client";
        case NodeKind::Host: return "host";
        case NodeKind::Auditor: return "auditor";
        case NodeKind::System: return "system";
    }
    return "unknown";
}

NodeKind node_kind_from_string(std::string_view name) {
    if (name == "client") return NodeKind::Client;
    if (name == "host") return NodeKind::Host;
    if (name == "auditor") return NodeKind::Auditor;
    throw ProtocolError(ErrorCode::Malformed, "unknown node kind: " + std::string(name));
}

std::ostream& operator<<(std::ostream& os, NodeId id) { return os << "node#" << id.value; }
std::ostream& operator<<(std::ostream& os, ContractId id) { return os << "contract#" << id.value; }
std::ostream& operator<<(std::ostream& os, TokenAmount amount) { return os << amount.value(); }

}  // namespace blockhouse
