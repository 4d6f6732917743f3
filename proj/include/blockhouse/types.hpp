#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>

#include "blockhouse/error.hpp"

namespace blockhouse {

/// Simulated wall time, in seconds. Never derived from the host machine's clock.
using Seconds = std::int64_t;

/// Identified member of the private chain.
struct NodeId {
    std::uint32_t value = 0;

    friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

/// Account of the storage smart contract itself. Issues time-triggered actions.
inline constexpr NodeId kSystemAccount{0};
/// Sink for integer-split remainders; counted in the total supply.
inline constexpr NodeId kBurnAccount{std::numeric_limits<std::uint32_t>::max()};

struct ContractId {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(ContractId, ContractId) = default;
};

struct CaseId {
    std::uint64_t value = 0;

    friend constexpr auto operator<=>(CaseId, CaseId) = default;
};

enum class NodeKind : std::uint8_t { Client, Host, Auditor, System };

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view name);

/// Non-negative integer amount of the smallest currency unit.
/// Subtraction below zero and overflow throw instead of wrapping.
class TokenAmount {
public:
    constexpr TokenAmount() = default;
    constexpr explicit TokenAmount(std::uint64_t value) : value_(value) {}

    constexpr std::uint64_t value() const { return value_; }
    constexpr bool is_zero() const { return value_ == 0; }

    TokenAmount& operator+=(TokenAmount other) {
        if (value_ > std::numeric_limits<std::uint64_t>::max() - other.value_) {
            throw ProtocolError(ErrorCode::Overflow, "token amount overflow");
        }
        value_ += other.value_;
        return *this;
    }

    TokenAmount& operator-=(TokenAmount other) {
        if (other.value_ > value_) {
            throw ProtocolError(ErrorCode::InsufficientFunds, "token amount would become negative");
        }
        value_ -= other.value_;
        return *this;
    }

    friend TokenAmount operator+(TokenAmount a, TokenAmount b) { return a += b; }
    friend TokenAmount operator-(TokenAmount a, TokenAmount b) { return a -= b; }

    friend TokenAmount operator*(TokenAmount a, std::uint64_t k) {
        if (k != 0 && a.value_ > std::numeric_limits<std::uint64_t>::max() / k) {
            throw ProtocolError(ErrorCode::Overflow, "token amount overflow");
        }
        return TokenAmount{a.value_ * k};
    }

    /// Floor division; callers account for the remainder explicitly.
    friend constexpr TokenAmount operator/(TokenAmount a, std::uint64_t k) { return TokenAmount{a.value_ / k}; }
    friend constexpr TokenAmount operator%(TokenAmount a, std::uint64_t k) { return TokenAmount{a.value_ % k}; }

    friend constexpr auto operator<=>(TokenAmount, TokenAmount) = default;

private:
    std::uint64_t value_ = 0;
};

std::ostream& operator<<(std::ostream& os, NodeId id);
std::ostream& operator<<(std::ostream& os, ContractId id);
std::ostream& operator<<(std::ostream& os, TokenAmount amount);

}  // namespace blockhouse

template <>
struct std::hash<blockhouse::NodeId> {
    std::size_t operator()(blockhouse::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
