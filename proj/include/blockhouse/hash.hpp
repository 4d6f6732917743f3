#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace blockhouse {

inline constexpr std::size_t kDigestSize = 32;

using Digest = std::array<std::uint8_t, kDigestSize>;

inline constexpr Digest kZeroDigest{};

/// Incremental SHA-256. The single digest used for blocks, Merkle trees and seeds.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;
    Sha256(Sha256&&) noexcept;
    Sha256& operator=(Sha256&&) noexcept;

    Sha256& update(std::span<const std::uint8_t> bytes);
    Sha256& update(std::uint8_t byte);
    Sha256& update(const Digest& digest) { return update(std::span<const std::uint8_t>(digest)); }

    /// Finalizes and resets, so the object can be reused.
    Digest finish();

private:
    struct Context;
    std::unique_ptr<Context> ctx_;
};

Digest sha256(std::span<const std::uint8_t> bytes);
Digest sha256(std::string_view text);

std::string to_hex(const Digest& digest);
std::optional<Digest> digest_from_hex(std::string_view hex);

}  // namespace blockhouse
