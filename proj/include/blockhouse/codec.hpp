#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "blockhouse/hash.hpp"

namespace blockhouse {

/// Canonical binary layout: big-endian fixed-width integers, length-prefixed
/// digests and byte strings. Everything hashed or persisted goes through here.
class ByteWriter {
public:
    ByteWriter& u8(std::uint8_t v);
    ByteWriter& u32(std::uint32_t v);
    ByteWriter& u64(std::uint64_t v);
    ByteWriter& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
    /// One length byte followed by the digest.
    ByteWriter& digest(const Digest& d);
    /// u32 length followed by the bytes.
    ByteWriter& bytes(std::span<const std::uint8_t> b);
    ByteWriter& text(std::string_view s);

    const std::vector<std::uint8_t>& data() const& { return buf_; }
    std::vector<std::uint8_t> take() && { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader for ByteWriter output. Throws ProtocolError(Malformed).
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    Digest digest();
    std::vector<std::uint8_t> bytes();

    bool at_end() const { return pos_ == data_.size(); }
    /// Throws unless every byte was consumed.
    void expect_end() const;

private:
    std::span<const std::uint8_t> take(std::size_t n);

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace blockhouse
