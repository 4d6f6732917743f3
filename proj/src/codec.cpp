#include "blockhouse/codec.hpp"

#include "blockhouse/error.hpp"

namespace blockhouse {

ByteWriter& ByteWriter::u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    return *this;
}

ByteWriter& ByteWriter::digest(const Digest& d) {
    u8(static_cast<std::uint8_t>(d.size()));
    buf_.insert(buf_.end(), d.begin(), d.end());
    return *this;
}

ByteWriter& ByteWriter::bytes(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    buf_.insert(buf_.end(), b.begin(), b.end());
    return *this;
}

ByteWriter& ByteWriter::text(std::string_view s) {
    return bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
    if (n > data_.size() - pos_) {
        throw ProtocolError(ErrorCode::Malformed, "truncated input");
    }
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint32_t ByteReader::u32() {
    std::uint32_t v = 0;
    for (std::uint8_t b : take(4)) {
        v = (v << 8) | b;
    }
    return v;
}

std::uint64_t ByteReader::u64() {
    std::uint64_t v = 0;
    for (std::uint8_t b : take(8)) {
        v = (v << 8) | b;
    }
    return v;
}

Digest ByteReader::digest() {
    if (u8() != kDigestSize) {
        throw ProtocolError(ErrorCode::Malformed, "bad digest length");
    }
    Digest d{};
    auto src = take(kDigestSize);
    std::copy(src.begin(), src.end(), d.begin());
    return d;
}

std::vector<std::uint8_t> ByteReader::bytes() {
    const std::uint32_t n = u32();
    auto src = take(n);
    return {src.begin(), src.end()};
}

void ByteReader::expect_end() const {
    if (!at_end()) {
        throw ProtocolError(ErrorCode::Malformed, "trailing bytes");
    }
}

}  // namespace blockhouse
