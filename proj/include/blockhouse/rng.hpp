#pragma once

#include <cstdint>
#include <limits>

#include "blockhouse/hash.hpp"

namespace blockhouse {

/// Deterministic generator keyed on a digest: SHA-256 over (key || counter),
/// each block yielding four big-endian 64-bit words. Identical on every platform,
/// unlike the standard library distributions.
class DigestRng {
public:
    using result_type = std::uint64_t;

    explicit DigestRng(const Digest& key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
    std::uint64_t uniform(std::uint64_t bound);

private:
    void refill();

    Digest key_;
    std::uint64_t counter_ = 0;
    std::uint64_t words_[4]{};
    int next_ = 4;
};

/// Unbiased draw in [0, bound) from any 64-bit generator.
template <typename Engine>
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;) {
        const std::uint64_t x = engine();
        if (x < limit) {
            return x % bound;
        }
    }
}

/// Uniform double in [0, 1) with 53 random bits.
template <typename Engine>
double unit_interval(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace blockhouse
