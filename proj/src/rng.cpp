#include "blockhouse/rng.hpp"

#include "blockhouse/codec.hpp"

namespace blockhouse {

void DigestRng::refill() {
    ByteWriter w;
    w.digest(key_).u64(counter_++);
    const Digest block = sha256(w.data());
    for (int i = 0; i < 4; ++i) {
        std::uint64_t v = 0;
        for (int j = 0; j < 8; ++j) {
            v = (v << 8) | block[8 * i + j];
        }
        words_[i] = v;
    }
    next_ = 0;
}

DigestRng::result_type DigestRng::operator()() {
    if (next_ == 4) {
        refill();
    }
    return words_[next_++];
}

std::uint64_t DigestRng::uniform(std::uint64_t bound) { return uniform_below(*this, bound); }

}  // namespace blockhouse
