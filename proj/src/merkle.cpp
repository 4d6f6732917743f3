#include "blockhouse/merkle.hpp"

#include "blockhouse/error.hpp"

namespace blockhouse {

Digest merkle_leaf_hash(std::span<const std::uint8_t> data) {
    return Sha256{}.update(std::uint8_t{0x00}).update(data).finish();
}

Digest merkle_node_hash(const Digest& left, const Digest& right) {
    return Sha256{}.update(std::uint8_t{0x01}).update(left).update(right).finish();
}

MerkleTree::MerkleTree(std::vector<Digest> leaf_hashes) {
    if (leaf_hashes.empty()) {
        throw ProtocolError(ErrorCode::InvalidArgument, "merkle tree needs at least one leaf");
    }
    levels_.push_back(std::move(leaf_hashes));
    while (levels_.back().size() > 1) {
        const auto& below = levels_.back();
        std::vector<Digest> above;
        above.reserve((below.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < below.size(); i += 2) {
            above.push_back(merkle_node_hash(below[i], below[i + 1]));
        }
        if (below.size() % 2 == 1) {
            above.push_back(below.back());
        }
        levels_.push_back(std::move(above));
    }
}

std::vector<Digest> MerkleTree::audit_path(std::uint64_t index) const {
    if (index >= leaf_count()) {
        throw ProtocolError(ErrorCode::OutOfRange, "leaf index out of range");
    }
    std::vector<Digest> path;
    for (std::size_t level = 0; level + 1 < levels_.size(); ++level) {
        const std::uint64_t sibling = index ^ 1u;
        if (sibling < levels_[level].size()) {
            path.push_back(levels_[level][sibling]);
        }
        index >>= 1;
    }
    return path;
}

std::optional<Digest> root_from_audit_path(const Digest& leaf_hash, std::uint64_t index, std::uint64_t tree_size,
                                           std::span<const Digest> path) {
    if (index >= tree_size) {
        return std::nullopt;
    }
    std::uint64_t fn = index;
    std::uint64_t sn = tree_size - 1;
    Digest r = leaf_hash;
    for (const Digest& p : path) {
        if (sn == 0) {
            return std::nullopt;
        }
        if ((fn & 1u) != 0 || fn == sn) {
            r = merkle_node_hash(p, r);
            if ((fn & 1u) == 0) {
                while ((fn & 1u) == 0 && fn != 0) {
                    fn >>= 1;
                    sn >>= 1;
                }
            }
        } else {
            r = merkle_node_hash(r, p);
        }
        fn >>= 1;
        sn >>= 1;
    }
    if (sn != 0) {
        return std::nullopt;
    }
    return r;
}

}  // namespace blockhouse
