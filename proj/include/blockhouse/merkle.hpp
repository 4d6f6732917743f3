#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "blockhouse/hash.hpp"

namespace blockhouse {

// Merkle tree with RFC 6962 shape and domain separation:
//   leaf  = H(0x00 || data)
//   inner = H(0x01 || left || right)
// A tree of one leaf has the leaf hash as its root.

Digest merkle_leaf_hash(std::span<const std::uint8_t> data);
Digest merkle_node_hash(const Digest& left, const Digest& right);

class MerkleTree {
public:
    explicit MerkleTree(std::vector<Digest> leaf_hashes);

    std::uint64_t leaf_count() const { return levels_.front().size(); }
    const Digest& root() const { return levels_.back().front(); }
    const Digest& leaf(std::uint64_t index) const { return levels_.front().at(index); }

    /// Sibling hashes from leaf level upwards.
    std::vector<Digest> audit_path(std::uint64_t index) const;

private:
    // levels_[0] = leaves; an unpaired last node is carried up unchanged, which
    // reproduces the RFC 6962 split at the largest power of two.
    std::vector<std::vector<Digest>> levels_;
};

/// Root implied by a leaf hash and its audit path, or nullopt when the path
/// length is inconsistent with (index, tree_size).
std::optional<Digest> root_from_audit_path(const Digest& leaf_hash, std::uint64_t index, std::uint64_t tree_size,
                                           std::span<const Digest> path);

}  // namespace blockhouse
