#include <gtest/gtest.h>

#include <bit>

#include "blockhouse/error.hpp"
#include "blockhouse/merkle.hpp"

using namespace blockhouse;

namespace {

std::vector<std::uint8_t> leaf_data(std::size_t i) {
    return {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(i >> 8), 0x5a};
}

// Largest power of two strictly below n.
std::size_t split(std::size_t n) { return std::bit_floor(n - 1); }

// Recursive tree hash over D[lo, hi).
Digest mth(const std::vector<Digest>& leaves, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) {
        return leaves[lo];
    }
    const std::size_t k = split(hi - lo);
    return merkle_node_hash(mth(leaves, lo, lo + k), mth(leaves, lo + k, hi));
}

// Recursive audit path for leaf m within D[lo, hi).
void path(const std::vector<Digest>& leaves, std::size_t m, std::size_t lo, std::size_t hi, std::vector<Digest>& out) {
    if (hi - lo == 1) {
        return;
    }
    const std::size_t k = split(hi - lo);
    if (m < k) {
        path(leaves, m, lo, lo + k, out);
        out.push_back(mth(leaves, lo + k, hi));
    } else {
        path(leaves, m - k, lo + k, hi, out);
        out.push_back(mth(leaves, lo, lo + k));
    }
}

std::vector<Digest> leaves_of(std::size_t n) {
    std::vector<Digest> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(merkle_leaf_hash(leaf_data(i)));
    }
    return out;
}

}  // namespace

TEST(Merkle, DomainSeparatedHashes) {
    const std::vector<std::uint8_t> d{1, 2, 3};
    std::vector<std::uint8_t> pre{0x00, 1, 2, 3};
    EXPECT_EQ(merkle_leaf_hash(d), sha256(pre));
    const Digest a = sha256(std::string_view{"a"});
    const Digest b = sha256(std::string_view{"b"});
    std::vector<std::uint8_t> node{0x01};
    node.insert(node.end(), a.begin(), a.end());
    node.insert(node.end(), b.begin(), b.end());
    EXPECT_EQ(merkle_node_hash(a, b), sha256(node));
}

TEST(Merkle, RootMatchesRecursiveDefinition) {
    for (std::size_t n = 1; n <= 70; ++n) {
        const auto leaves = leaves_of(n);
        const MerkleTree tree(leaves);
        ASSERT_EQ(tree.root(), mth(leaves, 0, n)) << "n=" << n;
        ASSERT_EQ(tree.leaf_count(), n);
    }
}

TEST(Merkle, AuditPathsMatchAndVerify) {
    for (std::size_t n = 1; n <= 40; ++n) {
        const auto leaves = leaves_of(n);
        const MerkleTree tree(leaves);
        for (std::size_t m = 0; m < n; ++m) {
            std::vector<Digest> expected;
            path(leaves, m, 0, n, expected);
            const auto got = tree.audit_path(m);
            ASSERT_EQ(got, expected) << "n=" << n << " m=" << m;
            ASSERT_EQ(root_from_audit_path(leaves[m], m, n, got), tree.root());
        }
    }
}

TEST(Merkle, TamperedPathsFail) {
    const auto leaves = leaves_of(13);
    const MerkleTree tree(leaves);
    auto p = tree.audit_path(5);
    p[1][0] ^= 1;
    EXPECT_NE(root_from_audit_path(leaves[5], 5, 13, p), tree.root());
    auto good = tree.audit_path(5);
    EXPECT_NE(root_from_audit_path(leaves[5], 6, 13, good), tree.root());
    EXPECT_NE(root_from_audit_path(leaves[6], 5, 13, good), tree.root());
    auto shorter = good;
    shorter.pop_back();
    EXPECT_FALSE(root_from_audit_path(leaves[5], 5, 13, shorter).has_value());
    auto longer = good;
    longer.push_back(leaves[0]);
    EXPECT_FALSE(root_from_audit_path(leaves[5], 5, 13, longer).has_value());
    EXPECT_FALSE(root_from_audit_path(leaves[5], 13, 13, good).has_value());
}

TEST(Merkle, RejectsEmptyAndOutOfRange) {
    EXPECT_THROW(MerkleTree(std::vector<Digest>{}), ProtocolError);
    const MerkleTree tree(leaves_of(3));
    EXPECT_THROW(tree.audit_path(3), ProtocolError);
}
