#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "blockhouse/hash.hpp"
#include "blockhouse/merkle.hpp"
#include "blockhouse/types.hpp"

namespace blockhouse {

class ByteWriter;
class ByteReader;

inline constexpr std::uint32_t kDefaultChunkSize = 4096;
inline constexpr std::uint32_t kDefaultChallengeSize = 16;

/// Client-held verification data. Recorded on-chain at agreement time.
struct FileMetadata {
    Digest merkle_root{};
    Digest file_id{};  ///< digest of the whole file
    std::uint64_t file_size = 0;
    std::uint32_t chunk_size = 0;
    std::uint64_t chunk_count = 0;

    /// True byte length of chunk `index`; only the last chunk may be short.
    std::uint64_t chunk_length(std::uint64_t index) const;

    friend bool operator==(const FileMetadata&, const FileMetadata&) = default;
};

FileMetadata gen_metadata(std::span<const std::uint8_t> file, std::uint32_t chunk_size = kDefaultChunkSize);

struct Seed {
    Digest value{};

    friend bool operator==(const Seed&, const Seed&) = default;
};

/// Ledger elements mixed into a challenge seed.
struct SeedInputs {
    Digest block_hash{};
    ContractId contract;
    std::uint64_t epoch = 0;
    NodeId client;
    NodeId host;
    Digest previous_proof{};  ///< zero when there is none
};

Seed derive_seed(const SeedInputs& inputs);

struct Challenge {
    std::vector<std::uint64_t> indices;  ///< strictly increasing

    friend bool operator==(const Challenge&, const Challenge&) = default;
};

/// min(c, chunk_count) distinct indices, reproducible from the seed.
Challenge derive_challenge(const Seed& seed, std::uint64_t chunk_count, std::uint32_t c);

/// What a host keeps: the chunks it still has and the Merkle tree built at upload.
class ChunkStore {
public:
    ChunkStore(std::span<const std::uint8_t> file, std::uint32_t chunk_size);

    std::uint64_t chunk_count() const { return chunks_.size(); }
    std::uint64_t held_count() const;
    bool has(std::uint64_t index) const { return chunks_.at(index).has_value(); }
    const MerkleTree& tree() const { return tree_; }

    void drop(std::uint64_t index) { chunks_.at(index).reset(); }
    /// Flips one bit of a held chunk without touching the tree.
    void corrupt(std::uint64_t index);

    const std::vector<std::uint8_t>* chunk(std::uint64_t index) const;
    /// Concatenation of all chunks, or nullopt if any is missing.
    std::optional<std::vector<std::uint8_t>> reassemble() const;

private:
    std::vector<std::optional<std::vector<std::uint8_t>>> chunks_;
    MerkleTree tree_;
};

struct ProofEntry {
    std::uint64_t index = 0;
    std::vector<std::uint8_t> chunk;  ///< true (unpadded) chunk bytes
    std::vector<Digest> path;

    friend bool operator==(const ProofEntry&, const ProofEntry&) = default;
};

struct Proof {
    std::vector<ProofEntry> entries;

    friend bool operator==(const Proof&, const Proof&) = default;
};

/// Entries for every challenged index the store still holds; missing chunks are
/// simply absent, which makes the proof fail verification.
Proof gen_proof(const ChunkStore& store, const Challenge& challenge);

/// True iff every challenged index is answered, in order, by a chunk whose leaf
/// hash and audit path reproduce the committed root. Malformed input yields false.
bool verify_proof(const FileMetadata& meta, const Challenge& challenge, const Proof& proof);

Digest proof_hash(const Proof& proof);

/// C(N-missing, c) / C(N, c): probability that c distinct uniform indices avoid
/// every missing chunk.
double detection_pass_probability(std::uint64_t chunk_count, std::uint64_t missing, std::uint32_t c);

void encode(ByteWriter& out, const FileMetadata& meta);
void encode(ByteWriter& out, const Proof& proof);
FileMetadata decode_metadata(ByteReader& in);
Proof decode_proof(ByteReader& in);

std::vector<std::uint8_t> serialize(const FileMetadata& meta);
std::vector<std::uint8_t> serialize(const Proof& proof);

}  // namespace blockhouse
