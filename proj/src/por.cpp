#include "blockhouse/por.hpp"

#include <algorithm>
#include <set>

#include "blockhouse/codec.hpp"
#include "blockhouse/error.hpp"
#include "blockhouse/rng.hpp"

namespace blockhouse {
namespace {

Digest padded_leaf_hash(std::span<const std::uint8_t> chunk, std::uint32_t chunk_size) {
    if (chunk.size() == chunk_size) {
        return merkle_leaf_hash(chunk);
    }
    std::vector<std::uint8_t> padded(chunk_size, 0);
    std::copy(chunk.begin(), chunk.end(), padded.begin());
    return merkle_leaf_hash(padded);
}

std::uint64_t chunk_count_for(std::uint64_t file_size, std::uint32_t chunk_size) {
    return (file_size + chunk_size - 1) / chunk_size;
}

}  // namespace

std::uint64_t FileMetadata::chunk_length(std::uint64_t index) const {
    if (index + 1 < chunk_count) {
        return chunk_size;
    }
    return file_size - (chunk_count - 1) * chunk_size;
}

FileMetadata gen_metadata(std::span<const std::uint8_t> file, std::uint32_t chunk_size) {
    if (file.empty()) {
        throw ProtocolError(ErrorCode::InvalidArgument, "cannot generate metadata for an empty file");
    }
    if (chunk_size == 0) {
        throw ProtocolError(ErrorCode::InvalidArgument, "chunk size must be positive");
    }
    const ChunkStore store(file, chunk_size);
    FileMetadata meta;
    meta.merkle_root = store.tree().root();
    meta.file_id = sha256(file);
    meta.file_size = file.size();
    meta.chunk_size = chunk_size;
    meta.chunk_count = store.chunk_count();
    return meta;
}

Seed derive_seed(const SeedInputs& inputs) {
    ByteWriter w;
    w.text("blockhouse.seed")
        .digest(inputs.block_hash)
        .u64(inputs.contract.value)
        .u64(inputs.epoch)
        .u32(inputs.client.value)
        .u32(inputs.host.value)
        .digest(inputs.previous_proof);
    return Seed{sha256(w.data())};
}

Challenge derive_challenge(const Seed& seed, std::uint64_t chunk_count, std::uint32_t c) {
    if (chunk_count == 0 || c == 0) {
        throw ProtocolError(ErrorCode::InvalidArgument, "challenge needs chunk_count >= 1 and c >= 1");
    }
    Challenge out;
    if (c >= chunk_count) {
        out.indices.resize(chunk_count);
        for (std::uint64_t i = 0; i < chunk_count; ++i) {
            out.indices[i] = i;
        }
        return out;
    }
    // Floyd's subset sampling: uniform over all c-subsets, O(c) draws.
    DigestRng rng(seed.value);
    std::set<std::uint64_t> picked;
    for (std::uint64_t j = chunk_count - c; j < chunk_count; ++j) {
        const std::uint64_t t = rng.uniform(j + 1);
        if (!picked.insert(t).second) {
            picked.insert(j);
        }
    }
    out.indices.assign(picked.begin(), picked.end());
    return out;
}

ChunkStore::ChunkStore(std::span<const std::uint8_t> file, std::uint32_t chunk_size)
    : tree_([&] {
          if (file.empty() || chunk_size == 0) {
              throw ProtocolError(ErrorCode::InvalidArgument, "chunk store needs a non-empty file and chunk size");
          }
          std::vector<Digest> leaves;
          leaves.reserve(chunk_count_for(file.size(), chunk_size));
          for (std::size_t off = 0; off < file.size(); off += chunk_size) {
              leaves.push_back(padded_leaf_hash(file.subspan(off, std::min<std::size_t>(chunk_size, file.size() - off)),
                                                chunk_size));
          }
          return MerkleTree(std::move(leaves));
      }()) {
    for (std::size_t off = 0; off < file.size(); off += chunk_size) {
        auto part = file.subspan(off, std::min<std::size_t>(chunk_size, file.size() - off));
        chunks_.emplace_back(std::vector<std::uint8_t>(part.begin(), part.end()));
    }
}

std::uint64_t ChunkStore::held_count() const {
    return static_cast<std::uint64_t>(
        std::count_if(chunks_.begin(), chunks_.end(), [](const auto& c) { return c.has_value(); }));
}

void ChunkStore::corrupt(std::uint64_t index) {
    auto& c = chunks_.at(index);
    if (c && !c->empty()) {
        c->front() ^= 0x01;
    }
}

const std::vector<std::uint8_t>* ChunkStore::chunk(std::uint64_t index) const {
    const auto& c = chunks_.at(index);
    return c ? &*c : nullptr;
}

std::optional<std::vector<std::uint8_t>> ChunkStore::reassemble() const {
    std::vector<std::uint8_t> out;
    for (const auto& c : chunks_) {
        if (!c) {
            return std::nullopt;
        }
        out.insert(out.end(), c->begin(), c->end());
    }
    return out;
}

Proof gen_proof(const ChunkStore& store, const Challenge& challenge) {
    Proof proof;
    proof.entries.reserve(challenge.indices.size());
    for (std::uint64_t index : challenge.indices) {
        if (index >= store.chunk_count()) {
            continue;
        }
        const auto* chunk = store.chunk(index);
        if (chunk == nullptr) {
            continue;
        }
        proof.entries.push_back(ProofEntry{index, *chunk, store.tree().audit_path(index)});
    }
    return proof;
}

bool verify_proof(const FileMetadata& meta, const Challenge& challenge, const Proof& proof) {
    if (meta.chunk_size == 0 || meta.file_size == 0 || meta.chunk_count != chunk_count_for(meta.file_size, meta.chunk_size)) {
        return false;
    }
    if (challenge.indices.empty() || proof.entries.size() != challenge.indices.size()) {
        return false;
    }
    for (std::size_t i = 0; i < challenge.indices.size(); ++i) {
        const std::uint64_t index = challenge.indices[i];
        const ProofEntry& entry = proof.entries[i];
        if (index >= meta.chunk_count || (i > 0 && index <= challenge.indices[i - 1]) || entry.index != index) {
            return false;
        }
        if (entry.chunk.size() != meta.chunk_length(index)) {
            return false;
        }
        const auto root = root_from_audit_path(padded_leaf_hash(entry.chunk, meta.chunk_size), index, meta.chunk_count,
                                               entry.path);
        if (!root || *root != meta.merkle_root) {
            return false;
        }
    }
    return true;
}

Digest proof_hash(const Proof& proof) { return sha256(serialize(proof)); }

double detection_pass_probability(std::uint64_t chunk_count, std::uint64_t missing, std::uint32_t c) {
    if (missing > chunk_count) {
        throw ProtocolError(ErrorCode::InvalidArgument, "more missing chunks than chunks");
    }
    const std::uint64_t draws = std::min<std::uint64_t>(c, chunk_count);
    double p = 1.0;
    for (std::uint64_t i = 0; i < draws; ++i) {
        p *= static_cast<double>(chunk_count - missing - std::min(chunk_count - missing, i)) /
             static_cast<double>(chunk_count - i);
    }
    return p;
}

void encode(ByteWriter& out, const FileMetadata& meta) {
    out.digest(meta.merkle_root).digest(meta.file_id).u64(meta.file_size).u32(meta.chunk_size).u64(meta.chunk_count);
}

void encode(ByteWriter& out, const Proof& proof) {
    out.u32(static_cast<std::uint32_t>(proof.entries.size()));
    for (const auto& e : proof.entries) {
        out.u64(e.index).bytes(e.chunk).u32(static_cast<std::uint32_t>(e.path.size()));
        for (const auto& d : e.path) {
            out.digest(d);
        }
    }
}

FileMetadata decode_metadata(ByteReader& in) {
    FileMetadata meta;
    meta.merkle_root = in.digest();
    meta.file_id = in.digest();
    meta.file_size = in.u64();
    meta.chunk_size = in.u32();
    meta.chunk_count = in.u64();
    return meta;
}

Proof decode_proof(ByteReader& in) {
    Proof proof;
    const std::uint32_t n = in.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        ProofEntry e;
        e.index = in.u64();
        e.chunk = in.bytes();
        const std::uint32_t depth = in.u32();
        if (depth > 64) {
            throw ProtocolError(ErrorCode::Malformed, "audit path too long");
        }
        for (std::uint32_t j = 0; j < depth; ++j) {
            e.path.push_back(in.digest());
        }
        proof.entries.push_back(std::move(e));
    }
    return proof;
}

std::vector<std::uint8_t> serialize(const FileMetadata& meta) {
    ByteWriter w;
    encode(w, meta);
    return std::move(w).take();
}

std::vector<std::uint8_t> serialize(const Proof& proof) {
    ByteWriter w;
    encode(w, proof);
    return std::move(w).take();
}

}  // namespace blockhouse
