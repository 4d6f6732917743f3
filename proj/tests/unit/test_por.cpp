#include <gtest/gtest.h>

#include <bit>
#include <boost/math/distributions/hypergeometric.hpp>
#include <cmath>
#include <set>

#include "blockhouse/codec.hpp"
#include "blockhouse/error.hpp"
#include "blockhouse/por.hpp"
#include "support.hpp"

using namespace blockhouse;
using bhtest::test_file;

namespace {

Seed seed_of(std::uint64_t i) { return Seed{sha256("por-test:" + std::to_string(i))}; }

// Counts c-subsets of {0..n-1} that avoid the first k elements, by enumeration.
double count_avoiding(unsigned n, unsigned k, unsigned c) {
    std::uint64_t good = 0;
    std::uint64_t total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<unsigned>(std::popcount(mask)) != c) {
            continue;
        }
        ++total;
        if ((mask & ((1u << k) - 1)) == 0) {
            ++good;
        }
    }
    return static_cast<double>(good) / static_cast<double>(total);
}

}  // namespace

TEST(Metadata, Geometry) {
    const auto file = test_file(10'000);
    const FileMetadata m = gen_metadata(file, 1024);
    EXPECT_EQ(m.file_size, 10'000u);
    EXPECT_EQ(m.chunk_count, 10u);
    EXPECT_EQ(m.chunk_length(0), 1024u);
    EXPECT_EQ(m.chunk_length(9), 10'000u - 9 * 1024);
    EXPECT_EQ(m.file_id, sha256(file));
    EXPECT_EQ(gen_metadata(file, 1024), m);
    EXPECT_THROW(gen_metadata({}, 1024), ProtocolError);
    EXPECT_THROW(gen_metadata(file, 0), ProtocolError);
}

TEST(Challenge, DistinctSortedDeterministic) {
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto ch = derive_challenge(seed_of(i), 100, 16);
        ASSERT_EQ(ch.indices.size(), 16u);
        for (std::size_t j = 1; j < ch.indices.size(); ++j) {
            ASSERT_LT(ch.indices[j - 1], ch.indices[j]);
        }
        ASSERT_LT(ch.indices.back(), 100u);
        ASSERT_EQ(ch, derive_challenge(seed_of(i), 100, 16));
    }
    EXPECT_EQ(derive_challenge(seed_of(1), 5, 16).indices, (std::vector<std::uint64_t>{0, 1, 2, 3, 4}));
    EXPECT_THROW(derive_challenge(seed_of(1), 0, 3), ProtocolError);
    EXPECT_THROW(derive_challenge(seed_of(1), 3, 0), ProtocolError);
}

TEST(Challenge, IndexFrequencyUniformWithinFourSigma) {
    const std::uint64_t n = 20;
    const std::uint32_t c = 5;
    const int trials = 20'000;
    std::vector<int> hits(n);
    for (int t = 0; t < trials; ++t) {
        for (auto i : derive_challenge(seed_of(t), n, c).indices) {
            ++hits[i];
        }
    }
    const double p = static_cast<double>(c) / n;
    const double mean = trials * p;
    const double sigma = std::sqrt(trials * p * (1 - p));
    for (std::uint64_t i = 0; i < n; ++i) {
        EXPECT_NEAR(hits[i], mean, 4 * sigma) << "index " << i;
    }
}

TEST(Seed, NoCollisionsOverTenThousandEpochs) {
    std::set<Digest> seen;
    Digest prev{};
    for (std::uint64_t e = 1; e <= 10'000; ++e) {
        SeedInputs in;
        in.block_hash = sha256("block" + std::to_string(e / 7));
        in.contract = ContractId{3};
        in.epoch = e;
        in.client = NodeId{1};
        in.host = NodeId{2};
        in.previous_proof = prev;
        const Seed s = derive_seed(in);
        ASSERT_TRUE(seen.insert(s.value).second) << "epoch " << e;
        prev = sha256(s.value);
    }
}

TEST(Seed, EveryInputMatters) {
    SeedInputs base;
    base.block_hash = sha256(std::string_view{"b"});
    base.contract = ContractId{1};
    base.epoch = 2;
    base.client = NodeId{3};
    base.host = NodeId{4};
    const Seed s = derive_seed(base);
    auto v = base;
    v.block_hash[0] ^= 1;
    EXPECT_NE(derive_seed(v), s);
    v = base;
    v.contract = ContractId{9};
    EXPECT_NE(derive_seed(v), s);
    v = base;
    v.epoch = 3;
    EXPECT_NE(derive_seed(v), s);
    v = base;
    v.client = NodeId{5};
    EXPECT_NE(derive_seed(v), s);
    v = base;
    v.host = NodeId{5};
    EXPECT_NE(derive_seed(v), s);
    v = base;
    v.previous_proof[31] = 1;
    EXPECT_NE(derive_seed(v), s);
}

TEST(Proof, CompletenessAcrossGeometries) {
    for (std::size_t size : {1ul, 100ul, 1024ul, 1025ul, 10'000ul, 65'537ul}) {
        for (std::uint32_t chunk : {64u, 1000u, 4096u}) {
            const auto file = test_file(size, size + chunk);
            const FileMetadata m = gen_metadata(file, chunk);
            const ChunkStore store(file, chunk);
            for (std::uint64_t t = 0; t < 20; ++t) {
                const auto ch = derive_challenge(seed_of(t), m.chunk_count, 7);
                ASSERT_TRUE(verify_proof(m, ch, gen_proof(store, ch))) << size << "/" << chunk;
            }
        }
    }
}

TEST(Proof, MissingOrCorruptChunksFail) {
    const auto file = test_file(20'000);
    const FileMetadata m = gen_metadata(file, 1000);
    ChunkStore store(file, 1000);
    const Challenge ch{{2, 5, 11}};
    store.drop(5);
    EXPECT_FALSE(verify_proof(m, ch, gen_proof(store, ch)));
    ChunkStore corrupt(file, 1000);
    corrupt.corrupt(11);
    EXPECT_FALSE(verify_proof(m, ch, gen_proof(corrupt, ch)));
    const Challenge untouched{{2, 6}};
    EXPECT_TRUE(verify_proof(m, untouched, gen_proof(corrupt, untouched)));
}

TEST(Proof, StructuralTamperingFails) {
    const auto file = test_file(20'000);
    const FileMetadata m = gen_metadata(file, 1000);
    const ChunkStore store(file, 1000);
    const Challenge ch{{1, 4, 9}};
    const Proof good = gen_proof(store, ch);
    ASSERT_TRUE(verify_proof(m, ch, good));

    Proof swapped = good;
    std::swap(swapped.entries[0], swapped.entries[1]);
    EXPECT_FALSE(verify_proof(m, ch, swapped));
    Proof extra = good;
    extra.entries.push_back(good.entries[0]);
    EXPECT_FALSE(verify_proof(m, ch, extra));
    Proof truncated = good;
    truncated.entries[2].chunk.pop_back();
    EXPECT_FALSE(verify_proof(m, ch, truncated));
    Proof short_path = good;
    short_path.entries[1].path.pop_back();
    EXPECT_FALSE(verify_proof(m, ch, short_path));
    Proof relabelled = good;
    relabelled.entries[0].index = 2;
    EXPECT_FALSE(verify_proof(m, ch, relabelled));

    const Challenge other{{0, 4, 9}};
    EXPECT_FALSE(verify_proof(m, other, good));
    EXPECT_FALSE(verify_proof(m, Challenge{{4, 1}}, gen_proof(store, Challenge{{4, 1}})));
    EXPECT_FALSE(verify_proof(m, Challenge{}, Proof{}));

    FileMetadata wrong_root = m;
    wrong_root.merkle_root[0] ^= 1;
    EXPECT_FALSE(verify_proof(wrong_root, ch, good));
}

TEST(Proof, ShortLastChunkCannotBePadded) {
    const auto file = test_file(2'500);
    const FileMetadata m = gen_metadata(file, 1000);
    const ChunkStore store(file, 1000);
    const Challenge last{{2}};
    Proof p = gen_proof(store, last);
    ASSERT_EQ(p.entries[0].chunk.size(), 500u);
    ASSERT_TRUE(verify_proof(m, last, p));
    p.entries[0].chunk.resize(1000, 0);
    EXPECT_FALSE(verify_proof(m, last, p));
}

TEST(Proof, SerializationRoundTrip) {
    const auto file = test_file(9'999);
    const FileMetadata m = gen_metadata(file, 512);
    const ChunkStore store(file, 512);
    const auto ch = derive_challenge(seed_of(4), m.chunk_count, 6);
    const Proof p = gen_proof(store, ch);

    const auto bytes = serialize(p);
    ByteReader r(bytes);
    EXPECT_EQ(decode_proof(r), p);
    const auto mbytes = serialize(m);
    ByteReader mr(mbytes);
    EXPECT_EQ(decode_metadata(mr), m);
    EXPECT_EQ(proof_hash(p), sha256(bytes));

    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + bytes.size() / 2);
    ByteReader bad(cut);
    EXPECT_THROW(decode_proof(bad), ProtocolError);
}

TEST(Detection, MatchesHypergeometric) {
    for (auto [n, k, c] : std::vector<std::tuple<unsigned, unsigned, unsigned>>{
             {100, 10, 5}, {100, 0, 16}, {1000, 30, 16}, {50, 49, 1}, {64, 8, 60}, {20, 20, 3}}) {
        const boost::math::hypergeometric_distribution<double> dist(k, c, n);
        // zero avoiding draws are impossible once c + k > n
        const double oracle = c + k > n ? 0.0 : boost::math::pdf(dist, 0u);
        EXPECT_NEAR(detection_pass_probability(n, k, c), oracle, 1e-12 * std::max(1.0, oracle)) << n << "," << k;
    }
    EXPECT_NEAR(count_avoiding(12, 3, 4), detection_pass_probability(12, 3, 4), 1e-12);
    EXPECT_NEAR(count_avoiding(15, 6, 5), detection_pass_probability(15, 6, 5), 1e-12);
    EXPECT_THROW(detection_pass_probability(5, 6, 1), ProtocolError);
}

TEST(Detection, EmpiricalRateWithinThreeSigma) {
    const auto file = test_file(50 * 256);
    const FileMetadata m = gen_metadata(file, 256);
    ChunkStore store(file, 256);
    for (std::uint64_t i = 0; i < 50; i += 10) {
        store.drop(i);
    }
    const int trials = 4000;
    int passed = 0;
    for (int t = 0; t < trials; ++t) {
        const auto ch = derive_challenge(seed_of(100'000 + t), 50, 4);
        passed += verify_proof(m, ch, gen_proof(store, ch)) ? 1 : 0;
    }
    const double expected = detection_pass_probability(50, 5, 4);
    const double sigma = std::sqrt(expected * (1 - expected) / trials);
    EXPECT_NEAR(static_cast<double>(passed) / trials, expected, 3 * sigma);
}

TEST(ChunkStore, Reassemble) {
    const auto file = test_file(3'333);
    ChunkStore store(file, 1000);
    EXPECT_EQ(store.reassemble(), file);
    EXPECT_EQ(store.held_count(), 4u);
    store.drop(3);
    EXPECT_FALSE(store.reassemble().has_value());
    EXPECT_EQ(store.held_count(), 3u);
}
