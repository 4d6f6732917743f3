#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "blockhouse/ledger.hpp"
#include "blockhouse/types.hpp"

namespace blockhouse {

struct ReputationRecord {
    std::uint64_t host_proofs_submitted = 0;
    std::uint64_t host_proofs_succeeded = 0;
    std::uint64_t client_litigations = 0;

    friend bool operator==(const ReputationRecord&, const ReputationRecord&) = default;
};

/// Per-node counters. Maintained incrementally by the market and recomputable
/// from the chain alone.
class ReputationBook {
public:
    void record_proof(NodeId host, bool succeeded);
    void record_litigation(NodeId client);

    /// Succeeded / submitted; 1.0 for a host that never submitted.
    double host_score(NodeId host) const;
    /// Number of disputes the node was the client of. Lower is better.
    std::uint64_t client_score(NodeId client) const;

    ReputationRecord record(NodeId id) const;
    const std::map<NodeId, ReputationRecord>& records() const { return records_; }

    /// Replays proof-submission receipts and dispute openings from genesis.
    static ReputationBook from_chain(const LedgerState& ledger);

    friend bool operator==(const ReputationBook&, const ReputationBook&) = default;

private:
    std::map<NodeId, ReputationRecord> records_;
};

/// Highest host_score; ties go to the lower id. Throws on an empty list.
NodeId best_host(std::span<const NodeId> requesters, const ReputationBook& book);

}  // namespace blockhouse
