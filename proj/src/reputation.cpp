#include "blockhouse/reputation.hpp"

#include "blockhouse/error.hpp"

namespace blockhouse {

void ReputationBook::record_proof(NodeId host, bool succeeded) {
    auto& r = records_[host];
    ++r.host_proofs_submitted;
    if (succeeded) {
        ++r.host_proofs_succeeded;
    }
}

void ReputationBook::record_litigation(NodeId client) { ++records_[client].client_litigations; }

ReputationRecord ReputationBook::record(NodeId id) const {
    auto it = records_.find(id);
    return it == records_.end() ? ReputationRecord{} : it->second;
}

double ReputationBook::host_score(NodeId host) const {
    const auto r = record(host);
    if (r.host_proofs_submitted == 0) {
        return 1.0;
    }
    return static_cast<double>(r.host_proofs_succeeded) / static_cast<double>(r.host_proofs_submitted);
}

std::uint64_t ReputationBook::client_score(NodeId client) const { return record(client).client_litigations; }

ReputationBook ReputationBook::from_chain(const LedgerState& ledger) {
    ReputationBook book;
    std::map<ContractId, NodeId> clients;
    for (const Block& block : ledger.blocks()) {
        for (std::size_t i = 0; i < block.txs.size(); ++i) {
            const Transaction& tx = block.txs[i];
            const Receipt& receipt = block.receipts[i];
            if (std::holds_alternative<Proposal>(tx.payload) && receipt.contract) {
                clients[*receipt.contract] = tx.sender;
            } else if (std::holds_alternative<ProofSubmission>(tx.payload) && receipt.verdict) {
                book.record_proof(tx.sender, *receipt.verdict == ProofVerdict::Ok);
            } else if (const auto* d = std::get_if<DisputeOpen>(&tx.payload)) {
                auto it = clients.find(d->contract);
                if (it != clients.end()) {
                    book.record_litigation(it->second);
                }
            }
        }
    }
    return book;
}

NodeId best_host(std::span<const NodeId> requesters, const ReputationBook& book) {
    if (requesters.empty()) {
        throw ProtocolError(ErrorCode::InvalidArgument, "no requesters to choose from");
    }
    NodeId best = requesters.front();
    double best_score = book.host_score(best);
    for (NodeId id : requesters.subspan(1)) {
        const double s = book.host_score(id);
        if (s > best_score || (s == best_score && id < best)) {
            best = id;
            best_score = s;
        }
    }
    return best;
}

}  // namespace blockhouse
