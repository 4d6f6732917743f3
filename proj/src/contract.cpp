#include "blockhouse/contract.hpp"

#include "blockhouse/error.hpp"

namespace blockhouse {

std::string_view to_string(ContractState state) {
    switch (state) {
        case ContractState::Proposed: return "Proposed";
        case ContractState::Requested: return "Requested";
        case ContractState::Active: return "Active";
        case ContractState::AwaitingFinalAck: return "AwaitingFinalAck";
        case ContractState::Disputed: return "Disputed";
        case ContractState::Settled: return "Settled";
    }
    return "unknown";
}

std::string_view to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::NormalEnd: return "NormalEnd";
        case OutcomeKind::EarlyClient: return "EarlyClient";
        case OutcomeKind::EarlyHost: return "EarlyHost";
        case OutcomeKind::ProofFailure: return "ProofFailure";
        case OutcomeKind::DisputeClientDishonest: return "DisputeClientDishonest";
        case OutcomeKind::DisputeHostDishonest: return "DisputeHostDishonest";
        case OutcomeKind::DisputeEscalated: return "DisputeEscalated";
    }
    return "unknown";
}

std::uint32_t StorageContract::failures() const {
    std::uint32_t n = 0;
    for (const auto& e : epoch_log) {
        if (e.verdict != ProofVerdict::Ok) {
            ++n;
        }
    }
    return n;
}

TokenAmount StorageContract::installment(std::uint32_t epoch) const {
    const std::uint32_t k = epochs();
    TokenAmount base = terms.total_price / k;
    if (epoch == k) {
        base += terms.total_price % k;
    }
    return base;
}

TokenAmount SettlementOutcome::total() const {
    TokenAmount sum;
    for (const auto& t : transfers) {
        sum += t.amount;
    }
    for (const auto& [node, amount] : refunds) {
        sum += amount;
    }
    return sum;
}

namespace {

struct Routing {
    NodeId pool;
    NodeId client_aud;
    NodeId host_aud;
    NodeId file_seq;
};

void emit(std::vector<Transfer>& out, const EscrowAccount& escrow, EscrowSlot slot, std::optional<NodeId> to) {
    if (!to) {
        if (!escrow.slot(slot).is_zero()) {
            throw ProtocolError(ErrorCode::InvalidState, "escrowed tokens without a recipient");
        }
        return;
    }
    out.push_back(Transfer{slot, *to, escrow.slot(slot)});
}

void split_among(std::vector<Transfer>& out, EscrowSlot slot, TokenAmount pot, std::span<const NodeId> winners) {
    if (winners.empty()) {
        out.push_back(Transfer{slot, kBurnAccount, pot});
        return;
    }
    const TokenAmount share = pot / winners.size();
    for (NodeId w : winners) {
        out.push_back(Transfer{slot, w, share});
    }
    const TokenAmount remainder = pot % winners.size();
    if (!remainder.is_zero()) {
        out.push_back(Transfer{slot, kBurnAccount, remainder});
    }
}

}  // namespace

std::vector<Transfer> plan_settlement(OutcomeKind kind, const StorageContract& contract, const EscrowAccount& escrow) {
    const std::optional<NodeId> client = contract.client;
    const std::optional<NodeId> host = contract.host;
    std::vector<Transfer> out;
    switch (kind) {
        case OutcomeKind::NormalEnd:
        case OutcomeKind::EarlyClient:
            emit(out, escrow, EscrowSlot::PaymentPool, host);
            emit(out, escrow, EscrowSlot::ClientAuditorsSeq, client);
            emit(out, escrow, EscrowSlot::HostAuditorsSeq, host);
            emit(out, escrow, EscrowSlot::HostFileSeq, host);
            break;
        case OutcomeKind::EarlyHost:
        case OutcomeKind::ProofFailure:
            emit(out, escrow, EscrowSlot::PaymentPool, client);
            emit(out, escrow, EscrowSlot::ClientAuditorsSeq, client);
            emit(out, escrow, EscrowSlot::HostAuditorsSeq, host);
            emit(out, escrow, EscrowSlot::HostFileSeq, client);
            break;
        case OutcomeKind::DisputeEscalated:
            emit(out, escrow, EscrowSlot::PaymentPool, client);
            emit(out, escrow, EscrowSlot::ClientAuditorsSeq, client);
            emit(out, escrow, EscrowSlot::HostAuditorsSeq, host);
            emit(out, escrow, EscrowSlot::HostFileSeq, host);
            break;
        case OutcomeKind::DisputeClientDishonest:
        case OutcomeKind::DisputeHostDishonest:
            throw ProtocolError(ErrorCode::InvalidArgument, "dispute verdicts are planned with their majority");
    }
    return out;
}

std::vector<Transfer> plan_dispute_settlement(OutcomeKind kind, const StorageContract& contract,
                                              const EscrowAccount& escrow, std::span<const NodeId> majority) {
    if (!contract.host) {
        throw ProtocolError(ErrorCode::InvalidState, "dispute on a contract without host");
    }
    const NodeId client = contract.client;
    const NodeId host = *contract.host;
    std::vector<Transfer> out;
    switch (kind) {
        case OutcomeKind::DisputeHostDishonest:
            emit(out, escrow, EscrowSlot::PaymentPool, client);
            emit(out, escrow, EscrowSlot::ClientAuditorsSeq, client);
            emit(out, escrow, EscrowSlot::HostFileSeq, client);
            split_among(out, EscrowSlot::HostAuditorsSeq, escrow.host_auditors_seq, majority);
            break;
        case OutcomeKind::DisputeClientDishonest:
            emit(out, escrow, EscrowSlot::PaymentPool, host);
            emit(out, escrow, EscrowSlot::HostAuditorsSeq, host);
            emit(out, escrow, EscrowSlot::HostFileSeq, host);
            split_among(out, EscrowSlot::ClientAuditorsSeq, escrow.client_auditors_seq, majority);
            break;
        default:
            return plan_settlement(kind, contract, escrow);
    }
    return out;
}

Seed derive_seed(const LedgerState& ledger, const StorageContract& contract, std::uint32_t epoch, Seconds anchor_time,
                 std::uint64_t* seed_block) {
    const auto block = ledger.last_block_before(anchor_time);
    if (!block) {
        throw ProtocolError(ErrorCode::OutOfRange, "no block precedes the seed anchor time");
    }
    if (seed_block != nullptr) {
        *seed_block = *block;
    }
    SeedInputs in;
    in.block_hash = ledger.block_hash(*block);
    in.contract = contract.id;
    in.epoch = epoch;
    in.client = contract.client;
    in.host = contract.host.value_or(NodeId{});
    if (epoch >= 2 && epoch - 2 < contract.epoch_log.size()) {
        in.previous_proof = contract.epoch_log[epoch - 2].proof_hash.value_or(kZeroDigest);
    }
    return derive_seed(in);
}

}  // namespace blockhouse
