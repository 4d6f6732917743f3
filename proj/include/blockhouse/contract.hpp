#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "blockhouse/ledger.hpp"
#include "blockhouse/por.hpp"
#include "blockhouse/transaction.hpp"
#include "blockhouse/types.hpp"

namespace blockhouse {

enum class ContractState : std::uint8_t {
    Proposed,
    Requested,
    Active,
    AwaitingFinalAck,  ///< every epoch resolved; client must acknowledge or dispute
    Disputed,          ///< frozen until the audit case resolves
    Settled,
};

enum class OutcomeKind : std::uint8_t {
    NormalEnd,
    EarlyClient,
    EarlyHost,
    ProofFailure,
    DisputeClientDishonest,
    DisputeHostDishonest,
    DisputeEscalated,  ///< tied audit; every deposit goes back to its owner
};

std::string_view to_string(ContractState state);
std::string_view to_string(OutcomeKind kind);

struct EpochRecord {
    std::uint32_t epoch = 0;
    Seconds due_time = 0;
    ProofVerdict verdict = ProofVerdict::Missed;
    std::optional<Digest> proof_hash;
    std::optional<std::uint64_t> seed_block;
    TokenAmount paid;
};

struct StorageContract {
    ContractId id;
    NodeId client;
    ContractTerms terms;
    ContractState state = ContractState::Proposed;
    std::optional<OutcomeKind> outcome;
    std::vector<NodeId> requesters;  ///< hosts whose deposits are pending
    std::optional<NodeId> host;      ///< chosen at agreement
    std::optional<FileMetadata> metadata;
    Seconds accepted_at = 0;
    std::vector<EpochRecord> epoch_log;  ///< resolved epochs, in order
    std::optional<CaseId> audit_case;

    std::uint32_t epochs() const { return terms.epochs(); }
    Seconds due_time(std::uint32_t epoch) const { return accepted_at + terms.proof_period * epoch; }
    /// Earliest epoch without a verdict, or epochs()+1 when all are resolved.
    std::uint32_t next_epoch() const { return static_cast<std::uint32_t>(epoch_log.size()) + 1; }
    std::uint32_t failures() const;
    /// floor(price / K), plus the remainder on the last epoch.
    TokenAmount installment(std::uint32_t epoch) const;
    bool is_party(NodeId id) const { return id == client || (host && *host == id); }
};

struct Transfer {
    EscrowSlot from = EscrowSlot::PaymentPool;
    NodeId to;  ///< kBurnAccount for remainders
    TokenAmount amount;

    friend bool operator==(const Transfer&, const Transfer&) = default;
};

struct SettlementOutcome {
    ContractId contract;
    OutcomeKind kind = OutcomeKind::NormalEnd;
    Seconds time = 0;
    std::vector<Transfer> transfers;
    /// Pending requester deposits refunded as part of settling.
    std::vector<std::pair<NodeId, TokenAmount>> refunds;

    TokenAmount total() const;
};

/// Escrow routing for outcomes that involve no auditors. Zero-amount
/// transfers are kept so every outcome lists the same slots.
std::vector<Transfer> plan_settlement(OutcomeKind kind, const StorageContract& contract, const EscrowAccount& escrow);

/// Dispute routing: the dishonest side's auditors sequestration is split equally
/// among `majority` (remainder burned); every other slot follows the verdict.
std::vector<Transfer> plan_dispute_settlement(OutcomeKind kind, const StorageContract& contract,
                                              const EscrowAccount& escrow, std::span<const NodeId> majority);

/// Spec-shaped seed derivation: gathers the ledger elements for `epoch` of
/// `contract` and hashes them. The block used is the newest one strictly before
/// `anchor_time`; throws OutOfRange if there is none.
Seed derive_seed(const LedgerState& ledger, const StorageContract& contract, std::uint32_t epoch,
                 Seconds anchor_time, std::uint64_t* seed_block = nullptr);

}  // namespace blockhouse
