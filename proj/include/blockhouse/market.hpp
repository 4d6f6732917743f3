#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "blockhouse/arbitration.hpp"
#include "blockhouse/contract.hpp"
#include "blockhouse/ledger.hpp"
#include "blockhouse/reputation.hpp"

namespace blockhouse {

struct MarketConfig {
    /// Auditors drawn per dispute; clamped to the eligible pool.
    std::uint32_t auditors_per_case = 41;
    /// Voting window; nullopt means one proof period of the disputed contract.
    std::optional<Seconds> vote_timeout;
};

/// The storage smart contract. Every lifecycle step arrives as a ledger
/// transaction; time-based rules run from on_clock.
///
///   Proposed -> Requested -> Active -> AwaitingFinalAck -> Settled
///                                  \-> Settled           \-> Disputed -> Settled
class Market final : public TransactionProcessor {
public:
    explicit Market(MarketConfig config = {}) : config_(config) {}

    Receipt apply(const Transaction& tx, LedgerState& state) override;
    std::vector<SystemAction> on_clock(LedgerState& state) override;

    /// Hosts without a declared capacity are unlimited.
    void set_capacity(NodeId host, std::uint64_t bytes) { capacity_[host] = bytes; }
    std::optional<std::uint64_t> free_capacity(NodeId host) const;

    const MarketConfig& config() const { return config_; }
    const StorageContract& contract(ContractId id) const;
    const std::map<ContractId, StorageContract>& contracts() const { return contracts_; }
    const Arbitrator& arbitration() const { return arbitrator_; }
    const ReputationBook& reputation() const { return reputation_; }
    const std::vector<SettlementOutcome>& settlements() const { return settlements_; }

    /// Challenge the contract will check for `epoch` given the current chain.
    /// Hosts call this to build their proof.
    Challenge epoch_challenge(const LedgerState& state, ContractId id, std::uint32_t epoch) const;
    /// Seed for auditor selection of a dispute opened now.
    Seed dispute_seed(const LedgerState& state, ContractId id) const;
    /// Deadline after which a missing acknowledgement opens a dispute.
    Seconds final_ack_deadline(const StorageContract& c, Seconds max_skew) const;

private:
    Receipt on_proposal(const Transaction& tx, const Proposal& p, LedgerState& state);
    Receipt on_request(const Transaction& tx, const HostRequest& r, LedgerState& state);
    Receipt on_agreement(const Transaction& tx, const Agreement& a, LedgerState& state);
    Receipt on_proof(const Transaction& tx, const ProofSubmission& s, LedgerState& state);
    Receipt on_ack(const Transaction& tx, const CompletionAck& a, LedgerState& state);
    Receipt on_termination(const Transaction& tx, const Termination& t, LedgerState& state);
    Receipt on_dispute(const Transaction& tx, const DisputeOpen& d, LedgerState& state);
    Receipt on_vote(const Transaction& tx, const AuditorVote& v, LedgerState& state);

    StorageContract& get_mut(ContractId id);
    Receipt open_case(StorageContract& c, LedgerState& state);
    /// Moves to AwaitingFinalAck once every epoch has a verdict, or settles on
    /// too many failures. Returns true if the contract was settled.
    bool after_verdict(StorageContract& c, LedgerState& state);
    SettlementOutcome settle(StorageContract& c, OutcomeKind kind, LedgerState& state);
    void record_settlement(StorageContract& c, SettlementOutcome outcome);

    MarketConfig config_;
    std::map<ContractId, StorageContract> contracts_;
    std::map<NodeId, std::uint64_t> capacity_;
    std::map<NodeId, std::uint64_t> used_;
    Arbitrator arbitrator_;
    ReputationBook reputation_;
    std::vector<SettlementOutcome> settlements_;
    std::uint64_t next_contract_ = 1;
};

}  // namespace blockhouse
