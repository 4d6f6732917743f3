#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "blockhouse/contract.hpp"
#include "blockhouse/ledger.hpp"
#include "blockhouse/por.hpp"
#include "blockhouse/types.hpp"

namespace blockhouse {

enum class Verdict : std::uint8_t {
    ClientDishonest,  ///< majority found the file available
    HostDishonest,    ///< majority found the file unavailable
    Tie,
};

std::string_view to_string(Verdict verdict);

struct AuditCase {
    CaseId id;
    ContractId contract;
    std::vector<NodeId> auditors;  ///< in selection order
    std::map<NodeId, Vote> votes;
    Seconds opened_at = 0;
    Seconds deadline = 0;  ///< votes after this are not counted
    std::optional<Verdict> verdict;
    std::map<NodeId, TokenAmount> rewards;
    TokenAmount reward_remainder;  ///< burned

    bool is_auditor(NodeId id) const;
    bool all_voted() const { return votes.size() == auditors.size(); }
    bool resolved() const { return verdict.has_value(); }
};

struct Tally {
    std::size_t available = 0;
    std::size_t unavailable = 0;

    /// Majority over cast votes; equal counts (including zero) tie.
    Verdict verdict() const;
};

Tally tally(const AuditCase& audit_case);

/// Nodes that may audit `contract`: registered, not banned, not a party, not the
/// system or burn account. Ascending by id.
std::vector<NodeId> eligible_auditors(const LedgerState& ledger, const StorageContract& contract);

/// n distinct nodes from `eligible`, drawn by a generator keyed on `seed`.
/// Throws InsufficientAuditors when eligible.size() < n.
std::vector<NodeId> select_auditors(std::span<const NodeId> eligible, const Seed& seed, std::size_t n);

/// Smallest auditor count whose normal-approximation dishonest-majority
/// probability is below `target` (delegates to the analysis module).
std::uint32_t required_auditors(double p, double target);

/// Majority voters who receive rewards under `verdict`.
std::vector<NodeId> majority_voters(const AuditCase& audit_case, Verdict verdict);

/// Open cases and their resolution. Owned by the market.
class Arbitrator {
public:
    /// Creates a case with the given auditors. Returns its id.
    CaseId open(ContractId contract, std::vector<NodeId> auditors, Seconds now, Seconds vote_timeout);

    /// Rejects non-auditors, double votes, votes on resolved cases and late votes.
    void check_vote(NodeId auditor, CaseId id, Seconds now) const;
    void cast_vote(NodeId auditor, CaseId id, Vote vote, Seconds now);

    /// Applies the verdict: settles the contract's escrow, pays majority auditors,
    /// bans the dishonest party. The contract is moved to Settled.
    SettlementOutcome resolve(CaseId id, StorageContract& contract, LedgerState& ledger);

    const AuditCase& get(CaseId id) const;
    const std::map<CaseId, AuditCase>& cases() const { return cases_; }
    /// Unresolved cases whose voting deadline has passed at `now`.
    std::vector<CaseId> expired(Seconds now) const;

private:
    AuditCase& get_mut(CaseId id);

    std::map<CaseId, AuditCase> cases_;
    std::uint64_t next_case_ = 1;
};

}  // namespace blockhouse
