#include "blockhouse/arbitration.hpp"

#include <algorithm>

#include "blockhouse/analysis.hpp"
#include "blockhouse/codec.hpp"
#include "blockhouse/error.hpp"
#include "blockhouse/rng.hpp"

namespace blockhouse {

std::string_view to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::ClientDishonest: return "client_dishonest";
        case Verdict::HostDishonest: return "host_dishonest";
        case Verdict::Tie: return "tie";
    }
    return "unknown";
}

bool AuditCase::is_auditor(NodeId id) const {
    return std::find(auditors.begin(), auditors.end(), id) != auditors.end();
}

Verdict Tally::verdict() const {
    if (available > unavailable) {
        return Verdict::ClientDishonest;
    }
    if (unavailable > available) {
        return Verdict::HostDishonest;
    }
    return Verdict::Tie;
}

Tally tally(const AuditCase& audit_case) {
    Tally t;
    for (const auto& [auditor, vote] : audit_case.votes) {
        if (vote == Vote::FileAvailable) {
            ++t.available;
        } else {
            ++t.unavailable;
        }
    }
    return t;
}

std::vector<NodeId> eligible_auditors(const LedgerState& ledger, const StorageContract& contract) {
    std::vector<NodeId> out;
    for (NodeId id : ledger.nodes()) {
        if (id == kSystemAccount || id == kBurnAccount || ledger.is_banned(id) || contract.is_party(id)) {
            continue;
        }
        out.push_back(id);
    }
    return out;
}

std::vector<NodeId> select_auditors(std::span<const NodeId> eligible, const Seed& seed, std::size_t n) {
    if (eligible.size() < n) {
        throw ProtocolError(ErrorCode::InsufficientAuditors,
                            "need " + std::to_string(n) + " auditors, only " + std::to_string(eligible.size()) +
                                " eligible");
    }
    ByteWriter key;
    key.text("blockhouse.auditors").digest(seed.value);
    DigestRng rng(sha256(key.data()));
    std::vector<NodeId> pool(eligible.begin(), eligible.end());
    // Partial Fisher-Yates: the first n slots are a uniform n-subset in draw order.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

std::uint32_t required_auditors(double p, double target) { return analysis::min_auditors(p, target); }

std::vector<NodeId> majority_voters(const AuditCase& audit_case, Verdict verdict) {
    std::vector<NodeId> out;
    if (verdict == Verdict::Tie) {
        return out;
    }
    const Vote winning = verdict == Verdict::ClientDishonest ? Vote::FileAvailable : Vote::FileUnavailable;
    for (NodeId a : audit_case.auditors) {
        auto it = audit_case.votes.find(a);
        if (it != audit_case.votes.end() && it->second == winning) {
            out.push_back(a);
        }
    }
    return out;
}

CaseId Arbitrator::open(ContractId contract, std::vector<NodeId> auditors, Seconds now, Seconds vote_timeout) {
    const CaseId id{next_case_++};
    AuditCase c;
    c.id = id;
    c.contract = contract;
    c.auditors = std::move(auditors);
    c.opened_at = now;
    c.deadline = now + vote_timeout;
    cases_.emplace(id, std::move(c));
    return id;
}

AuditCase& Arbitrator::get_mut(CaseId id) {
    auto it = cases_.find(id);
    if (it == cases_.end()) {
        throw ProtocolError(ErrorCode::UnknownCase, "unknown audit case " + std::to_string(id.value));
    }
    return it->second;
}

const AuditCase& Arbitrator::get(CaseId id) const { return const_cast<Arbitrator*>(this)->get_mut(id); }

void Arbitrator::check_vote(NodeId auditor, CaseId id, Seconds now) const {
    const AuditCase& c = get(id);
    if (c.resolved()) {
        throw ProtocolError(ErrorCode::InvalidState, "audit case already resolved");
    }
    if (!c.is_auditor(auditor)) {
        throw ProtocolError(ErrorCode::NotAuthorized, "sender is not an auditor of this case");
    }
    if (c.votes.contains(auditor)) {
        throw ProtocolError(ErrorCode::Duplicate, "auditor already voted");
    }
    if (now > c.deadline) {
        throw ProtocolError(ErrorCode::OutsideWindow, "voting window closed");
    }
}

void Arbitrator::cast_vote(NodeId auditor, CaseId id, Vote vote, Seconds now) {
    check_vote(auditor, id, now);
    get_mut(id).votes.emplace(auditor, vote);
}

std::vector<CaseId> Arbitrator::expired(Seconds now) const {
    std::vector<CaseId> out;
    for (const auto& [id, c] : cases_) {
        if (!c.resolved() && now > c.deadline) {
            out.push_back(id);
        }
    }
    return out;
}

SettlementOutcome Arbitrator::resolve(CaseId id, StorageContract& contract, LedgerState& ledger) {
    AuditCase& c = get_mut(id);
    if (c.resolved()) {
        throw ProtocolError(ErrorCode::InvalidState, "audit case already resolved");
    }
    if (contract.id != c.contract || contract.state != ContractState::Disputed || !contract.host) {
        throw ProtocolError(ErrorCode::InvalidState, "contract is not awaiting this verdict");
    }
    const Verdict verdict = tally(c).verdict();
    OutcomeKind kind = OutcomeKind::DisputeEscalated;
    std::optional<NodeId> dishonest;
    EscrowSlot reward_slot = EscrowSlot::HostAuditorsSeq;
    if (verdict == Verdict::HostDishonest) {
        kind = OutcomeKind::DisputeHostDishonest;
        dishonest = *contract.host;
    } else if (verdict == Verdict::ClientDishonest) {
        kind = OutcomeKind::DisputeClientDishonest;
        dishonest = contract.client;
        reward_slot = EscrowSlot::ClientAuditorsSeq;
    }
    const auto majority = majority_voters(c, verdict);

    SettlementOutcome outcome;
    outcome.contract = contract.id;
    outcome.kind = kind;
    outcome.time = ledger.clock();
    outcome.transfers = plan_dispute_settlement(kind, contract, ledger.escrow(contract.id), majority);
    for (const auto& t : outcome.transfers) {
        ledger.release(contract.id, t.from, t.to, t.amount);
        if (dishonest && t.from == reward_slot) {
            if (t.to == kBurnAccount) {
                c.reward_remainder += t.amount;
            } else {
                c.rewards[t.to] += t.amount;
            }
        }
    }
    if (dishonest) {
        ledger.ban(*dishonest);
    }
    c.verdict = verdict;
    contract.state = ContractState::Settled;
    contract.outcome = kind;
    return outcome;
}

}  // namespace blockhouse
