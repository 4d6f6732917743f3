#include "blockhouse/market.hpp"

#include <algorithm>

#include "blockhouse/error.hpp"

#include "overloaded.hpp"

namespace blockhouse {
namespace {

void require(bool condition, ErrorCode code, const char* what) {
    if (!condition) {
        throw ProtocolError(code, what);
    }
}

}  // namespace

const StorageContract& Market::contract(ContractId id) const {
    auto it = contracts_.find(id);
    if (it == contracts_.end()) {
        throw ProtocolError(ErrorCode::UnknownContract, "unknown contract " + std::to_string(id.value));
    }
    return it->second;
}

StorageContract& Market::get_mut(ContractId id) { return const_cast<StorageContract&>(contract(id)); }

std::optional<std::uint64_t> Market::free_capacity(NodeId host) const {
    auto cap = capacity_.find(host);
    if (cap == capacity_.end()) {
        return std::nullopt;
    }
    auto used = used_.find(host);
    const std::uint64_t in_use = used == used_.end() ? 0 : used->second;
    return cap->second > in_use ? cap->second - in_use : 0;
}

Seconds Market::final_ack_deadline(const StorageContract& c, Seconds max_skew) const {
    return c.due_time(c.epochs()) + max_skew + c.terms.proof_period;
}

Challenge Market::epoch_challenge(const LedgerState& state, ContractId id, std::uint32_t epoch) const {
    const StorageContract& c = contract(id);
    require(c.metadata.has_value(), ErrorCode::InvalidState, "contract has no metadata yet");
    require(epoch >= 1 && epoch <= c.epochs(), ErrorCode::OutOfRange, "epoch out of range");
    const Seed seed = derive_seed(state, c, epoch, c.due_time(epoch));
    return derive_challenge(seed, c.metadata->chunk_count, c.terms.challenge_size);
}

Seed Market::dispute_seed(const LedgerState& state, ContractId id) const {
    const StorageContract& c = contract(id);
    return derive_seed(state, c, c.epochs() + 1, state.clock() + 1);
}

Receipt Market::apply(const Transaction& tx, LedgerState& state) {
    return std::visit(
        detail::Overloaded{
            [&](const Registration&) -> Receipt {
                throw ProtocolError(ErrorCode::NotAuthorized, "registration only happens at genesis");
            },
            [&](const Proposal& p) { return on_proposal(tx, p, state); },
            [&](const HostRequest& r) { return on_request(tx, r, state); },
            [&](const Agreement& a) { return on_agreement(tx, a, state); },
            [&](const ProofSubmission& s) { return on_proof(tx, s, state); },
            [&](const CompletionAck& a) { return on_ack(tx, a, state); },
            [&](const Termination& t) { return on_termination(tx, t, state); },
            [&](const DisputeOpen& d) { return on_dispute(tx, d, state); },
            [&](const AuditorVote& v) { return on_vote(tx, v, state); },
        },
        tx.payload);
}

Receipt Market::on_proposal(const Transaction& tx, const Proposal& p, LedgerState&) {
    validate(p.terms);
    StorageContract c;
    c.id = ContractId{next_contract_++};
    c.client = tx.sender;
    c.terms = p.terms;
    const ContractId id = c.id;
    contracts_.emplace(id, std::move(c));
    Receipt r;
    r.contract = id;
    return r;
}

Receipt Market::on_request(const Transaction& tx, const HostRequest& req, LedgerState& state) {
    StorageContract& c = get_mut(req.contract);
    require(c.state == ContractState::Proposed || c.state == ContractState::Requested, ErrorCode::InvalidState,
            "contract is not open for requests");
    require(tx.sender != c.client, ErrorCode::NotAuthorized, "a client cannot host its own contract");
    require(std::find(c.requesters.begin(), c.requesters.end(), tx.sender) == c.requesters.end(),
            ErrorCode::Duplicate, "host already requested this contract");
    const auto free = free_capacity(tx.sender);
    require(!free || *free >= c.terms.data_size, ErrorCode::InsufficientCapacity, "not enough free storage");
    const TokenAmount deposit = c.terms.file_sequestration + c.terms.auditors_sequestration;
    state.deposit_request(tx.sender, c.id, deposit);
    c.requesters.push_back(tx.sender);
    c.state = ContractState::Requested;
    Receipt r;
    r.contract = c.id;
    r.escrowed = deposit;
    return r;
}

Receipt Market::on_agreement(const Transaction& tx, const Agreement& a, LedgerState& state) {
    StorageContract& c = get_mut(a.contract);
    require(tx.sender == c.client, ErrorCode::NotAuthorized, "only the client validates the agreement");
    require(c.state == ContractState::Requested, ErrorCode::InvalidState, "contract has no pending request");
    require(std::find(c.requesters.begin(), c.requesters.end(), a.host) != c.requesters.end(),
            ErrorCode::NotAuthorized, "chosen host did not request this contract");
    require(!state.is_banned(a.host), ErrorCode::Banned, "chosen host is banned");
    const FileMetadata& m = a.metadata;
    require(m.file_size == c.terms.data_size && m.chunk_size > 0 &&
                m.chunk_count == (m.file_size + m.chunk_size - 1) / m.chunk_size,
            ErrorCode::InvalidArgument, "metadata does not match the advertised data size");
    const auto free = free_capacity(a.host);
    require(!free || *free >= c.terms.data_size, ErrorCode::InsufficientCapacity, "host has no free storage left");
    const TokenAmount client_deposit = c.terms.total_price + c.terms.auditors_sequestration;
    require(state.balance(c.client) >= client_deposit, ErrorCode::InsufficientFunds,
            "client cannot fund price and auditors sequestration");

    state.deposit(c.client, c.id, EscrowSlot::PaymentPool, c.terms.total_price);
    state.deposit(c.client, c.id, EscrowSlot::ClientAuditorsSeq, c.terms.auditors_sequestration);
    state.promote_request(c.id, a.host, c.terms.file_sequestration, c.terms.auditors_sequestration);
    TokenAmount refunded;
    for (NodeId other : c.requesters) {
        if (other != a.host) {
            refunded += state.escrow(c.id).pending_requests.at(other);
            state.refund_request(c.id, other);
        }
    }
    c.requesters.clear();
    c.host = a.host;
    c.metadata = a.metadata;
    c.accepted_at = state.clock();
    c.state = ContractState::Active;
    used_[a.host] += c.terms.data_size;

    Receipt r;
    r.contract = c.id;
    r.escrowed = client_deposit;
    r.released = refunded;
    return r;
}

Receipt Market::on_proof(const Transaction& tx, const ProofSubmission& s, LedgerState& state) {
    StorageContract& c = get_mut(s.contract);
    require(c.host && tx.sender == *c.host, ErrorCode::NotAuthorized, "only the host submits proofs");
    require(c.state == ContractState::Active, ErrorCode::InvalidState, "contract is not collecting proofs");
    require(s.epoch >= 1, ErrorCode::OutOfRange, "epochs start at 1");
    require(s.epoch >= c.next_epoch(), ErrorCode::Duplicate, "epoch already resolved");
    require(s.epoch == c.next_epoch(), ErrorCode::OutsideWindow, "epoch is not the current one");
    const Seconds due = c.due_time(s.epoch);
    require(tx.timestamp >= due - state.max_skew() && tx.timestamp <= due + state.max_skew(),
            ErrorCode::OutsideWindow, "proof outside its submission window");

    std::uint64_t seed_block = 0;
    const Seed seed = derive_seed(state, c, s.epoch, due, &seed_block);
    const Challenge challenge = derive_challenge(seed, c.metadata->chunk_count, c.terms.challenge_size);
    const bool ok = verify_proof(*c.metadata, challenge, s.proof);

    EpochRecord rec;
    rec.epoch = s.epoch;
    rec.due_time = due;
    rec.verdict = ok ? ProofVerdict::Ok : ProofVerdict::Bad;
    rec.proof_hash = proof_hash(s.proof);
    rec.seed_block = seed_block;
    if (ok) {
        rec.paid = c.installment(s.epoch);
        state.release(c.id, EscrowSlot::PaymentPool, *c.host, rec.paid);
    }
    c.epoch_log.push_back(rec);
    reputation_.record_proof(*c.host, ok);

    Receipt r;
    r.contract = c.id;
    r.verdict = rec.verdict;
    r.seed_block = seed_block;
    r.released = rec.paid;
    if (after_verdict(c, state)) {
        r.settled = true;
        r.released += settlements_.back().total();
    }
    return r;
}

Receipt Market::on_ack(const Transaction& tx, const CompletionAck& a, LedgerState& state) {
    StorageContract& c = get_mut(a.contract);
    require(tx.sender == c.client, ErrorCode::NotAuthorized, "only the client acknowledges the download");
    require(c.state == ContractState::AwaitingFinalAck, ErrorCode::InvalidState,
            "acknowledgement only after every epoch is resolved");
    const SettlementOutcome outcome = settle(c, OutcomeKind::NormalEnd, state);
    Receipt r;
    r.contract = c.id;
    r.released = outcome.total();
    r.settled = true;
    return r;
}

Receipt Market::on_termination(const Transaction& tx, const Termination& t, LedgerState& state) {
    StorageContract& c = get_mut(t.contract);
    OutcomeKind kind{};
    if (tx.sender == c.client) {
        require(c.state == ContractState::Proposed || c.state == ContractState::Requested ||
                    c.state == ContractState::Active,
                ErrorCode::InvalidState, "contract can no longer be terminated by the client");
        kind = OutcomeKind::EarlyClient;
    } else if (c.host && tx.sender == *c.host) {
        require(c.state == ContractState::Active, ErrorCode::InvalidState,
                "contract can no longer be terminated by the host");
        kind = OutcomeKind::EarlyHost;
    } else {
        throw ProtocolError(ErrorCode::NotAuthorized, "only a party can terminate the contract");
    }
    const SettlementOutcome outcome = settle(c, kind, state);
    Receipt r;
    r.contract = c.id;
    r.released = outcome.total();
    r.settled = true;
    return r;
}

Receipt Market::on_dispute(const Transaction& tx, const DisputeOpen& d, LedgerState& state) {
    StorageContract& c = get_mut(d.contract);
    require(tx.sender == c.client, ErrorCode::NotAuthorized, "only the client disputes the restitution");
    require(c.state == ContractState::AwaitingFinalAck, ErrorCode::InvalidState,
            "disputes are only possible at the end of the contract");
    return open_case(c, state);
}

Receipt Market::open_case(StorageContract& c, LedgerState& state) {
    const auto eligible = eligible_auditors(state, c);
    const std::size_t n = std::min<std::size_t>(config_.auditors_per_case, eligible.size());
    auto auditors = select_auditors(eligible, dispute_seed(state, c.id), n);
    const CaseId id =
        arbitrator_.open(c.id, std::move(auditors), state.clock(), config_.vote_timeout.value_or(c.terms.proof_period));
    c.audit_case = id;
    c.state = ContractState::Disputed;
    reputation_.record_litigation(c.client);
    Receipt r;
    r.contract = c.id;
    r.audit_case = id;
    return r;
}

Receipt Market::on_vote(const Transaction& tx, const AuditorVote& v, LedgerState& state) {
    arbitrator_.cast_vote(tx.sender, v.audit_case, v.vote, state.clock());
    const AuditCase& audit = arbitrator_.get(v.audit_case);
    Receipt r;
    r.contract = audit.contract;
    r.audit_case = v.audit_case;
    if (audit.all_voted()) {
        StorageContract& c = get_mut(audit.contract);
        SettlementOutcome outcome = arbitrator_.resolve(v.audit_case, c, state);
        r.released = outcome.total();
        r.settled = true;
        record_settlement(c, std::move(outcome));
    }
    return r;
}

bool Market::after_verdict(StorageContract& c, LedgerState& state) {
    if (c.failures() >= c.terms.missed_or_bad_proof_limit) {
        settle(c, OutcomeKind::ProofFailure, state);
        return true;
    }
    if (c.epoch_log.size() == c.epochs()) {
        c.state = ContractState::AwaitingFinalAck;
    }
    return false;
}

SettlementOutcome Market::settle(StorageContract& c, OutcomeKind kind, LedgerState& state) {
    SettlementOutcome outcome;
    outcome.contract = c.id;
    outcome.kind = kind;
    outcome.time = state.clock();
    outcome.transfers = plan_settlement(kind, c, state.escrow(c.id));
    for (const auto& [host, amount] : state.escrow(c.id).pending_requests) {
        outcome.refunds.emplace_back(host, amount);
    }
    for (const auto& [host, amount] : outcome.refunds) {
        state.refund_request(c.id, host);
    }
    for (const auto& t : outcome.transfers) {
        state.release(c.id, t.from, t.to, t.amount);
    }
    c.requesters.clear();
    c.state = ContractState::Settled;
    c.outcome = kind;
    record_settlement(c, outcome);
    return outcome;
}

void Market::record_settlement(StorageContract& c, SettlementOutcome outcome) {
    if (c.host) {
        auto& used = used_[*c.host];
        used -= std::min(used, c.terms.data_size);
    }
    settlements_.push_back(std::move(outcome));
}

std::vector<SystemAction> Market::on_clock(LedgerState& state) {
    std::vector<SystemAction> actions;
    const Seconds now = state.clock();
    for (auto& [id, c] : contracts_) {
        // A banned client can no longer withdraw, so its open proposals are closed for it.
        if ((c.state == ContractState::Proposed || c.state == ContractState::Requested) && state.is_banned(c.client)) {
            Transaction tx{kSystemAccount, now, Termination{c.id}};
            const SettlementOutcome outcome = settle(c, OutcomeKind::EarlyClient, state);
            Receipt r;
            r.contract = c.id;
            r.released = outcome.total();
            r.settled = true;
            actions.push_back(SystemAction{std::move(tx), std::move(r)});
            continue;
        }
        if (c.state == ContractState::Active) {
            while (c.state == ContractState::Active && c.next_epoch() <= c.epochs() &&
                   now > c.due_time(c.next_epoch()) + state.max_skew()) {
                EpochRecord rec;
                rec.epoch = c.next_epoch();
                rec.due_time = c.due_time(rec.epoch);
                rec.verdict = ProofVerdict::Missed;
                c.epoch_log.push_back(rec);
                after_verdict(c, state);
            }
        }
        if (c.state == ContractState::AwaitingFinalAck && now > final_ack_deadline(c, state.max_skew())) {
            Transaction tx{kSystemAccount, now, DisputeOpen{c.id}};
            Receipt r = open_case(c, state);
            actions.push_back(SystemAction{std::move(tx), std::move(r)});
        }
    }
    for (CaseId id : arbitrator_.expired(now)) {
        StorageContract& c = get_mut(arbitrator_.get(id).contract);
        record_settlement(c, arbitrator_.resolve(id, c, state));
    }
    return actions;
}

}  // namespace blockhouse
