#include <gtest/gtest.h>

#include <array>
#include <random>

#include "blockhouse/error.hpp"
#include "support.hpp"

using namespace blockhouse;
using bhtest::World;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ProtocolError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no ProtocolError thrown";
    return ErrorCode::InvalidArgument;
}

std::vector<std::uint8_t> file10k() { return bhtest::test_file(10'000, 42); }

// Sum of what each node received from a settlement.
std::map<NodeId, TokenAmount> credits(const SettlementOutcome& o) {
    std::map<NodeId, TokenAmount> out;
    for (const auto& t : o.transfers) {
        out[t.to] += t.amount;
    }
    for (const auto& [n, a] : o.refunds) {
        out[n] += a;
    }
    return out;
}

}  // namespace

TEST(Terms, Validation) {
    auto t = bhtest::small_terms();
    EXPECT_NO_THROW(validate(t));
    auto bad = t;
    bad.duration = t.proof_period * 3 + 1;
    EXPECT_THROW(validate(bad), ProtocolError);
    bad = t;
    bad.data_size = 0;
    EXPECT_THROW(validate(bad), ProtocolError);
    bad = t;
    bad.proof_period = 0;
    EXPECT_THROW(validate(bad), ProtocolError);
    bad = t;
    bad.missed_or_bad_proof_limit = 0;
    EXPECT_THROW(validate(bad), ProtocolError);
    bad = t;
    bad.challenge_size = 0;
    EXPECT_THROW(validate(bad), ProtocolError);
}

TEST(Contract, LifecycleAndNormalEnd) {
    World w;
    const auto file = file10k();
    const auto terms = bhtest::small_terms(4);
    const ContractId id = w.propose(terms);
    EXPECT_EQ(w.market.contract(id).state, ContractState::Proposed);
    w.submit(w.host, HostRequest{id});
    w.submit(w.host2, HostRequest{id});
    EXPECT_EQ(w.market.contract(id).state, ContractState::Requested);
    EXPECT_EQ(w.state().balance(w.host2), TokenAmount{5000 - 705});
    w.submit(w.client, Agreement{id, w.host, gen_metadata(file, 1024)});
    const auto& c = w.market.contract(id);
    EXPECT_EQ(c.state, ContractState::Active);
    EXPECT_EQ(w.state().balance(w.host2), TokenAmount{5000});  // refunded at agreement
    EXPECT_EQ(w.state().escrow(id).payment_pool, TokenAmount{1003});
    EXPECT_EQ(w.state().escrow(id).host_file_seq, TokenAmount{500});

    const ChunkStore store(file, 1024);
    for (std::uint32_t e = 1; e <= 4; ++e) {
        w.advance_to(c.due_time(e));
        if (e == 4) {
            EXPECT_EQ(code_of([&] { w.submit(w.client, CompletionAck{id}); }), ErrorCode::InvalidState);
        }
        const auto ref = w.prove(id, e, store);
        EXPECT_EQ(ref.receipt.verdict, ProofVerdict::Ok);
        EXPECT_EQ(ref.receipt.released, c.installment(e));
    }
    EXPECT_TRUE(w.state().escrow(id).payment_pool.is_zero());
    EXPECT_EQ(c.state, ContractState::AwaitingFinalAck);
    w.submit(w.client, CompletionAck{id});
    EXPECT_EQ(c.state, ContractState::Settled);
    EXPECT_EQ(c.outcome, OutcomeKind::NormalEnd);
    EXPECT_TRUE(w.state().escrow(id).empty());
    EXPECT_EQ(w.state().balance(w.client), TokenAmount{10'000 - 1003});
    EXPECT_EQ(w.state().balance(w.host), TokenAmount{5'000 + 1003});
    EXPECT_TRUE(w.state().conserved());
}

TEST(Contract, PaymentLinearityAndRemainder) {
    std::mt19937_64 gen(7);
    for (int round = 0; round < 30; ++round) {
        World w(3);
        auto terms = bhtest::small_terms(1 + static_cast<std::uint32_t>(gen() % 9));
        terms.total_price = TokenAmount{gen() % 9000};
        const auto file = file10k();
        const ContractId id = w.activate(terms, file);
        const ChunkStore store(file, 1024);
        const auto& c = w.market.contract(id);
        const std::uint64_t k = c.epochs();
        const std::uint64_t base = terms.total_price.value() / k;
        for (std::uint32_t e = 1; e <= k; ++e) {
            w.advance_to(c.due_time(e));
            w.prove(id, e, store);
            const std::uint64_t expected = base * e + (e == k ? terms.total_price.value() % k : 0);
            ASSERT_EQ(w.state().balance(w.host).value(), 5000 - 705 + expected);
        }
        ASSERT_TRUE(w.state().escrow(id).payment_pool.is_zero());
    }
}

TEST(Contract, BadProofPaysNothingAndDuplicatesRejected) {
    World w;
    const auto file = file10k();
    const ContractId id = w.activate(bhtest::small_terms(4), file);
    const auto& c = w.market.contract(id);
    const ChunkStore store(file, 1024);
    w.advance_to(c.due_time(1));
    // Answer a challenge other than the one asked.
    Challenge other = w.market.epoch_challenge(w.state(), id, 1);
    other.indices = {0, 1, 2};
    const auto before = w.state().balance(w.host);
    const auto ref = w.submit(w.host, ProofSubmission{id, 1, gen_proof(store, other)});
    EXPECT_EQ(ref.receipt.verdict, ProofVerdict::Bad);
    EXPECT_EQ(w.state().balance(w.host), before);
    const auto snap = bhtest::snapshot(w);
    EXPECT_EQ(code_of([&] { w.prove(id, 1, store); }), ErrorCode::Duplicate);
    EXPECT_EQ(code_of([&] { w.prove(id, 3, store); }), ErrorCode::OutsideWindow);
    EXPECT_TRUE(bhtest::snapshot(w) == snap);
}

TEST(Contract, ProofWindowBoundaries) {
    World w;
    const auto file = file10k();
    const ContractId id = w.activate(bhtest::small_terms(4), file);
    const auto& c = w.market.contract(id);
    const ChunkStore store(file, 1024);
    const Seconds due = c.due_time(1);
    w.advance_to(due - 1);
    auto proof_for = [&](std::uint32_t e) {
        return ProofSubmission{id, e, gen_proof(store, w.market.epoch_challenge(w.state(), id, e))};
    };
    EXPECT_EQ(code_of([&] { w.submit_at(w.host, due - 901, proof_for(1)); }), ErrorCode::OutsideWindow);
    EXPECT_EQ(w.submit_at(w.host, due - 900, proof_for(1)).receipt.verdict, ProofVerdict::Ok);
    const Seconds due2 = c.due_time(2);
    w.advance_to(due2 + 1);
    EXPECT_EQ(code_of([&] { w.submit_at(w.host, due2 + 901, proof_for(2)); }), ErrorCode::OutsideWindow);
    EXPECT_EQ(w.submit_at(w.host, due2 + 899, proof_for(2)).receipt.verdict, ProofVerdict::Ok);
}

TEST(Contract, MissedEpochsAndProofFailure) {
    World w;
    const auto file = file10k();
    auto terms = bhtest::small_terms(6);
    terms.missed_or_bad_proof_limit = 3;
    const ContractId id = w.activate(terms, file);
    const auto& c = w.market.contract(id);
    const ChunkStore store(file, 1024);
    w.advance_to(c.due_time(1));
    w.prove(id, 1, store);
    w.advance_to(c.due_time(2) + 900);
    EXPECT_EQ(c.epoch_log.size(), 1u);
    w.ledger.advance_clock(1);
    ASSERT_EQ(c.epoch_log.size(), 2u);
    EXPECT_EQ(c.epoch_log[1].verdict, ProofVerdict::Missed);
    w.advance_to(c.due_time(4) + 901);
    EXPECT_EQ(c.state, ContractState::Settled);
    EXPECT_EQ(c.outcome, OutcomeKind::ProofFailure);
    EXPECT_EQ(c.failures(), 3u);
    const auto& o = w.market.settlements().back();
    auto cr = credits(o);
    EXPECT_EQ(cr[w.client], TokenAmount{1003 - 167 + 205 + 500});
    EXPECT_EQ(cr[w.host], TokenAmount{205});
    EXPECT_TRUE(w.state().escrow(id).empty());
}

TEST(Contract, ProofFailureRoutesLikeEarlyHost) {
    StorageContract c;
    c.id = ContractId{1};
    c.client = NodeId{1};
    c.host = NodeId{2};
    EscrowAccount e;
    e.payment_pool = TokenAmount{700};
    e.client_auditors_seq = TokenAmount{30};
    e.host_auditors_seq = TokenAmount{31};
    e.host_file_seq = TokenAmount{90};
    EXPECT_EQ(plan_settlement(OutcomeKind::ProofFailure, c, e), plan_settlement(OutcomeKind::EarlyHost, c, e));
    const auto normal = plan_settlement(OutcomeKind::NormalEnd, c, e);
    const std::vector<Transfer> expected{{EscrowSlot::PaymentPool, NodeId{2}, TokenAmount{700}},
                                         {EscrowSlot::ClientAuditorsSeq, NodeId{1}, TokenAmount{30}},
                                         {EscrowSlot::HostAuditorsSeq, NodeId{2}, TokenAmount{31}},
                                         {EscrowSlot::HostFileSeq, NodeId{2}, TokenAmount{90}}};
    EXPECT_EQ(normal, expected);
    EXPECT_EQ(plan_settlement(OutcomeKind::EarlyClient, c, e), expected);
    const std::vector<Transfer> host_quits{{EscrowSlot::PaymentPool, NodeId{1}, TokenAmount{700}},
                                           {EscrowSlot::ClientAuditorsSeq, NodeId{1}, TokenAmount{30}},
                                           {EscrowSlot::HostAuditorsSeq, NodeId{2}, TokenAmount{31}},
                                           {EscrowSlot::HostFileSeq, NodeId{1}, TokenAmount{90}}};
    EXPECT_EQ(plan_settlement(OutcomeKind::EarlyHost, c, e), host_quits);
    EXPECT_THROW(plan_settlement(OutcomeKind::DisputeHostDishonest, c, e), ProtocolError);
}

TEST(Contract, EarlyTerminations) {
    {
        World w;
        const auto file = file10k();
        const ContractId id = w.activate(bhtest::small_terms(4), file);
        const ChunkStore store(file, 1024);
        w.advance_to(w.market.contract(id).due_time(1));
        w.prove(id, 1, store);
        EXPECT_EQ(code_of([&] { w.submit(w.host2, Termination{id}); }), ErrorCode::NotAuthorized);
        w.submit(w.client, Termination{id});
        EXPECT_EQ(w.market.contract(id).outcome, OutcomeKind::EarlyClient);
        EXPECT_EQ(w.state().balance(w.host), TokenAmount{5000 + 1003});
        EXPECT_EQ(w.state().balance(w.client), TokenAmount{10'000 - 1003});
    }
    {
        World w;
        const auto file = file10k();
        const ContractId id = w.activate(bhtest::small_terms(4), file);
        const ChunkStore store(file, 1024);
        w.advance_to(w.market.contract(id).due_time(1));
        w.prove(id, 1, store);
        w.submit(w.host, Termination{id});
        EXPECT_EQ(w.market.contract(id).outcome, OutcomeKind::EarlyHost);
        EXPECT_EQ(w.state().balance(w.host), TokenAmount{5000 + 250 - 500});
        EXPECT_EQ(w.state().balance(w.client), TokenAmount{10'000 - 250 + 500});
        EXPECT_TRUE(w.state().conserved());
    }
}

TEST(Contract, ClientWithdrawalRefundsRequesters) {
    World w;
    const ContractId id = w.propose(bhtest::small_terms());
    w.submit(w.host, HostRequest{id});
    w.submit(w.host2, HostRequest{id});
    w.submit(w.client, Termination{id});
    const auto& c = w.market.contract(id);
    EXPECT_EQ(c.outcome, OutcomeKind::EarlyClient);
    EXPECT_EQ(w.state().balance(w.host), TokenAmount{5000});
    EXPECT_EQ(w.state().balance(w.host2), TokenAmount{5000});
    EXPECT_EQ(w.market.settlements().back().refunds.size(), 2u);
    EXPECT_TRUE(w.state().escrow(id).empty());
}

TEST(Contract, RequestAndAgreementPreconditions) {
    World w;
    const auto file = file10k();
    auto terms = bhtest::small_terms();
    const ContractId id = w.propose(terms);
    EXPECT_EQ(code_of([&] { w.submit(w.client, HostRequest{id}); }), ErrorCode::NotAuthorized);
    EXPECT_EQ(code_of([&] { w.submit(w.client, Agreement{id, w.host, gen_metadata(file, 1024)}); }),
              ErrorCode::InvalidState);
    w.submit(w.host, HostRequest{id});
    EXPECT_EQ(code_of([&] { w.submit(w.host, HostRequest{id}); }), ErrorCode::Duplicate);
    EXPECT_EQ(code_of([&] { w.submit(w.client, Agreement{id, w.host2, gen_metadata(file, 1024)}); }),
              ErrorCode::NotAuthorized);
    EXPECT_EQ(code_of([&] { w.submit(w.host, Agreement{id, w.host, gen_metadata(file, 1024)}); }),
              ErrorCode::NotAuthorized);
    EXPECT_EQ(code_of([&] { w.submit(w.client, Agreement{id, w.host, gen_metadata(bhtest::test_file(99), 1024)}); }),
              ErrorCode::InvalidArgument);
    w.market.set_capacity(w.host2, 9'999);
    EXPECT_EQ(code_of([&] { w.submit(w.host2, HostRequest{id}); }), ErrorCode::InsufficientCapacity);

    auto pricey = terms;
    pricey.total_price = TokenAmount{20'000};
    const ContractId expensive = w.propose(pricey);
    w.submit(w.host, HostRequest{expensive});
    EXPECT_EQ(code_of([&] { w.submit(w.client, Agreement{expensive, w.host, gen_metadata(file, 1024)}); }),
              ErrorCode::InsufficientFunds);
    auto heavy = terms;
    heavy.file_sequestration = TokenAmount{6'000};
    const ContractId too_heavy = w.propose(heavy);
    w.market.set_capacity(w.host2, 1'000'000);
    EXPECT_EQ(code_of([&] { w.submit(w.host2, HostRequest{too_heavy}); }), ErrorCode::InsufficientFunds);
    EXPECT_EQ(code_of([&] { w.submit(w.client, HostRequest{ContractId{77}}); }), ErrorCode::UnknownContract);
}

TEST(Contract, CapacityIsReleasedOnSettlement) {
    World w;
    w.market.set_capacity(w.host, 10'000);
    const auto file = file10k();
    const ContractId id = w.activate(bhtest::small_terms(), file);
    EXPECT_EQ(w.market.free_capacity(w.host), 0u);
    w.submit(w.client, Termination{id});
    EXPECT_EQ(w.market.free_capacity(w.host), 10'000u);
    EXPECT_FALSE(w.market.free_capacity(w.host2).has_value());
}

TEST(Contract, MissingAckOpensDisputeAutomatically) {
    World w(9);
    const auto file = file10k();
    const ContractId id = w.activate(bhtest::small_terms(2), file);
    const auto& c = w.market.contract(id);
    const ChunkStore store(file, 1024);
    w.prove_all(id, store);
    const Seconds deadline = w.market.final_ack_deadline(c, 900);
    w.advance_to(deadline);
    EXPECT_EQ(c.state, ContractState::AwaitingFinalAck);
    w.ledger.advance_clock(1);
    EXPECT_EQ(c.state, ContractState::Disputed);
    const Block& last = w.state().blocks().back();
    ASSERT_EQ(last.txs.size(), 1u);
    EXPECT_EQ(last.txs[0].sender, kSystemAccount);
    EXPECT_TRUE(std::holds_alternative<DisputeOpen>(last.txs[0].payload));
    EXPECT_EQ(w.market.reputation().client_score(w.client), 1u);
    // Nobody votes: the case times out as a tie and every deposit goes home.
    w.advance_to(w.ledger.clock() + c.terms.proof_period + 1);
    EXPECT_EQ(c.outcome, OutcomeKind::DisputeEscalated);
    EXPECT_TRUE(w.state().banned().empty());
    EXPECT_EQ(w.state().balance(w.client), TokenAmount{10'000 - 1003});
    EXPECT_EQ(w.state().balance(w.host), TokenAmount{5000 + 1003});
    EXPECT_TRUE(w.state().escrow(id).empty());
}

namespace {

enum class Stage { Proposed, Requested, Active, AwaitingFinalAck, Disputed, Settled };

struct Staged {
    std::unique_ptr<World> w;
    ContractId id;
    std::unique_ptr<ChunkStore> store;
};

Staged build(Stage stage) {
    Staged s{std::make_unique<World>(5), {}, nullptr};
    World& w = *s.w;
    const auto file = file10k();
    s.store = std::make_unique<ChunkStore>(file, 1024);
    s.id = w.propose(bhtest::small_terms(2));
    if (stage == Stage::Proposed) {
        return s;
    }
    w.submit(w.host, HostRequest{s.id});
    if (stage == Stage::Requested) {
        return s;
    }
    w.submit(w.client, Agreement{s.id, w.host, gen_metadata(file, 1024)});
    if (stage == Stage::Active) {
        return s;
    }
    w.prove_all(s.id, *s.store);
    if (stage == Stage::AwaitingFinalAck) {
        return s;
    }
    if (stage == Stage::Disputed) {
        w.submit(w.client, DisputeOpen{s.id});
        return s;
    }
    w.submit(w.client, CompletionAck{s.id});
    return s;
}

}  // namespace

// Every (state, operation, sender) triple: a rejection must leave no trace.
TEST(Contract, StateMachineEnumeration) {
    const std::vector<Stage> stages{Stage::Proposed,         Stage::Requested, Stage::Active,
                                    Stage::AwaitingFinalAck, Stage::Disputed,  Stage::Settled};
    int accepted = 0;
    int rejected = 0;
    for (Stage stage : stages) {
        for (int op = 0; op < 7; ++op) {
            for (int who = 0; who < 4; ++who) {
                Staged s = build(stage);
                World& w = *s.w;
                const NodeId sender = std::array{w.client, w.host, w.host2, w.auditors[0]}[who];
                const auto before = bhtest::snapshot(w);
                const auto& c = w.market.contract(s.id);
                Payload p;
                switch (op) {
                    case 0: p = HostRequest{s.id}; break;
                    case 1: p = Agreement{s.id, w.host, gen_metadata(file10k(), 1024)}; break;
                    case 2: {
                        const std::uint32_t e = std::min(c.next_epoch(), c.epochs());
                        const auto ch = c.metadata ? w.market.epoch_challenge(w.state(), s.id, e) : Challenge{{0}};
                        p = ProofSubmission{s.id, c.next_epoch(), gen_proof(*s.store, ch)};
                        break;
                    }
                    case 3: p = CompletionAck{s.id}; break;
                    case 4: p = Termination{s.id}; break;
                    case 5: p = DisputeOpen{s.id}; break;
                    default: p = AuditorVote{CaseId{1}, Vote::FileAvailable}; break;
                }
                try {
                    w.submit(sender, p);
                    ++accepted;
                    EXPECT_GT(w.state().blocks().size(), before.blocks);
                } catch (const ProtocolError&) {
                    ++rejected;
                    EXPECT_TRUE(bhtest::snapshot(w) == before)
                        << "stage " << static_cast<int>(stage) << " op " << op << " sender " << who;
                }
                EXPECT_TRUE(w.state().conserved());
            }
        }
    }
    EXPECT_GT(accepted, 0);
    EXPECT_GT(rejected, accepted);
}

TEST(Contract, SettledContractsAcceptNothing) {
    Staged s = build(Stage::Settled);
    World& w = *s.w;
    for (NodeId who : {w.client, w.host}) {
        EXPECT_THROW(w.submit(who, Termination{s.id}), ProtocolError);
        EXPECT_THROW(w.submit(who, DisputeOpen{s.id}), ProtocolError);
        EXPECT_THROW(w.submit(who, CompletionAck{s.id}), ProtocolError);
    }
}

TEST(Contract, EscrowDrainsOnEverySettlement) {
    std::mt19937_64 gen(3);
    for (int round = 0; round < 40; ++round) {
        Staged s = build(static_cast<Stage>(gen() % 5));
        World& w = *s.w;
        const TokenAmount before = w.state().escrow(s.id).total();
        const auto& c = w.market.contract(s.id);
        switch (c.state) {
            case ContractState::Proposed:
            case ContractState::Requested: w.submit(w.client, Termination{s.id}); break;
            case ContractState::Active: w.submit(gen() % 2 ? w.client : w.host, Termination{s.id}); break;
            case ContractState::AwaitingFinalAck: w.submit(w.client, CompletionAck{s.id}); break;
            default: {
                const CaseId cid = *c.audit_case;
                for (NodeId a : w.market.arbitration().get(cid).auditors) {
                    w.submit(a, AuditorVote{cid, gen() % 2 ? Vote::FileAvailable : Vote::FileUnavailable});
                }
            }
        }
        ASSERT_EQ(c.state, ContractState::Settled);
        EXPECT_EQ(w.market.settlements().back().total(), before);
        EXPECT_TRUE(w.state().escrow(s.id).empty());
        EXPECT_TRUE(w.state().conserved());
    }
}
