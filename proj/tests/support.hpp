#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <random>
#include <vector>

#include "blockhouse/ledger.hpp"
#include "blockhouse/market.hpp"
#include "blockhouse/por.hpp"

namespace bhtest {

using namespace blockhouse;

inline std::vector<std::uint8_t> test_file(std::size_t size, std::uint64_t seed = 1) {
    std::mt19937_64 gen(seed);
    std::vector<std::uint8_t> out(size);
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(gen());
    }
    return out;
}

inline ContractTerms small_terms(std::uint32_t epochs = 4) {
    ContractTerms t;
    t.data_size = 10'000;
    t.proof_period = 3600;
    t.duration = t.proof_period * epochs;
    t.total_price = TokenAmount{1003};
    t.file_sequestration = TokenAmount{500};
    t.auditors_sequestration = TokenAmount{205};
    return t;
}

// A started ledger with one client, two hosts and a pool of auditors.
struct World {
    Ledger ledger;
    Market market;
    NodeId client;
    NodeId host;
    NodeId host2;
    std::vector<NodeId> auditors;

    explicit World(std::size_t n_auditors = 9, MarketConfig mc = {}, LedgerConfig lc = {})
        : ledger(lc), market(mc) {
        ledger.attach(market);
        client = ledger.register_node(NodeKind::Client, TokenAmount{10'000});
        host = ledger.register_node(NodeKind::Host, TokenAmount{5'000});
        host2 = ledger.register_node(NodeKind::Host, TokenAmount{5'000});
        for (std::size_t i = 0; i < n_auditors; ++i) {
            auditors.push_back(ledger.register_node(NodeKind::Auditor, TokenAmount{100}));
        }
        ledger.start();
    }

    const LedgerState& state() const { return ledger.state(); }

    BlockRef submit(NodeId sender, Payload p) {
        return ledger.submit_transaction(Transaction{sender, state().node_time(sender), std::move(p)});
    }
    BlockRef submit_at(NodeId sender, Seconds ts, Payload p) {
        return ledger.submit_transaction(Transaction{sender, ts, std::move(p)});
    }

    ContractId propose(const ContractTerms& t) { return *submit(client, Proposal{t}).receipt.contract; }

    // Proposal, request and agreement; returns the contract and the host's store.
    ContractId activate(const ContractTerms& t, std::vector<std::uint8_t> const& file, std::uint32_t chunk = 1024) {
        const ContractId id = propose(t);
        submit(host, HostRequest{id});
        submit(client, Agreement{id, host, gen_metadata(file, chunk)});
        return id;
    }

    void advance_to(Seconds t, Seconds step = 60) {
        while (ledger.clock() < t) {
            ledger.advance_clock(std::min(step, t - ledger.clock()));
        }
    }

    BlockRef prove(ContractId id, std::uint32_t epoch, const ChunkStore& store) {
        const Challenge ch = market.epoch_challenge(state(), id, epoch);
        return submit(market.contract(id).host.value(), ProofSubmission{id, epoch, gen_proof(store, ch)});
    }

    // Runs every epoch with honest proofs submitted exactly at the due time.
    void prove_all(ContractId id, const ChunkStore& store) {
        const StorageContract& c = market.contract(id);
        for (std::uint32_t e = 1; e <= c.epochs(); ++e) {
            advance_to(c.due_time(e));
            prove(id, e, store);
        }
    }

    TokenAmount total_balance(NodeId id) const { return state().balance(id); }
};

// Everything a rejected transaction must leave untouched.
struct Snapshot {
    std::map<NodeId, TokenAmount> balances;
    std::map<ContractId, TokenAmount> escrow;
    std::map<ContractId, std::pair<ContractState, std::size_t>> contracts;
    std::set<NodeId> banned;
    std::size_t blocks = 0;
    std::size_t cases = 0;
    TokenAmount burned;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

inline Snapshot snapshot(const World& w) {
    Snapshot s;
    for (NodeId id : w.state().nodes()) {
        s.balances[id] = w.state().balance(id);
    }
    for (const auto& [id, c] : w.market.contracts()) {
        s.escrow[id] = w.state().escrow(id).total();
        s.contracts[id] = {c.state, c.epoch_log.size()};
    }
    s.banned = w.state().banned();
    s.blocks = w.state().blocks().size();
    s.cases = w.market.arbitration().cases().size();
    s.burned = w.state().burned();
    return s;
}

}  // namespace bhtest
