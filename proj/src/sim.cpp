#include "blockhouse/sim.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "blockhouse/error.hpp"
#include "blockhouse/codec.hpp"
#include "blockhouse/rng.hpp"
#include "overloaded.hpp"
#include "sim_json.hpp"

namespace blockhouse::sim {

using nlohmann::json;

std::string Trace::jsonl() const {
    std::string out;
    for (const auto& line : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::uint8_t> make_file(const FileSpec& f) {
    std::mt19937_64 gen(f.content_seed);
    std::vector<std::uint8_t> bytes(f.size);
    for (std::size_t i = 0; i < bytes.size(); i += 8) {
        std::uint64_t word = gen();
        for (std::size_t j = i; j < std::min(bytes.size(), i + 8); ++j) {
            bytes[j] = static_cast<std::uint8_t>(word);
            word >>= 8;
        }
    }
    return bytes;
}

struct ContractRun {
    bool started = false;
    bool rejected = false;
    std::optional<ContractId> id;
    std::unique_ptr<ChunkStore> store;  // held by the chosen host
    std::uint32_t attempted_epoch = 0;
    bool dropped = false;
    bool final_step_done = false;
    bool early_done = false;
};

class Simulation {
public:
    explicit Simulation(const Scenario& s) : s_(s), ledger_(s.ledger), market_(s.market), rng_(s.seed) {
        ledger_.attach(market_);
        for (const auto& n : s_.nodes) {
            const NodeId id = ledger_.register_node(n.kind, n.balance, n.skew);
            ids_[n.name] = id;
            names_[id] = n.name;
            specs_[id] = &n;
            if (n.capacity) {
                market_.set_capacity(id, *n.capacity);
            }
            trace_.initial_balances[n.name] = n.balance;
        }
        names_[kSystemAccount] = "system";
        names_[kBurnAccount] = "burn";
        runs_.resize(s_.contracts.size());
        ledger_.start();
    }

    Trace run() {
        trace_.lines.push_back(json{{"type", "scenario"}, {"scenario", scenario_to_json(s_)}}.dump());
        export_new();
        const Seconds end = s_.ledger.genesis_time + horizon();
        while (ledger_.clock() < end) {
            const std::size_t blocks_before = ledger_.state().blocks().size();
            {
                auto batch = ledger_.batch();
                act();
            }
            export_new();
            ledger_.advance_clock(s_.tick);
            export_new();
            ++trace_.steps;
            const auto& st = ledger_.state();
            if (!st.conserved()) {
                ++trace_.conservation_violations;
            }
            if (st.blocks().size() != blocks_before || !st.conserved()) {
                emit(json{{"type", "step"},
                          {"step", trace_.steps},
                          {"clock", st.clock()},
                          {"supply", st.total_supply().value()},
                          {"accounted", st.accounted_tokens().value()}});
            }
            if (all_done()) {
                break;
            }
        }
        finish();
        return std::move(trace_);
    }

private:
    Seconds horizon() const {
        if (s_.horizon > 0) {
            return s_.horizon;
        }
        Seconds h = 10 * s_.tick;
        const Seconds skew = s_.ledger.max_skew;
        for (const auto& c : s_.contracts) {
            const Seconds period = std::max<Seconds>(c.terms.proof_period, 1);
            const Seconds vote = s_.market.vote_timeout.value_or(period);
            h = std::max(h, c.start - s_.ledger.genesis_time + c.terms.duration + 3 * period + 3 * skew + vote +
                                10 * s_.tick);
        }
        return h;
    }

    bool all_done() const {
        for (const auto& r : runs_) {
            if (r.rejected) {
                continue;
            }
            if (!r.started || !r.id || market_.contract(*r.id).state != ContractState::Settled) {
                return false;
            }
        }
        return true;
    }

    Seconds local(NodeId id) const { return ledger_.state().node_time(id); }
    const Strategy& strategy(NodeId id) const { return specs_.at(id)->strategy; }

    std::optional<BlockRef> submit(NodeId sender, Payload payload) {
        Transaction tx{sender, local(sender), std::move(payload)};
        const auto kind = std::string(payload_kind(tx.payload));
        try {
            return ledger_.submit_transaction(std::move(tx));
        } catch (const ProtocolError& e) {
            emit(json{{"type", "rejected"},
                      {"clock", ledger_.clock()},
                      {"sender", names_.at(sender)},
                      {"kind", kind},
                      {"code", std::string(to_string(e.code()))},
                      {"reason", e.what()}});
            return std::nullopt;
        }
    }

    void act() {
        for (std::size_t i = 0; i < runs_.size(); ++i) {
            ContractRun& run = runs_[i];
            const ContractSpec& spec = s_.contracts[i];
            if (!run.started) {
                if (local(ids_.at(spec.client)) >= spec.start) {
                    start_contract(i);
                }
                continue;
            }
            if (run.id) {
                drive_contract(run, *run.id);
            }
        }
        vote();
    }

    void start_contract(std::size_t i) {
        ContractRun& run = runs_[i];
        const ContractSpec& spec = s_.contracts[i];
        run.started = true;
        const NodeId client = ids_.at(spec.client);
        auto proposal = submit(client, Proposal{spec.terms});
        if (!proposal) {
            run.rejected = true;
            return;
        }
        const ContractId id = *proposal->receipt.contract;
        run.id = id;
        for (const auto& host_name : spec.hosts) {
            const NodeId host = ids_.at(host_name);
            if (!ledger_.state().is_banned(host)) {
                submit(host, HostRequest{id});
            }
        }
        std::vector<NodeId> candidates;
        for (NodeId h : market_.contract(id).requesters) {
            if (market_.reputation().host_score(h) >= spec.min_host_score) {
                candidates.push_back(h);
            }
        }
        if (!candidates.empty()) {
            const NodeId host = best_host(candidates, market_.reputation());
            const auto file = make_file(spec.file);
            const FileMetadata meta = gen_metadata(file, spec.file.chunk_size);
            if (submit(client, Agreement{id, host, meta})) {
                run.store = std::make_unique<ChunkStore>(file, spec.file.chunk_size);
                emit(json{{"type", "upload"},
                          {"clock", ledger_.clock()},
                          {"contract", id.value},
                          {"host", names_.at(host)},
                          {"chunks", meta.chunk_count},
                          {"root", to_hex(meta.merkle_root)}});
                return;
            }
        }
        submit(client, Termination{id});
    }

    bool vanished(NodeId host) const {
        const auto* v = std::get_if<VanishingHost>(&strategy(host));
        return v != nullptr && local(host) >= v->at;
    }

    bool serves_file(const ContractRun& run, NodeId host) const {
        return run.store != nullptr && !vanished(host) && !std::holds_alternative<WithholdingHost>(strategy(host)) &&
               !ledger_.state().is_banned(host);
    }

    void drop_chunks(ContractRun& run, ContractId id, double fraction) {
        run.dropped = true;
        const std::uint64_t n = run.store->chunk_count();
        const auto count = static_cast<std::uint64_t>(std::ceil(fraction * static_cast<double>(n)));
        std::vector<std::uint64_t> order(n);
        for (std::uint64_t k = 0; k < n; ++k) {
            order[k] = k;
        }
        for (std::uint64_t k = 0; k < count && k < n; ++k) {
            std::swap(order[k], order[k + uniform_below(rng_, n - k)]);
            run.store->drop(order[k]);
        }
        emit(json{{"type", "drop"}, {"clock", ledger_.clock()}, {"contract", id.value}, {"chunks", std::min(count, n)}});
    }

    void drive_contract(ContractRun& run, ContractId id) {
        const StorageContract& c = market_.contract(id);
        if (c.state == ContractState::Settled || !c.host) {
            run.store.reset();
            return;
        }
        const NodeId host = *c.host;
        const NodeId client = c.client;
        const Strategy& hs = strategy(host);
        if (const auto* d = std::get_if<DroppingHost>(&hs); d && !run.dropped && local(host) >= d->at && run.store) {
            drop_chunks(run, id, d->fraction);
        }
        if (c.state == ContractState::Active && !run.early_done) {
            const auto* eh = std::get_if<EarlyTerminatingHost>(&hs);
            const auto* ec = std::get_if<EarlyTerminatingClient>(&strategy(client));
            if (eh && local(host) >= eh->at) {
                run.early_done = true;
                submit(host, Termination{id});
            } else if (ec && local(client) >= ec->at) {
                run.early_done = true;
                submit(client, Termination{id});
            }
            if (market_.contract(id).state == ContractState::Settled) {
                run.store.reset();
                return;
            }
        }
        if (c.state == ContractState::Active) {
            const std::uint32_t e = c.next_epoch();
            const Seconds due = c.due_time(e);
            const Seconds now = local(host);
            if (run.attempted_epoch < e && now >= due && now <= due + s_.ledger.max_skew && !vanished(host) &&
                !ledger_.state().is_banned(host) && run.store) {
                run.attempted_epoch = e;
                const Challenge ch = market_.epoch_challenge(ledger_.state(), id, e);
                submit(host, ProofSubmission{id, e, gen_proof(*run.store, ch)});
            }
        }
        if (c.state == ContractState::AwaitingFinalAck && !run.final_step_done) {
            run.final_step_done = true;
            bool intact = false;
            if (serves_file(run, host)) {
                if (auto bytes = run.store->reassemble()) {
                    intact = sha256(*bytes) == c.metadata->file_id;
                }
            }
            emit(json{{"type", "download"}, {"clock", ledger_.clock()}, {"contract", id.value}, {"intact", intact}});
            const Strategy& cs = strategy(client);
            if (std::holds_alternative<SilentClient>(cs)) {
                return;
            }
            if (std::holds_alternative<LyingClient>(cs) || !intact) {
                submit(client, DisputeOpen{id});
            } else {
                submit(client, CompletionAck{id});
            }
        }
    }

    // What an auditor concludes from challenging the host directly.
    bool audit_check(const AuditCase& ac, NodeId auditor) const {
        const StorageContract& c = market_.contract(ac.contract);
        const ContractRun* run = nullptr;
        for (const auto& r : runs_) {
            if (r.id && *r.id == ac.contract) {
                run = &r;
            }
        }
        if (run == nullptr || !c.host || !serves_file(*run, *c.host)) {
            return false;
        }
        ByteWriter w;
        w.text("blockhouse.audit");
        w.u64(ac.id.value);
        w.u32(auditor.value);
        w.digest(c.metadata->merkle_root);
        const Seed seed{sha256(w.data())};
        const Challenge ch = derive_challenge(seed, c.metadata->chunk_count, c.terms.challenge_size);
        return verify_proof(*c.metadata, ch, gen_proof(*run->store, ch));
    }

    void vote() {
        std::vector<std::pair<CaseId, NodeId>> pending;
        for (const auto& [cid, ac] : market_.arbitration().cases()) {
            if (ac.resolved()) {
                continue;
            }
            for (NodeId a : ac.auditors) {
                if (!ac.votes.contains(a) && !ledger_.state().is_banned(a)) {
                    pending.emplace_back(cid, a);
                }
            }
        }
        for (const auto& [cid, auditor] : pending) {
            const AuditCase& ac = market_.arbitration().get(cid);
            if (ac.resolved()) {
                continue;
            }
            bool available = audit_check(ac, auditor);
            if (unit_interval(rng_) >= specs_.at(auditor)->honesty) {
                available = !available;
            }
            submit(auditor, AuditorVote{cid, available ? Vote::FileAvailable : Vote::FileUnavailable});
        }
    }

    void emit(const json& record) { trace_.lines.push_back(record.dump()); }

    json receipt_json(const Receipt& r) const {
        json j{{"escrowed", r.escrowed.value()}, {"released", r.released.value()}, {"settled", r.settled}};
        if (r.contract) {
            j["contract"] = r.contract->value;
        }
        if (r.audit_case) {
            j["case"] = r.audit_case->value;
        }
        if (r.verdict) {
            j["verdict"] = std::string(to_string(*r.verdict));
        }
        if (r.seed_block) {
            j["seed_block"] = *r.seed_block;
        }
        return j;
    }

    json payload_json(const Payload& p) const {
        return std::visit(
            detail::Overloaded{
                [&](const Registration& r) {
                    return json{{"node", names_.at(r.node)}, {"balance", r.balance.value()}};
                },
                [](const Proposal& p) {
                    return json{{"data_size", p.terms.data_size},
                                {"duration", p.terms.duration},
                                {"proof_period", p.terms.proof_period},
                                {"total_price", p.terms.total_price.value()}};
                },
                [](const HostRequest& r) { return json{{"contract", r.contract.value}}; },
                [&](const Agreement& a) {
                    return json{{"contract", a.contract.value},
                                {"host", names_.at(a.host)},
                                {"root", to_hex(a.metadata.merkle_root)}};
                },
                [](const ProofSubmission& s) {
                    return json{{"contract", s.contract.value},
                                {"epoch", s.epoch},
                                {"proof_hash", to_hex(proof_hash(s.proof))}};
                },
                [](const CompletionAck& a) { return json{{"contract", a.contract.value}}; },
                [](const Termination& t) { return json{{"contract", t.contract.value}}; },
                [](const DisputeOpen& d) { return json{{"contract", d.contract.value}}; },
                [](const AuditorVote& v) {
                    return json{{"case", v.audit_case.value}, {"vote", std::string(to_string(v.vote))}};
                },
            },
            p);
    }

    void export_new() {
        const auto blocks = ledger_.state().blocks();
        for (; exported_blocks_ < blocks.size(); ++exported_blocks_) {
            const Block& b = blocks[exported_blocks_];
            emit(json{{"type", "block"},
                      {"index", b.index},
                      {"timestamp", b.timestamp},
                      {"hash", to_hex(b.hash)},
                      {"parent", to_hex(b.parent_hash)},
                      {"txs", b.txs.size()}});
            for (std::size_t i = 0; i < b.txs.size(); ++i) {
                const Transaction& tx = b.txs[i];
                emit(json{{"type", "tx"},
                          {"block", b.index},
                          {"sender", names_.at(tx.sender)},
                          {"timestamp", tx.timestamp},
                          {"kind", std::string(payload_kind(tx.payload))},
                          {"payload", payload_json(tx.payload)},
                          {"receipt", receipt_json(b.receipts[i])}});
            }
        }
        const auto& settlements = market_.settlements();
        for (; exported_settlements_ < settlements.size(); ++exported_settlements_) {
            const SettlementOutcome& o = settlements[exported_settlements_];
            json transfers = json::array();
            std::map<std::string, std::uint64_t> credited;
            for (const auto& t : o.transfers) {
                transfers.push_back(json{{"from", std::string(to_string(t.from))},
                                         {"to", names_.at(t.to)},
                                         {"amount", t.amount.value()}});
                credited[names_.at(t.to)] += t.amount.value();
            }
            json refunds = json::array();
            for (const auto& [node, amount] : o.refunds) {
                refunds.push_back(json{{"to", names_.at(node)}, {"amount", amount.value()}});
                credited[names_.at(node)] += amount.value();
            }
            emit(json{{"type", "settlement"},
                      {"contract", o.contract.value},
                      {"kind", std::string(to_string(o.kind))},
                      {"time", o.time},
                      {"transfers", transfers},
                      {"refunds", refunds},
                      {"credited", credited}});
            trace_.settlements.push_back(o);
        }
        const auto& cases = market_.arbitration().cases();
        for (auto it = cases.upper_bound(last_case_); it != cases.end(); ++it) {
            if (!it->second.resolved()) {
                break;
            }
            const AuditCase& ac = it->second;
            const Tally t = tally(ac);
            json rewards = json::object();
            for (const auto& [node, amount] : ac.rewards) {
                rewards[names_.at(node)] = amount.value();
            }
            json votes = json::object();
            for (const auto& [node, v] : ac.votes) {
                votes[names_.at(node)] = std::string(to_string(v));
            }
            emit(json{{"type", "audit_case"},
                      {"votes", votes},
                      {"case", ac.id.value},
                      {"contract", ac.contract.value},
                      {"auditors", ac.auditors.size()},
                      {"available", t.available},
                      {"unavailable", t.unavailable},
                      {"verdict", std::string(to_string(*ac.verdict))},
                      {"rewards", rewards},
                      {"burned_remainder", ac.reward_remainder.value()}});
            last_case_ = ac.id;
        }
    }

    void finish() {
        const LedgerState& st = ledger_.state();
        for (std::size_t i = 0; i < runs_.size(); ++i) {
            ContractResult res;
            res.id = runs_[i].id;
            if (res.id) {
                const StorageContract& c = market_.contract(*res.id);
                res.outcome = c.outcome;
                if (c.host) {
                    res.host = names_.at(*c.host);
                }
            }
            trace_.contracts.push_back(res);
        }
        trace_.all_settled = all_done();
        trace_.burned = st.burned();
        json balances = json::object();
        json reputation = json::object();
        for (const auto& n : s_.nodes) {
            const NodeId id = ids_.at(n.name);
            trace_.final_balances[n.name] = st.balance(id);
            balances[n.name] = st.balance(id).value();
            if (st.is_banned(id)) {
                trace_.banned.push_back(n.name);
            }
            const ReputationRecord rec = market_.reputation().record(id);
            trace_.reputation[n.name] = rec;
            if (rec != ReputationRecord{}) {
                reputation[n.name] = json{{"proofs_submitted", rec.host_proofs_submitted},
                                          {"proofs_succeeded", rec.host_proofs_succeeded},
                                          {"litigations", rec.client_litigations}};
            }
        }
        emit(json{{"type", "reputation"}, {"nodes", reputation}});

        for (const auto& a : s_.assertions) {
            std::visit(detail::Overloaded{
                           [&](const OutcomeAssertion& o) {
                               const auto& got = trace_.contracts.at(o.contract).outcome;
                               if (!got || *got != o.kind) {
                                   trace_.assertion_failures.push_back(
                                       "contract " + std::to_string(o.contract) + ": expected " +
                                       std::string(to_string(o.kind)) + ", got " +
                                       (got ? std::string(to_string(*got)) : std::string("none")));
                               }
                           },
                           [&](const BalanceAssertion& b) {
                               auto it = trace_.final_balances.find(b.node);
                               if (it == trace_.final_balances.end()) {
                                   trace_.assertion_failures.push_back("unknown node " + b.node);
                                   return;
                               }
                               const auto delta = static_cast<std::int64_t>(it->second.value()) -
                                                  static_cast<std::int64_t>(trace_.initial_balances.at(b.node).value());
                               if (delta != b.delta) {
                                   trace_.assertion_failures.push_back("balance of " + b.node + ": expected delta " +
                                                                       std::to_string(b.delta) + ", got " +
                                                                       std::to_string(delta));
                               }
                           },
                           [&](const BannedAssertion& b) {
                               auto it = ids_.find(b.node);
                               if (it == ids_.end() || st.is_banned(it->second) != b.banned) {
                                   trace_.assertion_failures.push_back("ban status of " + b.node + " is not " +
                                                                       (b.banned ? "banned" : "clear"));
                               }
                           },
                       },
                       a);
        }

        for (const auto& [id, escrow] : st.escrows()) {
            trace_.escrow_outstanding += escrow.total();
        }
        emit(json{{"type", "summary"},
                  {"steps", trace_.steps},
                  {"clock", st.clock()},
                  {"all_settled", trace_.all_settled},
                  {"conservation_violations", trace_.conservation_violations},
                  {"supply", st.total_supply().value()},
                  {"burned", st.burned().value()},
                  {"escrow_outstanding", trace_.escrow_outstanding.value()},
                  {"balances", balances},
                  {"banned", trace_.banned},
                  {"assertion_failures", trace_.assertion_failures}});
    }

    const Scenario& s_;
    Ledger ledger_;
    Market market_;
    std::mt19937_64 rng_;
    std::map<std::string, NodeId> ids_;
    std::map<NodeId, std::string> names_;
    std::map<NodeId, const NodeSpec*> specs_;
    std::vector<ContractRun> runs_;
    Trace trace_;
    std::size_t exported_blocks_ = 0;
    std::size_t exported_settlements_ = 0;
    CaseId last_case_{0};
};

}  // namespace

Trace run(const Scenario& scenario) { return Simulation(scenario).run(); }

bool replay(const std::vector<std::string>& lines) {
    if (lines.empty()) {
        return false;
    }
    json first;
    try {
        first = json::parse(lines.front());
    } catch (const json::exception&) {
        return false;
    }
    if (!first.is_object() || first.value("type", "") != "scenario" || !first.contains("scenario")) {
        return false;
    }
    const Trace again = run(scenario_from_json(first.at("scenario")));
    return again.lines == lines;
}

bool replay(const Trace& trace) { return replay(trace.lines); }

Scenario generate_scenario(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return lo + uniform_below(gen, hi - lo + 1); };
    auto chance = [&](double p) { return unit_interval(gen) < p; };

    Scenario s;
    s.seed = seed;
    s.tick = 60;
    s.market.auditors_per_case = static_cast<std::uint32_t>(2 * pick(1, 6) + 1);
    const Seconds max_skew = s.ledger.max_skew;
    auto skew = [&] { return static_cast<Seconds>(pick(0, 2 * 300)) - 300; };

    const auto clients = pick(1, 3);
    const auto hosts = pick(1, 4);
    const auto auditors = pick(3, 20);
    for (std::uint64_t i = 0; i < clients; ++i) {
        NodeSpec n;
        n.name = "client_" + std::to_string(i);
        n.kind = NodeKind::Client;
        n.balance = TokenAmount{pick(0, 1) ? pick(5'000, 50'000) : pick(0, 3'000)};
        n.skew = skew();
        switch (pick(0, 4)) {
            case 0: n.strategy = LyingClient{}; break;
            case 1: n.strategy = EarlyTerminatingClient{static_cast<Seconds>(pick(0, 20'000))}; break;
            case 2: n.strategy = SilentClient{}; break;
            default: n.strategy = HonestClient{};
        }
        s.nodes.push_back(n);
    }
    for (std::uint64_t i = 0; i < hosts; ++i) {
        NodeSpec n;
        n.name = "host_" + std::to_string(i);
        n.kind = NodeKind::Host;
        n.balance = TokenAmount{pick(0, 20'000)};
        n.skew = skew();
        if (chance(0.3)) {
            n.capacity = pick(0, 200'000);
        }
        switch (pick(0, 6)) {
            case 0: n.strategy = DroppingHost{unit_interval(gen), static_cast<Seconds>(pick(0, 20'000))}; break;
            case 1: n.strategy = VanishingHost{static_cast<Seconds>(pick(0, 20'000))}; break;
            case 2: n.strategy = WithholdingHost{}; break;
            case 3: n.strategy = EarlyTerminatingHost{static_cast<Seconds>(pick(0, 20'000))}; break;
            default: n.strategy = HonestHost{};
        }
        s.nodes.push_back(n);
    }
    for (std::uint64_t i = 0; i < auditors; ++i) {
        NodeSpec n;
        n.name = "auditor_" + std::to_string(i);
        n.kind = NodeKind::Auditor;
        n.balance = TokenAmount{pick(0, 100)};
        n.skew = skew();
        n.honesty = 0.5 + 0.5 * unit_interval(gen);
        n.strategy = Idle{};
        s.nodes.push_back(n);
    }

    const auto contracts = pick(1, 4);
    for (std::uint64_t i = 0; i < contracts; ++i) {
        ContractSpec c;
        c.client = "client_" + std::to_string(pick(0, clients - 1));
        for (std::uint64_t h = 0; h < hosts; ++h) {
            if (chance(0.6)) {
                c.hosts.push_back("host_" + std::to_string(h));
            }
        }
        c.start = static_cast<Seconds>(pick(0, 6'000));
        c.file.size = pick(1, 40'000);
        c.file.content_seed = gen();
        c.file.chunk_size = static_cast<std::uint32_t>(std::uint64_t{1} << pick(8, 12));
        c.terms.data_size = c.file.size;
        c.terms.proof_period = static_cast<Seconds>(pick(2 * max_skew / 60 + 2, 120) * 60);
        c.terms.duration = c.terms.proof_period * static_cast<Seconds>(pick(1, 6));
        c.terms.total_price = TokenAmount{pick(0, 10'000)};
        c.terms.file_sequestration = TokenAmount{pick(0, 5'000)};
        c.terms.auditors_sequestration = TokenAmount{pick(0, 3'000)};
        c.terms.missed_or_bad_proof_limit = static_cast<std::uint32_t>(pick(1, 3));
        c.terms.challenge_size = static_cast<std::uint32_t>(pick(1, 24));
        c.min_host_score = chance(0.2) ? 0.5 : 0.0;
        s.contracts.push_back(c);
    }
    return s;
}

}  // namespace blockhouse::sim
