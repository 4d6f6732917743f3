#include <fstream>
#include <set>
#include <sstream>

#include "blockhouse/error.hpp"
#include "blockhouse/sim.hpp"
#include "overloaded.hpp"
#include "sim_json.hpp"

namespace blockhouse::sim {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw ProtocolError(ErrorCode::Malformed, "scenario: " + what); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        malformed(where + " must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            malformed("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return fallback;
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        malformed(std::string("bad value for '") + key + "'");
    }
}

template <typename T>
T get_req(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        malformed("missing '" + std::string(key) + "' in " + where);
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        malformed(std::string("bad value for '") + key + "' in " + where);
    }
}

json strategy_to_json(const Strategy& s) {
    return std::visit(
        detail::Overloaded{
            [](const Idle&) { return json{{"type", "Idle"}}; },
            [](const HonestHost&) { return json{{"type", "HonestHost"}}; },
            [](const DroppingHost& d) { return json{{"type", "DroppingHost"}, {"fraction", d.fraction}, {"at", d.at}}; },
            [](const VanishingHost& v) { return json{{"type", "VanishingHost"}, {"at", v.at}}; },
            [](const WithholdingHost&) { return json{{"type", "WithholdingHost"}}; },
            [](const EarlyTerminatingHost& e) { return json{{"type", "EarlyTerminatingHost"}, {"at", e.at}}; },
            [](const HonestClient&) { return json{{"type", "HonestClient"}}; },
            [](const LyingClient&) { return json{{"type", "LyingClient"}}; },
            [](const EarlyTerminatingClient& e) { return json{{"type", "EarlyTerminatingClient"}, {"at", e.at}}; },
            [](const SilentClient&) { return json{{"type", "SilentClient"}}; },
        },
        s);
}

Strategy default_strategy(NodeKind kind) {
    switch (kind) {
        case NodeKind::Host: return HonestHost{};
        case NodeKind::Client: return HonestClient{};
        default: return Idle{};
    }
}

Strategy strategy_from_json(const json& j) {
    const std::string where = "strategy";
    const auto type = get_req<std::string>(j, "type", where);
    if (type == "Idle") {
        check_keys(j, {"type"}, where);
        return Idle{};
    }
    if (type == "HonestHost") {
        check_keys(j, {"type"}, where);
        return HonestHost{};
    }
    if (type == "DroppingHost") {
        check_keys(j, {"type", "fraction", "at"}, where);
        DroppingHost d{get_req<double>(j, "fraction", where), get_req<Seconds>(j, "at", where)};
        if (!(d.fraction >= 0.0 && d.fraction <= 1.0)) {
            malformed("DroppingHost fraction must lie in [0, 1]");
        }
        return d;
    }
    if (type == "VanishingHost") {
        check_keys(j, {"type", "at"}, where);
        return VanishingHost{get_req<Seconds>(j, "at", where)};
    }
    if (type == "WithholdingHost") {
        check_keys(j, {"type"}, where);
        return WithholdingHost{};
    }
    if (type == "EarlyTerminatingHost") {
        check_keys(j, {"type", "at"}, where);
        return EarlyTerminatingHost{get_req<Seconds>(j, "at", where)};
    }
    if (type == "HonestClient") {
        check_keys(j, {"type"}, where);
        return HonestClient{};
    }
    if (type == "LyingClient") {
        check_keys(j, {"type"}, where);
        return LyingClient{};
    }
    if (type == "EarlyTerminatingClient") {
        check_keys(j, {"type", "at"}, where);
        return EarlyTerminatingClient{get_req<Seconds>(j, "at", where)};
    }
    if (type == "SilentClient") {
        check_keys(j, {"type"}, where);
        return SilentClient{};
    }
    malformed("unknown strategy type '" + type + "'");
}

OutcomeKind outcome_from_string(const std::string& s) {
    for (auto k : {OutcomeKind::NormalEnd, OutcomeKind::EarlyClient, OutcomeKind::EarlyHost, OutcomeKind::ProofFailure,
                   OutcomeKind::DisputeClientDishonest, OutcomeKind::DisputeHostDishonest,
                   OutcomeKind::DisputeEscalated}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    malformed("unknown outcome kind '" + s + "'");
}

json terms_to_json(const ContractTerms& t) {
    return json{{"data_size", t.data_size},
                {"duration", t.duration},
                {"proof_period", t.proof_period},
                {"total_price", t.total_price.value()},
                {"file_sequestration", t.file_sequestration.value()},
                {"auditors_sequestration", t.auditors_sequestration.value()},
                {"missed_or_bad_proof_limit", t.missed_or_bad_proof_limit},
                {"challenge_size", t.challenge_size}};
}

ContractTerms terms_from_json(const json& j, std::uint64_t default_size) {
    const std::string where = "terms";
    check_keys(j,
               {"data_size", "duration", "proof_period", "total_price", "file_sequestration", "auditors_sequestration",
                "missed_or_bad_proof_limit", "challenge_size"},
               where);
    ContractTerms t;
    t.data_size = get_or<std::uint64_t>(j, "data_size", default_size);
    t.duration = get_req<Seconds>(j, "duration", where);
    t.proof_period = get_req<Seconds>(j, "proof_period", where);
    t.total_price = TokenAmount{get_req<std::uint64_t>(j, "total_price", where)};
    t.file_sequestration = TokenAmount{get_or<std::uint64_t>(j, "file_sequestration", 0)};
    t.auditors_sequestration = TokenAmount{get_or<std::uint64_t>(j, "auditors_sequestration", 0)};
    t.missed_or_bad_proof_limit = get_or<std::uint32_t>(j, "missed_or_bad_proof_limit", 3);
    t.challenge_size = get_or<std::uint32_t>(j, "challenge_size", kDefaultChallengeSize);
    return t;
}

}  // namespace

json scenario_to_json(const Scenario& s) {
    json nodes = json::array();
    for (const auto& n : s.nodes) {
        nodes.push_back(json{{"name", n.name},
                             {"kind", std::string(to_string(n.kind))},
                             {"balance", n.balance.value()},
                             {"skew", n.skew},
                             {"capacity", n.capacity ? json(*n.capacity) : json(nullptr)},
                             {"honesty", n.honesty},
                             {"strategy", strategy_to_json(n.strategy)}});
    }
    json contracts = json::array();
    for (const auto& c : s.contracts) {
        contracts.push_back(json{{"client", c.client},
                                 {"hosts", c.hosts},
                                 {"start", c.start},
                                 {"min_host_score", c.min_host_score},
                                 {"file",
                                  {{"size", c.file.size},
                                   {"content_seed", c.file.content_seed},
                                   {"chunk_size", c.file.chunk_size}}},
                                 {"terms", terms_to_json(c.terms)}});
    }
    json assertions = json::array();
    for (const auto& a : s.assertions) {
        assertions.push_back(std::visit(
            detail::Overloaded{
                [](const OutcomeAssertion& o) {
                    return json{{"type", "outcome"}, {"contract", o.contract}, {"kind", std::string(to_string(o.kind))}};
                },
                [](const BalanceAssertion& b) {
                    return json{{"type", "balance_delta"}, {"node", b.node}, {"delta", b.delta}};
                },
                [](const BannedAssertion& b) {
                    return json{{"type", "banned"}, {"node", b.node}, {"banned", b.banned}};
                },
            },
            a));
    }
    return json{{"seed", s.seed},
                {"tick", s.tick},
                {"horizon", s.horizon},
                {"ledger", {{"max_skew", s.ledger.max_skew}, {"genesis_time", s.ledger.genesis_time}}},
                {"market",
                 {{"auditors_per_case", s.market.auditors_per_case},
                  {"vote_timeout", s.market.vote_timeout ? json(*s.market.vote_timeout) : json(nullptr)}}},
                {"nodes", nodes},
                {"contracts", contracts},
                {"assertions", assertions}};
}

Scenario scenario_from_json(const json& j) {
    check_keys(j, {"seed", "tick", "horizon", "ledger", "market", "nodes", "contracts", "assertions"}, "scenario");
    Scenario s;
    s.seed = get_or<std::uint64_t>(j, "seed", 0);
    s.tick = get_or<Seconds>(j, "tick", 60);
    s.horizon = get_or<Seconds>(j, "horizon", 0);
    if (s.tick <= 0 || s.horizon < 0) {
        malformed("tick must be positive and horizon non-negative");
    }
    if (auto it = j.find("ledger"); it != j.end()) {
        check_keys(*it, {"max_skew", "genesis_time"}, "ledger");
        s.ledger.max_skew = get_or<Seconds>(*it, "max_skew", kDefaultMaxSkew);
        s.ledger.genesis_time = get_or<Seconds>(*it, "genesis_time", 0);
    }
    if (auto it = j.find("market"); it != j.end()) {
        check_keys(*it, {"auditors_per_case", "vote_timeout"}, "market");
        s.market.auditors_per_case = get_or<std::uint32_t>(*it, "auditors_per_case", 41);
        if (auto vt = it->find("vote_timeout"); vt != it->end() && !vt->is_null()) {
            s.market.vote_timeout = get_req<Seconds>(*it, "vote_timeout", "market");
        }
    }

    std::set<std::string> names;
    for (const auto& jn : get_or<json>(j, "nodes", json::array())) {
        check_keys(jn, {"name", "kind", "balance", "skew", "capacity", "honesty", "strategy", "count"}, "node");
        NodeSpec n;
        n.kind = node_kind_from_string(get_req<std::string>(jn, "kind", "node"));
        n.balance = TokenAmount{get_or<std::uint64_t>(jn, "balance", 0)};
        n.skew = get_or<Seconds>(jn, "skew", 0);
        if (auto cap = jn.find("capacity"); cap != jn.end() && !cap->is_null()) {
            n.capacity = get_req<std::uint64_t>(jn, "capacity", "node");
        }
        n.honesty = get_or<double>(jn, "honesty", 1.0);
        if (!(n.honesty >= 0.0 && n.honesty <= 1.0)) {
            malformed("honesty must lie in [0, 1]");
        }
        n.strategy = jn.contains("strategy") ? strategy_from_json(jn.at("strategy")) : default_strategy(n.kind);
        const auto base = get_req<std::string>(jn, "name", "node");
        const auto count = get_or<std::uint32_t>(jn, "count", 0);
        std::vector<std::string> expanded;
        if (count == 0) {
            expanded.push_back(base);
        } else {
            for (std::uint32_t i = 0; i < count; ++i) {
                expanded.push_back(base + "_" + std::to_string(i));
            }
        }
        for (auto& name : expanded) {
            if (name.empty() || name == "system" || name == "burn" || !names.insert(name).second) {
                malformed("duplicate or reserved node name '" + name + "'");
            }
            NodeSpec copy = n;
            copy.name = std::move(name);
            s.nodes.push_back(std::move(copy));
        }
    }

    for (const auto& jc : get_or<json>(j, "contracts", json::array())) {
        check_keys(jc, {"client", "hosts", "start", "min_host_score", "file", "terms"}, "contract");
        ContractSpec c;
        c.client = get_req<std::string>(jc, "client", "contract");
        c.hosts = get_req<std::vector<std::string>>(jc, "hosts", "contract");
        c.start = get_or<Seconds>(jc, "start", 0);
        c.min_host_score = get_or<double>(jc, "min_host_score", 0.0);
        const json& jf_ref = get_req<json>(jc, "file", "contract");
        check_keys(jf_ref, {"size", "content_seed", "chunk_size"}, "file");
        c.file.size = get_req<std::uint64_t>(jf_ref, "size", "file");
        c.file.content_seed = get_or<std::uint64_t>(jf_ref, "content_seed", 0);
        c.file.chunk_size = get_or<std::uint32_t>(jf_ref, "chunk_size", kDefaultChunkSize);
        if (c.file.size == 0 || c.file.chunk_size == 0) {
            malformed("file size and chunk size must be positive");
        }
        c.terms = terms_from_json(get_req<json>(jc, "terms", "contract"), c.file.size);
        if (!names.contains(c.client)) {
            malformed("contract client '" + c.client + "' is not a node");
        }
        for (const auto& h : c.hosts) {
            if (!names.contains(h)) {
                malformed("contract host '" + h + "' is not a node");
            }
        }
        s.contracts.push_back(std::move(c));
    }

    for (const auto& ja : get_or<json>(j, "assertions", json::array())) {
        const auto type = get_req<std::string>(ja, "type", "assertion");
        if (type == "outcome") {
            check_keys(ja, {"type", "contract", "kind"}, "assertion");
            OutcomeAssertion o{get_req<std::size_t>(ja, "contract", "assertion"),
                               outcome_from_string(get_req<std::string>(ja, "kind", "assertion"))};
            if (o.contract >= s.contracts.size()) {
                malformed("outcome assertion refers to a missing contract");
            }
            s.assertions.emplace_back(o);
        } else if (type == "balance_delta") {
            check_keys(ja, {"type", "node", "delta"}, "assertion");
            s.assertions.emplace_back(BalanceAssertion{get_req<std::string>(ja, "node", "assertion"),
                                                       get_req<std::int64_t>(ja, "delta", "assertion")});
        } else if (type == "banned") {
            check_keys(ja, {"type", "node", "banned"}, "assertion");
            s.assertions.emplace_back(
                BannedAssertion{get_req<std::string>(ja, "node", "assertion"), get_or<bool>(ja, "banned", true)});
        } else {
            malformed("unknown assertion type '" + type + "'");
        }
    }
    return s;
}

std::string scenario_to_text(const Scenario& scenario) { return scenario_to_json(scenario).dump(2) + "\n"; }

Scenario parse_scenario(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        malformed(e.what());
    }
    return scenario_from_json(j);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ProtocolError(ErrorCode::InvalidArgument, "cannot open scenario file " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

}  // namespace blockhouse::sim
