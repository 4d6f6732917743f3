#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "blockhouse/contract.hpp"
#include "blockhouse/ledger.hpp"
#include "blockhouse/market.hpp"
#include "blockhouse/transaction.hpp"

namespace blockhouse::sim {

// Node behaviours. Times are in the node's local clock.

/// No protocol role of its own; only audits when selected.
struct Idle {};
struct HonestHost {};
/// Deletes ceil(fraction * chunks) random chunks of every stored file at `at`.
struct DroppingHost {
    double fraction = 1.0;
    Seconds at = 0;
};
/// Stops proving and serving anything at `at`.
struct VanishingHost {
    Seconds at = 0;
};
/// Proves on-chain but never hands the file back nor answers auditors.
struct WithholdingHost {};
struct EarlyTerminatingHost {
    Seconds at = 0;
};
struct HonestClient {};
/// Disputes at the end even though the download succeeded.
struct LyingClient {};
struct EarlyTerminatingClient {
    Seconds at = 0;
};
/// Neither acknowledges nor disputes at the end.
struct SilentClient {};

using Strategy = std::variant<Idle, HonestHost, DroppingHost, VanishingHost, WithholdingHost, EarlyTerminatingHost,
                              HonestClient, LyingClient, EarlyTerminatingClient, SilentClient>;

struct NodeSpec {
    std::string name;
    NodeKind kind = NodeKind::Auditor;
    TokenAmount balance;
    Seconds skew = 0;
    std::optional<std::uint64_t> capacity;
    /// Probability of reporting an audit check truthfully.
    double honesty = 1.0;
    Strategy strategy;
};

struct FileSpec {
    std::uint64_t size = 0;
    std::uint64_t content_seed = 0;
    std::uint32_t chunk_size = kDefaultChunkSize;
};

struct ContractSpec {
    std::string client;
    std::vector<std::string> hosts;  ///< candidates that will request the contract
    Seconds start = 0;
    FileSpec file;
    ContractTerms terms;
    /// Requesters below this host score are never chosen.
    double min_host_score = 0.0;
};

struct OutcomeAssertion {
    std::size_t contract = 0;  ///< index into Scenario::contracts
    OutcomeKind kind = OutcomeKind::NormalEnd;
};
struct BalanceAssertion {
    std::string node;
    std::int64_t delta = 0;  ///< final minus initial balance
};
struct BannedAssertion {
    std::string node;
    bool banned = true;
};

using Assertion = std::variant<OutcomeAssertion, BalanceAssertion, BannedAssertion>;

struct Scenario {
    std::uint64_t seed = 0;
    Seconds tick = 60;     ///< clock step between simulation rounds
    Seconds horizon = 0;   ///< give up after this much simulated time; 0 = derived from contracts
    LedgerConfig ledger;
    MarketConfig market;
    std::vector<NodeSpec> nodes;
    std::vector<ContractSpec> contracts;
    std::vector<Assertion> assertions;
};

/// Canonical JSON text; parse_scenario(scenario_to_text(s)) reproduces s exactly.
std::string scenario_to_text(const Scenario& scenario);
/// Accepts the canonical form plus `count` on a node (expands to name_0..name_{count-1}).
/// Throws ProtocolError(Malformed) on invalid input.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

struct ContractResult {
    std::optional<ContractId> id;  ///< nullopt if the proposal was rejected
    std::optional<OutcomeKind> outcome;
    std::optional<std::string> host;
};

struct Trace {
    /// One JSON record per line. The first line embeds the scenario.
    std::vector<std::string> lines;
    std::map<std::string, TokenAmount> initial_balances;
    std::map<std::string, TokenAmount> final_balances;
    std::vector<ContractResult> contracts;  ///< parallel to Scenario::contracts
    std::vector<SettlementOutcome> settlements;
    std::map<std::string, ReputationRecord> reputation;
    std::vector<std::string> banned;
    TokenAmount burned;
    /// Sum over all escrow accounts at the end; zero once everything settled.
    TokenAmount escrow_outstanding;
    std::uint64_t steps = 0;
    std::uint64_t conservation_violations = 0;
    bool all_settled = false;
    std::vector<std::string> assertion_failures;

    bool ok() const { return all_settled && conservation_violations == 0 && assertion_failures.empty(); }
    std::string jsonl() const;
};

Trace run(const Scenario& scenario);

/// Re-runs the scenario embedded in the first line and compares every line.
bool replay(const Trace& trace);
bool replay(const std::vector<std::string>& lines);

/// Random but valid scenario for fuzzing; deterministic in `seed`.
Scenario generate_scenario(std::uint64_t seed);

}  // namespace blockhouse::sim
