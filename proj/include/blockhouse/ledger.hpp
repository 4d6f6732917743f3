#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "blockhouse/hash.hpp"
#include "blockhouse/transaction.hpp"
#include "blockhouse/types.hpp"

namespace blockhouse {

/// 15 minutes: the tolerated disagreement between node clocks.
inline constexpr Seconds kDefaultMaxSkew = 900;

struct LedgerConfig {
    Seconds max_skew = kDefaultMaxSkew;
    Seconds genesis_time = 0;
};

struct Block {
    std::uint64_t index = 0;
    Digest parent_hash{};
    Seconds timestamp = 0;
    std::vector<Transaction> txs;
    std::vector<Receipt> receipts;  ///< parallel to txs
    Digest hash{};
};

/// Digest over index, parent hash, timestamp and every (transaction, receipt) pair.
Digest compute_block_hash(const Block& block);

enum class EscrowSlot : std::uint8_t { PaymentPool, ClientAuditorsSeq, HostAuditorsSeq, HostFileSeq };

std::string_view to_string(EscrowSlot slot);

/// Tokens a contract holds on behalf of its parties.
struct EscrowAccount {
    TokenAmount payment_pool;
    TokenAmount client_auditors_seq;
    TokenAmount host_auditors_seq;
    TokenAmount host_file_seq;
    /// Deposits of hosts that requested the contract but were not (yet) chosen.
    std::map<NodeId, TokenAmount> pending_requests;

    TokenAmount& slot(EscrowSlot s);
    TokenAmount slot(EscrowSlot s) const;
    TokenAmount total() const;
    bool empty() const { return total().is_zero(); }
};

/// Where an accepted transaction landed, and what it did.
struct BlockRef {
    std::uint64_t block = 0;
    std::uint32_t position = 0;
    Receipt receipt;
};

/// Balances, escrows, chain and clock. Mutated by the ledger pipeline and by
/// the contract logic it delegates to; never by anyone else.
class LedgerState {
public:
    explicit LedgerState(LedgerConfig config) : config_(config), clock_(config.genesis_time) {}

    const LedgerConfig& config() const { return config_; }
    Seconds clock() const { return clock_; }
    Seconds max_skew() const { return config_.max_skew; }
    bool started() const { return started_; }

    bool is_registered(NodeId id) const { return nodes_.contains(id); }
    bool is_banned(NodeId id) const { return banned_.contains(id); }
    NodeKind kind(NodeId id) const;
    Seconds skew(NodeId id) const;
    /// Local clock of a node: ledger clock plus its skew.
    Seconds node_time(NodeId id) const { return clock_ + skew(id); }
    std::vector<NodeId> nodes() const;
    const std::set<NodeId>& banned() const { return banned_; }

    TokenAmount balance(NodeId id) const;
    TokenAmount burned() const { return burned_; }
    const EscrowAccount& escrow(ContractId id) const;
    bool has_escrow(ContractId id) const { return escrows_.contains(id); }
    const std::map<ContractId, EscrowAccount>& escrows() const { return escrows_; }

    /// Everything ever minted.
    TokenAmount total_supply() const { return supply_; }
    /// Balances + escrows + burned; equals total_supply() in every reachable state.
    TokenAmount accounted_tokens() const;
    bool conserved() const { return accounted_tokens() == supply_; }

    std::span<const Block> blocks() const { return blocks_; }
    /// Index of the newest block; throws before genesis.
    std::uint64_t height() const;
    const Digest& block_hash(std::uint64_t index) const;
    /// Newest block with timestamp strictly before `time`.
    std::optional<std::uint64_t> last_block_before(Seconds time) const;

    // Contract-side mutators. Each validates before mutating.

    void deposit(NodeId from, ContractId contract, EscrowSlot slot, TokenAmount amount);
    void release(ContractId contract, EscrowSlot slot, NodeId to, TokenAmount amount);
    void deposit_request(NodeId host, ContractId contract, TokenAmount amount);
    void refund_request(ContractId contract, NodeId host);
    /// Moves a chosen requester's pending deposit into the host sequestration slots.
    void promote_request(ContractId contract, NodeId host, TokenAmount file_seq, TokenAmount auditors_seq);
    void ban(NodeId id);

private:
    friend class Ledger;

    struct NodeRecord {
        NodeKind kind = NodeKind::Client;
        TokenAmount balance;
        Seconds skew = 0;
    };

    NodeRecord& node(NodeId id);
    const NodeRecord& node(NodeId id) const;
    void credit(NodeId to, TokenAmount amount);

    LedgerConfig config_;
    Seconds clock_;
    bool started_ = false;
    std::map<NodeId, NodeRecord> nodes_;
    std::set<NodeId> banned_;
    std::map<ContractId, EscrowAccount> escrows_;
    TokenAmount burned_;
    TokenAmount supply_;
    std::vector<Block> blocks_;
};

/// Effect produced by the contract logic when time passes, logged on-chain as a
/// transaction from the system account.
struct SystemAction {
    Transaction tx;
    Receipt receipt;
};

/// Contract logic the ledger delegates transaction validation to.
class TransactionProcessor {
public:
    virtual ~TransactionProcessor() = default;

    /// Validates and applies `tx`. Throws ProtocolError without side effects on rejection.
    virtual Receipt apply(const Transaction& tx, LedgerState& state) = 0;

    /// Re-evaluates time-based rules after the clock moved.
    virtual std::vector<SystemAction> on_clock(LedgerState& state) = 0;
};

/// Single authoritative sequencer for the simulated private chain.
class Ledger {
public:
    explicit Ledger(LedgerConfig config = {});

    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    void attach(TransactionProcessor& processor) { processor_ = &processor; }

    /// Only permitted before start(); the only way tokens come into existence.
    NodeId register_node(NodeKind kind, TokenAmount initial_balance, Seconds skew = 0);
    void set_skew(NodeId id, Seconds skew);

    /// Seals the genesis block (one Registration per node) and freezes the supply.
    void start();

    BlockRef submit_transaction(Transaction tx);
    void advance_clock(Seconds delta);

    const Digest& block_hash(std::uint64_t index) const { return state_.block_hash(index); }
    const LedgerState& state() const { return state_; }
    Seconds clock() const { return state_.clock(); }

    /// Groups every transaction submitted during its lifetime into one block.
    class Batch {
    public:
        ~Batch();
        Batch(const Batch&) = delete;
        Batch& operator=(const Batch&) = delete;

    private:
        friend class Ledger;
        explicit Batch(Ledger& ledger) : ledger_(&ledger) {}
        Ledger* ledger_;
    };

    [[nodiscard]] Batch batch();

private:
    void seal_open_block();
    void append(Transaction tx, Receipt receipt);

    LedgerState state_;
    TransactionProcessor* processor_ = nullptr;
    std::uint32_t next_node_ = 1;  // 0 is the system account
    bool batching_ = false;
    std::optional<Block> open_block_;
};

}  // namespace blockhouse
