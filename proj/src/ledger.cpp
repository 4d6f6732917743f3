#include "blockhouse/ledger.hpp"

#include "blockhouse/codec.hpp"
#include "blockhouse/error.hpp"

namespace blockhouse {

Digest compute_block_hash(const Block& block) {
    ByteWriter w;
    w.text("blockhouse.block").u64(block.index).digest(block.parent_hash).i64(block.timestamp);
    w.u32(static_cast<std::uint32_t>(block.txs.size()));
    for (std::size_t i = 0; i < block.txs.size(); ++i) {
        encode(w, block.txs[i]);
        encode(w, i < block.receipts.size() ? block.receipts[i] : Receipt{});
    }
    return sha256(w.data());
}

std::string_view to_string(EscrowSlot slot) {
    switch (slot) {
        case EscrowSlot::PaymentPool: return "payment_pool";
        case EscrowSlot::ClientAuditorsSeq: return "client_auditors_seq";
        case EscrowSlot::HostAuditorsSeq: return "host_auditors_seq";
        case EscrowSlot::HostFileSeq: return "host_file_seq";
    }
    return "unknown";
}

TokenAmount& EscrowAccount::slot(EscrowSlot s) {
    switch (s) {
        case EscrowSlot::PaymentPool: return payment_pool;
        case EscrowSlot::ClientAuditorsSeq: return client_auditors_seq;
        case EscrowSlot::HostAuditorsSeq: return host_auditors_seq;
        case EscrowSlot::HostFileSeq: return host_file_seq;
    }
    throw ProtocolError(ErrorCode::InvalidArgument, "unknown escrow slot");
}

TokenAmount EscrowAccount::slot(EscrowSlot s) const { return const_cast<EscrowAccount*>(this)->slot(s); }

TokenAmount EscrowAccount::total() const {
    TokenAmount sum = payment_pool + client_auditors_seq + host_auditors_seq + host_file_seq;
    for (const auto& [host, amount] : pending_requests) {
        sum += amount;
    }
    return sum;
}

LedgerState::NodeRecord& LedgerState::node(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw ProtocolError(ErrorCode::UnknownNode, "unknown node " + std::to_string(id.value));
    }
    return it->second;
}

const LedgerState::NodeRecord& LedgerState::node(NodeId id) const { return const_cast<LedgerState*>(this)->node(id); }

NodeKind LedgerState::kind(NodeId id) const { return node(id).kind; }
Seconds LedgerState::skew(NodeId id) const { return node(id).skew; }
TokenAmount LedgerState::balance(NodeId id) const { return node(id).balance; }

std::vector<NodeId> LedgerState::nodes() const {
    std::vector<NodeId> out;
    out.reserve(nodes_.size());
    for (const auto& [id, rec] : nodes_) {
        out.push_back(id);
    }
    return out;
}

const EscrowAccount& LedgerState::escrow(ContractId id) const {
    static const EscrowAccount kEmpty;
    auto it = escrows_.find(id);
    return it == escrows_.end() ? kEmpty : it->second;
}

TokenAmount LedgerState::accounted_tokens() const {
    TokenAmount sum = burned_;
    for (const auto& [id, rec] : nodes_) {
        sum += rec.balance;
    }
    for (const auto& [id, escrow] : escrows_) {
        sum += escrow.total();
    }
    return sum;
}

std::uint64_t LedgerState::height() const {
    if (blocks_.empty()) {
        throw ProtocolError(ErrorCode::NotStarted, "chain has no genesis block yet");
    }
    return blocks_.size() - 1;
}

const Digest& LedgerState::block_hash(std::uint64_t index) const {
    if (index >= blocks_.size()) {
        throw ProtocolError(ErrorCode::OutOfRange, "block " + std::to_string(index) + " does not exist");
    }
    return blocks_[index].hash;
}

std::optional<std::uint64_t> LedgerState::last_block_before(Seconds time) const {
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
        if (it->timestamp < time) {
            return it->index;
        }
    }
    return std::nullopt;
}

void LedgerState::credit(NodeId to, TokenAmount amount) {
    if (to == kBurnAccount) {
        burned_ += amount;
    } else {
        node(to).balance += amount;
    }
}

void LedgerState::deposit(NodeId from, ContractId contract, EscrowSlot slot, TokenAmount amount) {
    auto& rec = node(from);
    if (rec.balance < amount) {
        throw ProtocolError(ErrorCode::InsufficientFunds, "balance too low for deposit");
    }
    rec.balance -= amount;
    escrows_[contract].slot(slot) += amount;
}

void LedgerState::release(ContractId contract, EscrowSlot slot, NodeId to, TokenAmount amount) {
    if (amount.is_zero()) {
        return;  // a contract that never escrowed anything has no account
    }
    auto it = escrows_.find(contract);
    if (it == escrows_.end() || it->second.slot(slot) < amount) {
        throw ProtocolError(ErrorCode::InsufficientFunds, "escrow slot too low for release");
    }
    if (to != kBurnAccount) {
        node(to);  // must exist before anything moves
    }
    it->second.slot(slot) -= amount;
    credit(to, amount);
}

void LedgerState::deposit_request(NodeId host, ContractId contract, TokenAmount amount) {
    auto& rec = node(host);
    if (rec.balance < amount) {
        throw ProtocolError(ErrorCode::InsufficientFunds, "balance too low for sequestration");
    }
    auto it = escrows_.find(contract);
    if (it != escrows_.end() && it->second.pending_requests.contains(host)) {
        throw ProtocolError(ErrorCode::Duplicate, "host already has a pending request");
    }
    rec.balance -= amount;
    escrows_[contract].pending_requests.emplace(host, amount);
}

void LedgerState::refund_request(ContractId contract, NodeId host) {
    auto it = escrows_.find(contract);
    if (it == escrows_.end() || !it->second.pending_requests.contains(host)) {
        throw ProtocolError(ErrorCode::InvalidState, "no pending request to refund");
    }
    auto& pending = it->second.pending_requests;
    const TokenAmount amount = pending.at(host);
    pending.erase(host);
    credit(host, amount);
}

void LedgerState::promote_request(ContractId contract, NodeId host, TokenAmount file_seq, TokenAmount auditors_seq) {
    auto it = escrows_.find(contract);
    if (it == escrows_.end() || !it->second.pending_requests.contains(host)) {
        throw ProtocolError(ErrorCode::InvalidState, "no pending request to promote");
    }
    auto& escrow = it->second;
    if (escrow.pending_requests.at(host) != file_seq + auditors_seq) {
        throw ProtocolError(ErrorCode::InvalidState, "pending deposit does not match the sequestrations");
    }
    escrow.pending_requests.erase(host);
    escrow.host_file_seq += file_seq;
    escrow.host_auditors_seq += auditors_seq;
}

void LedgerState::ban(NodeId id) {
    node(id);
    banned_.insert(id);
}

Ledger::Ledger(LedgerConfig config) : state_(config) {
    if (config.max_skew < 0) {
        throw ProtocolError(ErrorCode::InvalidArgument, "max skew must be non-negative");
    }
}

NodeId Ledger::register_node(NodeKind kind, TokenAmount initial_balance, Seconds skew) {
    if (state_.started_) {
        throw ProtocolError(ErrorCode::AlreadyStarted, "nodes cannot join after the simulation started");
    }
    if (kind == NodeKind::System) {
        throw ProtocolError(ErrorCode::InvalidArgument, "the system account is reserved");
    }
    if (skew > state_.max_skew() || skew < -state_.max_skew()) {
        throw ProtocolError(ErrorCode::ClockSkew, "node skew exceeds the tolerated bound");
    }
    const NodeId id{next_node_++};
    state_.supply_ += initial_balance;
    state_.nodes_.emplace(id, LedgerState::NodeRecord{kind, initial_balance, skew});
    return id;
}

void Ledger::set_skew(NodeId id, Seconds skew) {
    if (skew > state_.max_skew() || skew < -state_.max_skew()) {
        throw ProtocolError(ErrorCode::ClockSkew, "node skew exceeds the tolerated bound");
    }
    state_.node(id).skew = skew;
}

void Ledger::start() {
    if (state_.started_) {
        throw ProtocolError(ErrorCode::AlreadyStarted, "already started");
    }
    if (state_.nodes_.empty()) {
        throw ProtocolError(ErrorCode::InvalidState, "genesis needs at least one node");
    }
    Block genesis;
    genesis.index = 0;
    genesis.timestamp = state_.clock_;
    for (const auto& [id, rec] : state_.nodes_) {
        genesis.txs.push_back(Transaction{kSystemAccount, state_.clock_, Registration{id, rec.kind, rec.balance}});
        genesis.receipts.emplace_back();
    }
    genesis.hash = compute_block_hash(genesis);
    state_.blocks_.push_back(std::move(genesis));
    state_.started_ = true;
}

BlockRef Ledger::submit_transaction(Transaction tx) {
    if (!state_.started_) {
        throw ProtocolError(ErrorCode::NotStarted, "simulation not started");
    }
    if (processor_ == nullptr) {
        throw ProtocolError(ErrorCode::InvalidState, "no contract processor attached");
    }
    if (std::holds_alternative<Registration>(tx.payload) || tx.sender == kSystemAccount) {
        throw ProtocolError(ErrorCode::NotAuthorized, "reserved transaction");
    }
    if (!state_.is_registered(tx.sender)) {
        throw ProtocolError(ErrorCode::UnknownNode, "unregistered sender");
    }
    if (state_.is_banned(tx.sender)) {
        throw ProtocolError(ErrorCode::Banned, "sender is banned");
    }
    const Seconds drift = tx.timestamp - state_.clock_;
    if (drift > state_.max_skew() || drift < -state_.max_skew()) {
        throw ProtocolError(ErrorCode::ClockSkew, "timestamp outside the tolerated clock skew");
    }
    Receipt receipt = processor_->apply(tx, state_);
    append(std::move(tx), receipt);
    const Block& target = open_block_ ? *open_block_ : state_.blocks_.back();
    return BlockRef{target.index, static_cast<std::uint32_t>(target.txs.size() - 1), std::move(receipt)};
}

void Ledger::append(Transaction tx, Receipt receipt) {
    if (!open_block_) {
        Block b;
        b.index = state_.blocks_.size();
        b.parent_hash = state_.blocks_.back().hash;
        b.timestamp = state_.clock_;
        open_block_ = std::move(b);
    }
    open_block_->txs.push_back(std::move(tx));
    open_block_->receipts.push_back(std::move(receipt));
    if (!batching_) {
        seal_open_block();
    }
}

void Ledger::seal_open_block() {
    if (open_block_ && !open_block_->txs.empty()) {
        open_block_->hash = compute_block_hash(*open_block_);
        state_.blocks_.push_back(std::move(*open_block_));
    }
    open_block_.reset();
}

void Ledger::advance_clock(Seconds delta) {
    if (delta <= 0) {
        throw ProtocolError(ErrorCode::InvalidArgument, "clock only moves forward");
    }
    if (!state_.started_) {
        throw ProtocolError(ErrorCode::NotStarted, "simulation not started");
    }
    if (batching_) {
        throw ProtocolError(ErrorCode::InvalidState, "cannot advance the clock inside a batch");
    }
    state_.clock_ += delta;
    if (processor_ == nullptr) {
        return;
    }
    auto actions = processor_->on_clock(state_);
    if (actions.empty()) {
        return;
    }
    batching_ = true;
    for (auto& action : actions) {
        append(std::move(action.tx), std::move(action.receipt));
    }
    batching_ = false;
    seal_open_block();
}

Ledger::Batch Ledger::batch() {
    if (batching_) {
        throw ProtocolError(ErrorCode::InvalidState, "batch already open");
    }
    batching_ = true;
    return Batch(*this);
}

Ledger::Batch::~Batch() {
    ledger_->batching_ = false;
    ledger_->seal_open_block();
}

}  // namespace blockhouse
