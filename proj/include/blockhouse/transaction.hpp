#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "blockhouse/hash.hpp"
#include "blockhouse/por.hpp"
#include "blockhouse/types.hpp"

namespace blockhouse {

class ByteWriter;

/// What a client advertises in a proposal.
struct ContractTerms {
    std::uint64_t data_size = 0;  ///< bytes
    Seconds duration = 0;
    Seconds proof_period = 0;  ///< duration must be a whole number of periods
    TokenAmount total_price;
    TokenAmount file_sequestration;
    TokenAmount auditors_sequestration;
    std::uint32_t missed_or_bad_proof_limit = 3;
    std::uint32_t challenge_size = kDefaultChallengeSize;

    std::uint32_t epochs() const { return static_cast<std::uint32_t>(duration / proof_period); }

    friend bool operator==(const ContractTerms&, const ContractTerms&) = default;
};

/// Throws ProtocolError(InvalidTerms) on inconsistent terms.
void validate(const ContractTerms& terms);

enum class Vote : std::uint8_t { FileAvailable, FileUnavailable };

std::string_view to_string(Vote vote);

// Transaction payloads.

/// Genesis-only: records a node admitted before the simulation starts.
struct Registration {
    NodeId node;
    NodeKind kind = NodeKind::Client;
    TokenAmount balance;
};
struct Proposal {
    ContractTerms terms;
};
struct HostRequest {
    ContractId contract;
};
struct Agreement {
    ContractId contract;
    NodeId host;
    FileMetadata metadata;
};
struct ProofSubmission {
    ContractId contract;
    std::uint32_t epoch = 0;  ///< 1-based
    Proof proof;
};
struct CompletionAck {
    ContractId contract;
};
struct Termination {
    ContractId contract;
};
struct DisputeOpen {
    ContractId contract;
};
struct AuditorVote {
    CaseId audit_case;
    Vote vote = Vote::FileAvailable;
};

using Payload = std::variant<Registration, Proposal, HostRequest, Agreement, ProofSubmission, CompletionAck,
                             Termination, DisputeOpen, AuditorVote>;

std::string_view payload_kind(const Payload& payload);

struct Transaction {
    NodeId sender;
    Seconds timestamp = 0;  ///< sender's local clock
    Payload payload;
};

enum class ProofVerdict : std::uint8_t { Ok, Bad, Missed };

std::string_view to_string(ProofVerdict verdict);

/// Outcome of an accepted transaction, stored next to it in the block.
struct Receipt {
    std::optional<ContractId> contract;
    std::optional<CaseId> audit_case;
    std::optional<ProofVerdict> verdict;
    std::optional<std::uint64_t> seed_block;  ///< block whose hash seeded the challenge
    TokenAmount escrowed;                     ///< moved from the sender into escrow
    TokenAmount released;                     ///< paid out of escrow by this transaction
    bool settled = false;                     ///< the transaction closed a contract
};

void encode(ByteWriter& out, const ContractTerms& terms);
void encode(ByteWriter& out, const Transaction& tx);
void encode(ByteWriter& out, const Receipt& receipt);

}  // namespace blockhouse
