#include "blockhouse/transaction.hpp"

#include "blockhouse/codec.hpp"
#include "blockhouse/error.hpp"

#include "overloaded.hpp"

namespace blockhouse {

using detail::Overloaded;

void validate(const ContractTerms& terms) {
    if (terms.data_size == 0) {
        throw ProtocolError(ErrorCode::InvalidTerms, "data size must be positive");
    }
    if (terms.proof_period <= 0 || terms.duration <= 0) {
        throw ProtocolError(ErrorCode::InvalidTerms, "duration and proof period must be positive");
    }
    if (terms.duration % terms.proof_period != 0) {
        throw ProtocolError(ErrorCode::InvalidTerms, "duration must be a whole number of proof periods");
    }
    if (terms.duration / terms.proof_period > std::numeric_limits<std::uint32_t>::max()) {
        throw ProtocolError(ErrorCode::InvalidTerms, "too many epochs");
    }
    if (terms.missed_or_bad_proof_limit == 0) {
        throw ProtocolError(ErrorCode::InvalidTerms, "failure limit must be positive");
    }
    if (terms.challenge_size == 0) {
        throw ProtocolError(ErrorCode::InvalidTerms, "challenge size must be positive");
    }
}

std::string_view to_string(Vote vote) {
    return vote == Vote::FileAvailable ? "file_available" : "file_unavailable";
}

std::string_view to_string(ProofVerdict verdict) {
    switch (verdict) {
        case ProofVerdict::Ok: return "ok";
        case ProofVerdict::Bad: return "bad";
        case ProofVerdict::Missed: return "missed";
    }
    return "unknown";
}

std::string_view payload_kind(const Payload& payload) {
    return std::visit(Overloaded{
                          [](const Registration&) { return std::string_view("Registration"); },
                          [](const Proposal&) { return std::string_view("Proposal"); },
                          [](const HostRequest&) { return std::string_view("HostRequest"); },
                          [](const Agreement&) { return std::string_view("Agreement"); },
                          [](const ProofSubmission&) { return std::string_view("ProofSubmission"); },
                          [](const CompletionAck&) { return std::string_view("CompletionAck"); },
                          [](const Termination&) { return std::string_view("Termination"); },
                          [](const DisputeOpen&) { return std::string_view("DisputeOpen"); },
                          [](const AuditorVote&) { return std::string_view("AuditorVote"); },
                      },
                      payload);
}

void encode(ByteWriter& out, const ContractTerms& t) {
    out.u64(t.data_size)
        .i64(t.duration)
        .i64(t.proof_period)
        .u64(t.total_price.value())
        .u64(t.file_sequestration.value())
        .u64(t.auditors_sequestration.value())
        .u32(t.missed_or_bad_proof_limit)
        .u32(t.challenge_size);
}

void encode(ByteWriter& out, const Transaction& tx) {
    out.u32(tx.sender.value).i64(tx.timestamp).u8(static_cast<std::uint8_t>(tx.payload.index()));
    std::visit(Overloaded{
                   [&](const Registration& r) {
                       out.u32(r.node.value).u8(static_cast<std::uint8_t>(r.kind)).u64(r.balance.value());
                   },
                   [&](const Proposal& p) { encode(out, p.terms); },
                   [&](const HostRequest& r) { out.u64(r.contract.value); },
                   [&](const Agreement& a) {
                       out.u64(a.contract.value).u32(a.host.value);
                       encode(out, a.metadata);
                   },
                   [&](const ProofSubmission& s) {
                       out.u64(s.contract.value).u32(s.epoch);
                       encode(out, s.proof);
                   },
                   [&](const CompletionAck& a) { out.u64(a.contract.value); },
                   [&](const Termination& t) { out.u64(t.contract.value); },
                   [&](const DisputeOpen& d) { out.u64(d.contract.value); },
                   [&](const AuditorVote& v) { out.u64(v.audit_case.value).u8(static_cast<std::uint8_t>(v.vote)); },
               },
               tx.payload);
}

void encode(ByteWriter& out, const Receipt& r) {
    auto opt_u64 = [&](bool has, std::uint64_t v) {
        out.u8(has ? 1 : 0);
        if (has) {
            out.u64(v);
        }
    };
    opt_u64(r.contract.has_value(), r.contract ? r.contract->value : 0);
    opt_u64(r.audit_case.has_value(), r.audit_case ? r.audit_case->value : 0);
    out.u8(r.verdict ? static_cast<std::uint8_t>(*r.verdict) + 1 : 0);
    opt_u64(r.seed_block.has_value(), r.seed_block.value_or(0));
    out.u64(r.escrowed.value()).u64(r.released.value()).u8(r.settled ? 1 : 0);
}

}  // namespace blockhouse
