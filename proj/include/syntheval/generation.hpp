#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "syntheval/chat.hpp"
#include "syntheval/persona.hpp"
#include "syntheval/retrieval.hpp"

namespace syntheval {

/// Canonical abstention text, emitted verbatim when retrieval yields no
/// usable evidence.
inline const char* kAbstentionMessage =
    "I don't have enough information to answer that based on my experiences.";

/// Responses beginning with this prefix also count as abstention; models
/// sometimes append trailing qualifiers to the canonical message.
inline const char* kAbstentionPrefix = "I don't have enough information to answer that";

bool matches_abstention(const std::string& text);

/// Bare P<digits> tokens in order of first appearance, deduplicated.
/// A token only counts at word boundaries ("P9," yes, "BEDPE" no).
std::vector<std::string> extract_citations(const std::string& text);

/// Everything needed for one provider call. Grounded prompts embed every
/// evidence item verbatim with its participant id; ungrounded prompts
/// carry no evidence section.
struct PromptBundle {
    std::string system_text;
    std::vector<std::pair<std::string, std::string>> history;  // prior (question, response)
    std::string question;
    std::optional<EvidenceBundle> evidence;

    std::vector<ChatMessage> to_messages() const;
};

struct TurnResponse {
    std::string text;
    std::vector<std::string> citations;  // participant ids, first-appearance order
    bool abstained = false;
    std::string raw_provider_payload;  // untouched provider output, for audit
};

struct CitationReport {
    std::vector<std::string> valid;
    std::vector<std::string> invalid;
    bool uncited_claims_flag = false;  // non-abstained response with zero citations
};

/// Builds the prompt for one turn. Grounded evaluators require an
/// evidence argument (an empty bundle is fine); ungrounded evaluators
/// require its absence — Err::ConditionMismatch otherwise.
PromptBundle compose_prompt(const EvaluatorSpec& evaluator, const std::string& question,
                            std::optional<EvidenceBundle> evidence,
                            const std::vector<std::pair<std::string, std::string>>& history);

/// One provider call, parsed: citations extracted, abstention detected
/// (and the text normalized to the canonical message when it is).
/// Throws Err::ProviderUnavailable, Err::MalformedResponse (empty text).
TurnResponse generate_turn(ChatProvider& provider, const PromptBundle& prompt);

/// Classifies each cited participant against the evidence bundle.
/// Reports, never throws.
CitationReport validate_citations(const TurnResponse& response, const EvidenceBundle& evidence);

/// The canonical abstained response. Constant; no provider involved.
TurnResponse abstention_turn();

}  // namespace syntheval
