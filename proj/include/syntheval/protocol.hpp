#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "syntheval/chat.hpp"
#include "syntheval/corpus.hpp"
#include "syntheval/generation.hpp"
#include "syntheval/persona.hpp"
#include "syntheval/retrieval.hpp"
#include "syntheval/target.hpp"

namespace syntheval {

inline const char* kTranscriptSchemaVersion = "syntheval-transcript-v1";

enum class Part { part1, part2, part3, closing };
enum class TurnKind { workflow, tool_reaction, query_generation, critique, assessment, ranking };

const char* part_name(Part p);
Part part_from_name(const std::string& name);
const char* turn_kind_name(TurnKind k);
TurnKind turn_kind_from_name(const std::string& name);

/// Strict 1..3 preference over the three query modalities
/// (3 = most preferred, 1 = least preferred, no ties).
struct ModalityRanking {
    std::map<Modality, int> scores;
    std::string rationale;

    bool is_strict_permutation() const;
};

struct Turn {
    Part part = Part::part1;
    TurnKind kind = TurnKind::workflow;
    std::optional<Modality> modality;  // part3 turns only
    std::string question;
    TurnResponse response;
    std::optional<EvidenceBundle> evidence;                  // present iff evaluator grounded
    std::optional<AdaptedQuery> adapted_query;               // critique turns with a search
    std::optional<std::vector<ResultTriplet>> search_results;  // critique turns only
    std::optional<CitationReport> citation_report;           // grounded, non-abstained
    std::vector<std::string> citation_flags;                 // "invalid:P4", "fabricated:P4", "uncited"
};

struct SessionTranscript {
    std::string schema_version = kTranscriptSchemaVersion;
    std::string session_id;
    EvaluatorSpec evaluator;
    std::string started_at;
    std::string ended_at;
    std::string config_fingerprint;
    std::vector<Turn> turns;
    std::optional<ModalityRanking> ranking;
    bool complete = false;
    std::string abort_reason;  // non-empty iff incomplete
};

/// Time budgets map to turn budgets, not wall clock: part1 and part2 get
/// one turn each by default, part3 two turns per modality (query
/// generation + critique), closing an assessment turn plus the ranking.
struct ProtocolConfig {
    int turns_part1 = 1;
    int turns_part2 = 1;
    int queries_per_modality = 1;
    int closing_assessment_turns = 1;
    int k_retrieval = 8;
    int k_results = 3;
    std::string tool_description;  // empty -> default_tool_description()
    bool retry_invalid_citations = false;
    std::string config_fingerprint;  // empty -> protocol_fingerprint(*this)
};

/// The versioned part-2 asset text; assets/tool_description.txt ships the
/// same content.
std::string default_tool_description();

/// Stable hash over the resolved turn budgets, retrieval parameters,
/// modality order, and the tool-description text.
std::string protocol_fingerprint(const ProtocolConfig& config);

/// Provider and data handles one session runs against. Grounded sessions
/// need corpus, index, and filter; ungrounded only target + chat.
struct SessionEnvironment {
    TargetClient* target = nullptr;
    EmbeddingProvider* embedder = nullptr;
    ChatProvider* chat = nullptr;
    RelevanceFilter* filter = nullptr;
    const ExcerptCorpus* corpus = nullptr;
    const VectorIndex* index = nullptr;
};

/// Fixed modality order within part 3.
inline const Modality kModalityOrder[3] = {Modality::text, Modality::image,
                                           Modality::specification};

/// Runs the three-part protocol plus closing ranking for one evaluator.
///
/// Grounded turns are evidence-gated: an empty bundle yields the
/// canonical abstention without any chat call. Mid-session infrastructure
/// failures abort the session and return a partial transcript with
/// complete=false and abort_reason set; precondition violations throw.
SessionTranscript run_session(const EvaluatorSpec& evaluator, const SessionEnvironment& env,
                              const ProtocolConfig& config);

/// Closing elicitation: asks for the ranking as structured JSON, retries
/// once with a corrective instruction on malformed or non-permutation
/// output, then throws Err::RankingParseFailure.
ModalityRanking elicit_ranking(ChatProvider& chat, const std::string& system_text,
                               const std::vector<std::pair<std::string, std::string>>& history,
                               std::string* raw_content_out = nullptr,
                               std::string* question_out = nullptr);

/// Parses ranking JSON from raw model output: whole-string JSON, a fenced
/// ```json block, or the first balanced object. nullopt when nothing
/// parses into a strict permutation.
std::optional<ModalityRanking> parse_ranking_content(const std::string& content);

nlohmann::json transcript_to_json(const SessionTranscript& transcript);
SessionTranscript transcript_from_json(const nlohmann::json& doc);

/// Structural validation of a transcript document. Throws
/// Err::SchemaViolation naming `source_name` and the offending path.
void validate_transcript_json(const nlohmann::json& doc, const std::string& source_name);

}  // namespace syntheval
