#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "syntheval/persona.hpp"
#include "syntheval/protocol.hpp"

namespace syntheval {

struct ProviderConfig {
    bool mock = true;
    std::string endpoint;      // http mode
    std::string model_id = "mock";
    std::size_t mock_dimension = 64;    // embed mock
    std::string mock_script_path;       // chat mock: optional script file
    std::string api_key_env;            // env var holding a bearer token
};

struct FilterConfig {
    std::string type = "cosine_threshold";  // accept_all | reject_all | cosine_threshold | llm
    double threshold = 0.30;
};

struct RunConfig {
    std::string corpus_path;
    std::optional<std::string> variation_path;
    std::optional<std::string> profiles_path;
    std::optional<std::string> target_endpoint;
    std::optional<std::string> mock_gallery_path;
    ProviderConfig embed;
    ProviderConfig chat;
    FilterConfig filter;
    std::uint64_t seed = 0;
    int k_retrieval = 8;
    int k_results = 3;
    int turns_part1 = 1;
    int turns_part2 = 1;
    int queries_per_modality = 1;
    int closing_assessment_turns = 1;
    std::vector<Condition> conditions{Condition::grounded, Condition::ungrounded};
    std::string output_dir = "out";
    std::string ungrounded_role = kDefaultUngroundedRole;
    int parallelism = 2;
    bool retry_invalid_citations = false;
    std::optional<std::string> tool_description_path;
    std::optional<std::string> embedding_cache_path;
    std::optional<std::string> themes_path;

    /// Stable hash of the resolved configuration plus asset hashes;
    /// recorded in every transcript.
    std::string fingerprint() const;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

/// Throws Err::ConfigInvalid before any session starts.
void validate_run_config(const RunConfig& config);

struct SessionOutcome {
    std::string evaluator_id;
    Condition condition = Condition::grounded;
    std::string session_id;
    bool complete = false;
    double abstained_fraction = 0.0;
    std::string transcript_path;
    std::string error;  // non-empty on failure
};

struct BatchSummary {
    std::string config_fingerprint;
    std::vector<SessionOutcome> sessions;
    std::string report_json_path;
    std::string report_md_path;
    int failures = 0;

    bool ok() const { return failures == 0; }
};

/// Runs the full roster for each requested condition with bounded
/// parallelism, writes one transcript per session plus the analysis
/// report, and validates every written transcript against the schema.
BatchSummary run_batch(const RunConfig& config);

/// Re-renders per-session documents and the batch report from a
/// directory of transcript files. Throws Err::SchemaViolation naming the
/// offending file.
void render_reports(const std::string& transcripts_dir, const std::string& output_dir);

/// Loads and schema-validates every *.json transcript in a directory.
std::vector<SessionTranscript> load_transcripts_dir(const std::string& dir);

}  // namespace syntheval
