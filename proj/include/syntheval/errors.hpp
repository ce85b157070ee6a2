#pragma once

#include <stdexcept>
#include <string>

namespace syntheval {

/// Failure codes surfaced by the engine. Each maps to one documented
/// error condition; messages carry the specifics (line numbers, ids).
enum class Err {
    // corpus
    MalformedRecord,
    UnknownCode,
    EmptyCorpus,
    UnknownPersona,
    // retrieval / providers
    DimensionMismatch,
    ZeroVector,
    ProviderUnavailable,
    FingerprintMismatch,
    IndexIncomplete,
    FilterUnavailable,
    // generation
    ConditionMismatch,
    MalformedResponse,
    // target
    TargetUnavailable,
    MalformedGallery,
    MalformedResult,
    EmptyQuery,
    EmptyGallery,
    UnknownItem,
    UnsupportedModality,
    // protocol
    RankingParseFailure,
    // analysis
    MixedConditions,
    EmptyInput,
    UnknownRelation,
    IncompleteTranscript,
    // cli / config
    ConfigInvalid,
    SchemaViolation,
    PortUnavailable,
};

const char* err_name(Err code);

class EngineError : public std::runtime_error {
public:
    EngineError(Err code, const std::string& message)
        : std::runtime_error(std::string(err_name(code)) + ": " + message), code_(code) {}

    Err code() const { return code_; }

private:
    Err code_;
};

/// Transient transport failure (connection refused, simulated outage).
/// Retry loops catch this and convert to TargetUnavailable or
/// ProviderUnavailable once the retry budget is exhausted.
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace syntheval
