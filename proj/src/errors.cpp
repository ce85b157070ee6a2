#include "syntheval/errors.hpp"

namespace syntheval {

const char* err_name(Err code) {
    switch (code) {
        case Err::MalformedRecord: return "MalformedRecord";
        case Err::UnknownCode: return "UnknownCode";
        case Err::EmptyCorpus: return "EmptyCorpus";
        case Err::UnknownPersona: return "UnknownPersona";
        case Err::DimensionMismatch: return "DimensionMismatch";
        case Err::ZeroVector: return "ZeroVector";
        case Err::ProviderUnavailable: return "ProviderUnavailable";
        case Err::FingerprintMismatch: return "FingerprintMismatch";
        case Err::IndexIncomplete: return "IndexIncomplete";
        case Err::FilterUnavailable: return "FilterUnavailable";
        case Err::ConditionMismatch: return "ConditionMismatch";
        case Err::MalformedResponse: return "MalformedResponse";
        case Err::TargetUnavailable: return "TargetUnavailable";
        case Err::MalformedGallery: return "MalformedGallery";
        case Err::MalformedResult: return "MalformedResult";
        case Err::EmptyQuery: return "EmptyQuery";
        case Err::EmptyGallery: return "EmptyGallery";
        case Err::UnknownItem: return "UnknownItem";
        case Err::UnsupportedModality: return "UnsupportedModality";
        case Err::RankingParseFailure: return "RankingParseFailure";
        case Err::MixedConditions: return "MixedConditions";
        case Err::EmptyInput: return "EmptyInput";
        case Err::UnknownRelation: return "UnknownRelation";
        case Err::IncompleteTranscript: return "IncompleteTranscript";
        case Err::ConfigInvalid: return "ConfigInvalid";
        case Err::SchemaViolation: return "SchemaViolation";
        case Err::PortUnavailable: return "PortUnavailable";
    }
    return "UnknownError";
}

}  // namespace syntheval
