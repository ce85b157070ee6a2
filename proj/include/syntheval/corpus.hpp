#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace syntheval {

/// One coded interview quote: the atom of grounding evidence.
struct Excerpt {
    std::string excerpt_id;
    std::string participant_id;               // pattern P<digits>, e.g. "P9"
    std::vector<std::string> code_labels;     // >= 1, all present in the codebook, stored order kept
    std::string quote_text;                   // non-empty after trim
};

struct Codebook {
    std::vector<std::string> categories;      // unique, non-empty

    bool contains(const std::string& label) const;
};

struct ParticipantPool {
    std::string persona_id;
    std::set<std::string> participant_ids;    // non-empty, each P<digits>
};

/// Immutable after load; safe for concurrent reads.
struct ExcerptCorpus {
    std::vector<Excerpt> excerpts;
    Codebook codebook;
    std::map<std::string, ParticipantPool> pools;  // persona_id -> pool
};

bool is_participant_id(const std::string& id);

/// Loads and fully validates a corpus bundle (UTF-8 JSON lines: one header
/// record, then one excerpt record per line). Validation is total: any
/// malformed input throws, never returns a partial corpus.
///
/// Throws EngineError with Err::MalformedRecord (message carries line number
/// and field), Err::UnknownCode (label + excerpt_id), Err::EmptyCorpus.
ExcerptCorpus load_corpus(const std::string& path);

/// Inverse of load_corpus on the in-memory representation (round-trip
/// identity). Writes header line, then excerpts in stored order.
void save_corpus(const ExcerptCorpus& corpus, const std::string& path);

/// Excerpts whose participant belongs to the persona's pool, in corpus
/// order. Throws Err::UnknownPersona when no such pool exists.
std::vector<Excerpt> pool_excerpts(const ExcerptCorpus& corpus, const std::string& persona_id);

}  // namespace syntheval
