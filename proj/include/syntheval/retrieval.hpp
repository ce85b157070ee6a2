#pragma once

#include <map>
#include <string>
#include <vector>

#include "syntheval/chat.hpp"
#include "syntheval/corpus.hpp"
#include "syntheval/embedding.hpp"

namespace syntheval {

/// What gets embedded for an excerpt: code labels joined by "; ", then
/// " | ", then the quote. Fixed so embeddings are reproducible.
std::string encode_excerpt_text(const Excerpt& excerpt);

/// One vector per excerpt, all from the same provider. Immutable once
/// built; retrieval is pure against it.
struct VectorIndex {
    std::map<std::string, EmbeddingVector> entries;  // excerpt_id -> vector
    std::string provider_fingerprint;
};

/// Embeds every excerpt (batched). Throws Err::ProviderUnavailable or
/// Err::DimensionMismatch from the provider.
VectorIndex build_index(const ExcerptCorpus& corpus, EmbeddingProvider& provider);

struct ScoredExcerpt {
    Excerpt excerpt;
    double score = 0.0;  // cosine similarity of query and excerpt vectors
};

/// Exact pool-scoped top-k: embeds the query with the index's provider,
/// scans excerpts whose participant is in the pool, returns the k highest
/// by cosine (descending), ties broken by excerpt_id ascending. Fewer
/// than k come back only when the pool has fewer excerpts.
std::vector<ScoredExcerpt> retrieve(const VectorIndex& index, const ExcerptCorpus& corpus,
                                    const std::string& query, const ParticipantPool& pool, int k,
                                    EmbeddingProvider& provider);

/// Convenience overload resolving the pool by persona id
/// (Err::UnknownPersona when absent).
std::vector<ScoredExcerpt> retrieve(const VectorIndex& index, const ExcerptCorpus& corpus,
                                    const std::string& query, const std::string& persona_id, int k,
                                    EmbeddingProvider& provider);

/// Retrieved-and-filtered evidence for one question. An empty bundle is a
/// legal value and means the evaluator must abstain.
struct EvidenceBundle {
    std::string query_text;
    std::vector<ScoredExcerpt> items;  // sorted by score descending
    int k_requested = 0;
    int filtered_out = 0;

    bool empty() const { return items.empty(); }
};

/// Second-stage relevance check applied to retrieved candidates before
/// generation. Implementations see the (question, excerpt) pair.
class RelevanceFilter {
public:
    virtual ~RelevanceFilter() = default;

    virtual std::string name() const = 0;
    /// Throws Err::FilterUnavailable on infrastructure failure — never
    /// signal that as an empty result.
    virtual bool accepts(const std::string& question, const ScoredExcerpt& candidate) = 0;
};

class AcceptAllFilter : public RelevanceFilter {
public:
    std::string name() const override { return "accept_all"; }
    bool accepts(const std::string&, const ScoredExcerpt&) override { return true; }
};

class RejectAllFilter : public RelevanceFilter {
public:
    std::string name() const override { return "reject_all"; }
    bool accepts(const std::string&, const ScoredExcerpt&) override { return false; }
};

/// Deterministic offline filter: keep candidates scoring at or above the
/// threshold.
class CosineThresholdFilter : public RelevanceFilter {
public:
    explicit CosineThresholdFilter(double threshold = 0.30) : threshold_(threshold) {}

    std::string name() const override;
    bool accepts(const std::string&, const ScoredExcerpt& candidate) override {
        return candidate.score >= threshold_;
    }

private:
    double threshold_;
};

/// Two-model variant: a chat model answers YES/NO per (question, excerpt).
class LlmRelevanceFilter : public RelevanceFilter {
public:
    explicit LlmRelevanceFilter(ChatProvider& provider) : provider_(provider) {}

    std::string name() const override { return "llm"; }
    bool accepts(const std::string& question, const ScoredExcerpt& candidate) override;

private:
    ChatProvider& provider_;
};

/// Applies the filter without reordering survivors; filtered_out counts
/// rejections. candidates must already be sorted descending.
EvidenceBundle filter_relevance(const std::string& question,
                                const std::vector<ScoredExcerpt>& candidates, int k_requested,
                                RelevanceFilter& filter);

}  // namespace syntheval
