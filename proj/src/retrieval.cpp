#include "syntheval/retrieval.hpp"

#include <algorithm>
#include <sstream>

#include "syntheval/errors.hpp"

namespace syntheval {

std::string encode_excerpt_text(const Excerpt& excerpt) {
    std::ostringstream out;
    for (std::size_t i = 0; i < excerpt.code_labels.size(); ++i) {
        if (i) out << "; ";
        out << excerpt.code_labels[i];
    }
    out << " | " << excerpt.quote_text;
    return out.str();
}

VectorIndex build_index(const ExcerptCorpus& corpus, EmbeddingProvider& provider) {
    VectorIndex index;
    index.provider_fingerprint = provider.fingerprint();

    constexpr std::size_t kBatch = 64;
    std::vector<std::string> inputs;
    std::vector<const Excerpt*> pending;
    auto drain = [&] {
        if (inputs.empty()) return;
        auto vectors = provider.embed(inputs);
        for (std::size_t i = 0; i < pending.size(); ++i)
            index.entries.emplace(pending[i]->excerpt_id, std::move(vectors[i]));
        inputs.clear();
        pending.clear();
    };

    for (const auto& excerpt : corpus.excerpts) {
        inputs.push_back(encode_excerpt_text(excerpt));
        pending.push_back(&excerpt);
        if (inputs.size() >= kBatch) drain();
    }
    drain();
    return index;
}

std::vector<ScoredExcerpt> retrieve(const VectorIndex& index, const ExcerptCorpus& corpus,
                                    const std::string& query, const ParticipantPool& pool, int k,
                                    EmbeddingProvider& provider) {
    if (k < 1) throw EngineError(Err::ConfigInvalid, "retrieve requires k >= 1");
    if (index.provider_fingerprint != provider.fingerprint())
        throw EngineError(Err::FingerprintMismatch, "index built with '" + index.provider_fingerprint +
                                                        "', provider is '" + provider.fingerprint() +
                                                        "'");

    EmbeddingVector query_vec = provider.embed({query})[0];
    bool all_zero = true;
    for (double v : query_vec.values)
        if (v != 0.0) { all_zero = false; break; }
    if (all_zero) throw EngineError(Err::ZeroVector, "query embedded to a zero vector");

    std::vector<ScoredExcerpt> scored;
    for (const auto& excerpt : corpus.excerpts) {
        if (!pool.participant_ids.count(excerpt.participant_id)) continue;
        auto it = index.entries.find(excerpt.excerpt_id);
        if (it == index.entries.end())
            throw EngineError(Err::IndexIncomplete,
                              "index lacks a vector for excerpt '" + excerpt.excerpt_id + "'");
        scored.push_back({excerpt, cosine(query_vec, it->second)});
    }

    std::sort(scored.begin(), scored.end(), [](const ScoredExcerpt& a, const ScoredExcerpt& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.excerpt.excerpt_id < b.excerpt.excerpt_id;
    });
    if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
    return scored;
}

std::vector<ScoredExcerpt> retrieve(const VectorIndex& index, const ExcerptCorpus& corpus,
                                    const std::string& query, const std::string& persona_id, int k,
                                    EmbeddingProvider& provider) {
    auto it = corpus.pools.find(persona_id);
    if (it == corpus.pools.end())
        throw EngineError(Err::UnknownPersona, "no participant pool for persona '" + persona_id + "'");
    return retrieve(index, corpus, query, it->second, k, provider);
}

std::string CosineThresholdFilter::name() const {
    std::ostringstream out;
    out << "cosine_threshold(" << threshold_ << ")";
    return out.str();
}

bool LlmRelevanceFilter::accepts(const std::string& question, const ScoredExcerpt& candidate) {
    std::vector<ChatMessage> messages;
    messages.push_back({"system",
                        "You judge whether an interview excerpt is relevant to a question. " +
                            std::string(kYesNoReplyMarker) + "."});
    messages.push_back({"user", "Question: " + question + "\n\nExcerpt (" +
                                    candidate.excerpt.participant_id + "): \"" +
                                    candidate.excerpt.quote_text + "\"\n\nIs this excerpt relevant? " +
                                    kYesNoReplyMarker + "."});
    std::string reply;
    try {
        reply = provider_.complete(messages);
    } catch (const EngineError& e) {
        throw EngineError(Err::FilterUnavailable,
                          std::string("relevance filter provider failed: ") + e.what());
    }
    auto pos = reply.find_first_not_of(" \t\r\n");
    if (pos == std::string::npos)
        throw EngineError(Err::FilterUnavailable, "relevance filter returned empty output");
    return reply.compare(pos, 3, "YES") == 0 || reply.compare(pos, 3, "Yes") == 0 ||
           reply.compare(pos, 3, "yes") == 0;
}

EvidenceBundle filter_relevance(const std::string& question,
                                const std::vector<ScoredExcerpt>& candidates, int k_requested,
                                RelevanceFilter& filter) {
    EvidenceBundle bundle;
    bundle.query_text = question;
    bundle.k_requested = k_requested;
    for (const auto& candidate : candidates) {
        if (filter.accepts(question, candidate))
            bundle.items.push_back(candidate);
        else
            ++bundle.filtered_out;
    }
    return bundle;
}

}  // namespace syntheval
