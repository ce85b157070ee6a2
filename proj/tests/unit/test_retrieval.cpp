#include <algorithm>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "syntheval/errors.hpp"
#include "syntheval/retrieval.hpp"

using namespace syntheval;

namespace {

Excerpt make_excerpt(const std::string& id, const std::string& participant,
                     std::vector<std::string> codes, const std::string& quote) {
    return Excerpt{id, participant, std::move(codes), quote};
}

ScoredExcerpt scored(const std::string& id, double score) {
    ScoredExcerpt s;
    s.excerpt = make_excerpt(id, "P1", {"code1"}, "quote " + id);
    s.score = score;
    return s;
}

// Brute-force pool-scoped top-k, independent of retrieve(): encodes
// excerpts itself, scores with the oracle cosine, sorts its own way.
std::vector<std::pair<std::string, double>> brute_force_topk(const ExcerptCorpus& corpus,
                                                             const ParticipantPool& pool,
                                                             const std::string& query, int k,
                                                             EmbeddingProvider& provider) {
    const auto query_vec = provider.embed({query})[0].values;
    std::vector<std::pair<std::string, double>> all;
    for (const auto& ex : corpus.excerpts) {
        if (!pool.participant_ids.count(ex.participant_id)) continue;
        std::string text;
        for (std::size_t i = 0; i < ex.code_labels.size(); ++i)
            text += (i ? "; " : "") + ex.code_labels[i];
        text += " | " + ex.quote_text;
        all.emplace_back(ex.excerpt_id, testsupport::oracle_cosine(query_vec, provider.embed({text})[0].values));
    }
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (all.size() > static_cast<std::size_t>(k)) all.resize(static_cast<std::size_t>(k));
    return all;
}

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("excerpt encoding joins codes then quote with fixed separators") {
    const auto ex = make_excerpt("e1", "P9", {"Tools", "Challenges"}, "I use IGV daily");
    CHECK(encode_excerpt_text(ex) == "Tools; Challenges | I use IGV daily");

    const auto single = make_excerpt("e2", "P9", {"Tools"}, "short");
    CHECK(encode_excerpt_text(single) == "Tools | short");

    CHECK(encode_excerpt_text(ex) == encode_excerpt_text(ex));
}

TEST_CASE("cosine analytic values") {
    const EmbeddingVector ex{{1.0, 0.0}};
    const EmbeddingVector ey{{0.0, 1.0}};
    const EmbeddingVector diag{{1.0, 1.0}};
    CHECK(cosine(ex, ex) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine(ex, ey) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cosine(diag, ex) == doctest::Approx(0.70710678).epsilon(1e-9));
}

TEST_CASE("cosine error cases") {
    const EmbeddingVector a{{1.0, 0.0}};
    const EmbeddingVector b{{1.0, 0.0, 0.0}};
    const EmbeddingVector zero{{0.0, 0.0}};
    try {
        cosine(a, b);
        FAIL("expected DimensionMismatch");
    } catch (const EngineError& e) {
        CHECK(e.code() == Err::DimensionMismatch);
    }
    try {
        cosine(a, zero);
        FAIL("expected ZeroVector");
    } catch (const EngineError& e) {
        CHECK(e.code() == Err::ZeroVector);
    }
}

TEST_CASE("cosine symmetry and self-similarity over random vectors") {
    HashEmbeddingProvider provider("sym-test", 32, 5);
    std::mt19937_64 rng(99);
    for (int i = 0; i < 50; ++i) {
        const auto a = provider.embed_one(testsupport::random_word(rng));
        const auto b = provider.embed_one(testsupport::random_word(rng));
        CHECK(cosine(a, b) == doctest::Approx(cosine(b, a)).epsilon(1e-12));
        CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(cosine(a, b) >= -1.0 - 1e-9);
        CHECK(cosine(a, b) <= 1.0 + 1e-9);
    }
}

TEST_CASE("hash embedder is deterministic with unit vectors of the declared dimension") {
    HashEmbeddingProvider a("hash-mock-v1", 48, 3);
    HashEmbeddingProvider b("hash-mock-v1", 48, 3);
    const auto va = a.embed({"same input"})[0];
    const auto vb = b.embed({"same input"})[0];
    REQUIRE(va.dimension() == 48);
    CHECK(va.values == vb.values);  // bit-identical

    double norm = 0;
    for (double v : va.values) norm += v * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(a.embed({"other input"})[0].values != va.values);
    HashEmbeddingProvider other_seed("hash-mock-v1", 48, 4);
    CHECK(other_seed.embed({"same input"})[0].values != va.values);
    CHECK(a.fingerprint() == "hash-mock-v1:48");
}

TEST_CASE("build_index embeds every excerpt and records the fingerprint") {
    const auto corpus = load_corpus(testsupport::fixture("corpus_minimal.jsonl"));
    HashEmbeddingProvider provider("hash-mock-v1", 32, 0);
    const auto index = build_index(corpus, provider);
    CHECK(index.entries.size() == 3);
    CHECK(index.provider_fingerprint == "hash-mock-v1:32");

    const auto again = build_index(corpus, provider);
    for (const auto& [id, vec] : index.entries) CHECK(again.entries.at(id).values == vec.values);
}

TEST_CASE("retrieve returns the whole pool when it has fewer than k excerpts") {
    const auto corpus = load_corpus(testsupport::fixture("corpus_minimal.jsonl"));
    HashEmbeddingProvider provider("hash-mock-v1", 32, 0);
    const auto index = build_index(corpus, provider);
    const auto hits = retrieve(index, corpus, "anything", std::string("computational_biologist"), 5,
                               provider);
    CHECK(hits.size() == 2);  // pool {P5,P6} covers two excerpts
}

TEST_CASE("retrieve matches the brute-force oracle on a 50-excerpt corpus") {
    std::mt19937_64 rng(2024);
    auto corpus = testsupport::make_random_corpus(rng, 50, 4, 8);
    auto pool = testsupport::random_pool(rng, corpus, 5);

    HashEmbeddingProvider provider("hash-mock-v1", 64, 1);
    const auto index = build_index(corpus, provider);
    const std::string query = testsupport::random_sentence(rng, 6);

    const auto got = retrieve(index, corpus, query, pool, 8, provider);
    const auto expected = brute_force_topk(corpus, pool, query, 8, provider);

    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].excerpt.excerpt_id == expected[i].first);
        CHECK(got[i].score == doctest::Approx(expected[i].second).epsilon(1e-12));
    }
}

TEST_CASE("query identical to an encoded excerpt ranks it first with score 1") {
    const auto corpus = load_corpus(testsupport::fixture("corpus_minimal.jsonl"));
    HashEmbeddingProvider provider("hash-mock-v1", 64, 0);
    const auto index = build_index(corpus, provider);

    const auto hits = retrieve(index, corpus, encode_excerpt_text(corpus.excerpts[0]),
                               std::string("computational_biologist"), 2, provider);
    REQUIRE(!hits.empty());
    CHECK(hits[0].excerpt.excerpt_id == "e001");
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exact ties break by excerpt_id ascending") {
    // identical codes + quote embed identically, so scores tie exactly
    ExcerptCorpus corpus;
    corpus.codebook.categories = {"code1"};
    corpus.excerpts.push_back(make_excerpt("b", "P1", {"code1"}, "same text"));
    corpus.excerpts.push_back(make_excerpt("a", "P1", {"code1"}, "same text"));
    corpus.excerpts.push_back(make_excerpt("c", "P1", {"code1"}, "same text"));
    ParticipantPool pool{"p", {"P1"}};

    HashEmbeddingProvider provider("hash-mock-v1", 32, 0);
    const auto index = build_index(corpus, provider);
    const auto hits = retrieve(index, corpus, "whatever", pool, 3, provider);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].excerpt.excerpt_id == "a");
    CHECK(hits[1].excerpt.excerpt_id == "b");
    CHECK(hits[2].excerpt.excerpt_id == "c");
}

TEST_CASE("provider swap is detected by fingerprint") {
    const auto corpus = load_corpus(testsupport::fixture("corpus_minimal.jsonl"));
    HashEmbeddingProvider narrow("hash-mock-v1", 32, 0);
    HashEmbeddingProvider wide("hash-mock-v1", 64, 0);
    const auto index = build_index(corpus, narrow);
    try {
        retrieve(index, corpus, "q", std::string("computational_biologist"), 3, wide);
        FAIL("expected FingerprintMismatch");
    } catch (const EngineError& e) {
        CHECK(e.code() == Err::FingerprintMismatch);
    }
}

TEST_CASE("pool scoping holds over random pools") {
    std::mt19937_64 rng(31337);
    HashEmbeddingProvider provider("hash-mock-v1", 32, 0);
    for (int round = 0; round < 25; ++round) {
        auto corpus = testsupport::make_random_corpus(rng, 40, 3, 9);
        const auto pool = testsupport::random_pool(rng, corpus, 4);
        const auto index = build_index(corpus, provider);
        const auto hits =
            retrieve(index, corpus, testsupport::random_sentence(rng, 5), pool, 8, provider);
        for (const auto& hit : hits) CHECK(pool.participant_ids.count(hit.excerpt.participant_id) == 1);
    }
}

TEST_CASE("filter_relevance keeps order and counts rejections") {
    std::vector<ScoredExcerpt> candidates{scored("a", 0.9), scored("b", 0.4), scored("c", 0.2)};

    SUBCASE("accept-all is the identity") {
        AcceptAllFilter accept;
        const auto bundle = filter_relevance("q", candidates, 8, accept);
        REQUIRE(bundle.items.size() == 3);
        CHECK(bundle.filtered_out == 0);
        CHECK(bundle.k_requested == 8);
        CHECK(bundle.query_text == "q");
        CHECK_FALSE(bundle.empty());
    }
    SUBCASE("reject-all yields the legal empty bundle") {
        RejectAllFilter reject;
        const auto bundle = filter_relevance("q", candidates, 8, reject);
        CHECK(bundle.items.empty());
        CHECK(bundle.empty());
        CHECK(bundle.filtered_out == 3);
    }
    SUBCASE("threshold 0.35 keeps 0.9 and 0.4, drops 0.2") {
        CosineThresholdFilter threshold(0.35);
        const auto bundle = filter_relevance("q", candidates, 8, threshold);
        REQUIRE(bundle.items.size() == 2);
        CHECK(bundle.items[0].excerpt.excerpt_id == "a");
        CHECK(bundle.items[1].excerpt.excerpt_id == "b");
        CHECK(bundle.filtered_out == 1);
    }
    SUBCASE("survivors are never reordered") {
        CosineThresholdFilter threshold(0.0);
        const auto bundle = filter_relevance("q", candidates, 8, threshold);
        for (std::size_t i = 1; i < bundle.items.size(); ++i)
            CHECK(bundle.items[i - 1].score >= bundle.items[i].score);
    }
}

TEST_CASE("llm filter parses YES/NO and reports infrastructure failure distinctly") {
    MockChatProvider::Script script;
    script.by_turn = {"YES", "no thanks", "NO"};
    script.auto_fallback = false;
    MockChatProvider chat(0, script);
    LlmRelevanceFilter filter(chat);

    const auto candidate = scored("a", 0.5);
    CHECK(filter.accepts("q", candidate));        // "YES"
    CHECK_FALSE(filter.accepts("q", candidate));  // "no thanks" -> lowercase no prefix? treated as no
    CHECK_FALSE(filter.accepts("q", candidate));  // "NO"

    // exhausted script with auto disabled -> FilterUnavailable, not empty
    try {
        filter.accepts("q", candidate);
        FAIL("expected FilterUnavailable");
    } catch (const EngineError& e) {
        CHECK(e.code() == Err::FilterUnavailable);
    }
}

TEST_CASE("caching provider returns identical vectors and hits on re-embed") {
    testsupport::TempDir dir("embcache");
    const std::string cache_path = dir.file("cache.json");
    auto inner = std::make_shared<HashEmbeddingProvider>("hash-mock-v1", 32, 0);
    {
        CachingEmbeddingProvider caching(inner, cache_path);
        const auto first = caching.embed({"alpha", "beta"});
        const auto second = caching.embed({"beta", "alpha"});
        CHECK(second[0].values == first[1].values);
        CHECK(second[1].values == first[0].values);
        CHECK(caching.hit_count() == 2);
        caching.flush();
    }
    // a fresh instance reads the persisted cache
    CachingEmbeddingProvider reloaded(inner, cache_path);
    const auto vec = reloaded.embed({"alpha"});
    CHECK(reloaded.hit_count() == 1);
    CHECK(vec[0].values == inner->embed_one("alpha").values);
}

}  // TEST_SUITE
