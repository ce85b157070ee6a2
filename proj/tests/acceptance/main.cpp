// Acceptance suite: one criterion per check, one PASS/FAIL line each.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "support.hpp"
#include "syntheval/analysis.hpp"
#include "syntheval/errors.hpp"
#include "syntheval/mock_target.hpp"
#include "syntheval/protocol.hpp"
#include "syntheval/runner.hpp"

using namespace syntheval;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct AcceptanceFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool condition, const std::string& message) {
    if (!condition) throw AcceptanceFailure(message);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json normalized(json doc) {
    doc["session_id"] = "";
    doc["started_at"] = "";
    doc["ended_at"] = "";
    return doc;
}

RunConfig mock_batch_config(const std::string& output_dir, std::uint64_t seed) {
    RunConfig config;
    config.corpus_path = testsupport::fixture("corpus_demo.jsonl");
    config.mock_gallery_path = testsupport::fixture("gallery_small.json");
    config.filter.type = "cosine_threshold";
    config.filter.threshold = 0.05;
    config.seed = seed;
    config.output_dir = output_dir;
    return config;
}

// ---- criterion 1: retrieval oracle equivalence ------------------------------

void criterion_retrieval_oracle() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1001);
    HashEmbeddingProvider provider("hash-mock-v1", 64, 0);

    for (int round = 0; round < 20; ++round) {
        std::uniform_int_distribution<int> size(20, 200);
        auto corpus = testsupport::make_random_corpus(rng, size(rng), 5, 14);
        const auto pool = testsupport::random_pool(rng, corpus, 6);
        const auto index = build_index(corpus, provider);
        const std::string query = testsupport::random_sentence(rng, 7);

        // independent oracle: own encoding, own cosine, own sort
        const auto query_vec = provider.embed({query})[0].values;
        std::vector<std::pair<std::string, double>> oracle;
        for (const auto& ex : corpus.excerpts) {
            if (!pool.participant_ids.count(ex.participant_id)) continue;
            std::string text;
            for (std::size_t i = 0; i < ex.code_labels.size(); ++i)
                text += (i ? "; " : "") + ex.code_labels[i];
            text += " | " + ex.quote_text;
            oracle.emplace_back(ex.excerpt_id, testsupport::oracle_cosine(
                                                   query_vec, provider.embed({text})[0].values));
        }
        std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (oracle.size() > 8) oracle.resize(8);

        const auto got = retrieve(index, corpus, query, pool, 8, provider);
        expect(got.size() == oracle.size(), "result count mismatch in round " + std::to_string(round));
        for (std::size_t i = 0; i < got.size(); ++i) {
            expect(got[i].excerpt.excerpt_id == oracle[i].first,
                   "rank " + std::to_string(i) + " mismatch in round " + std::to_string(round));
            expect(std::abs(got[i].score - oracle[i].second) < 1e-12,
                   "score mismatch in round " + std::to_string(round));
        }
    }
    expect(seconds_since(start) < 10.0, "retrieval oracle run exceeded 10 s");
}

// ---- criterion 2: pool scoping ----------------------------------------------

void criterion_pool_scoping() {
    std::mt19937_64 rng(2002);
    HashEmbeddingProvider provider("hash-mock-v1", 32, 0);
    int violations = 0;
    for (int round = 0; round < 1000; ++round) {
        std::uniform_int_distribution<int> size(8, 50);
        auto corpus = testsupport::make_random_corpus(rng, size(rng), 4, 10);
        const auto pool = testsupport::random_pool(rng, corpus, 5);
        const auto index = build_index(corpus, provider);
        const auto hits =
            retrieve(index, corpus, testsupport::random_sentence(rng, 5), pool, 8, provider);
        for (const auto& hit : hits)
            if (!pool.participant_ids.count(hit.excerpt.participant_id)) ++violations;
    }
    expect(violations == 0, std::to_string(violations) + " pool-scope violations in 1000 triples");
}

// ---- criterion 3: abstention forcing ----------------------------------------

void criterion_abstention_forcing() {
    const auto corpus = load_corpus(testsupport::fixture("corpus_demo.jsonl"));
    HashEmbeddingProvider embedder("hash-mock-v1", 64, 0);
    const auto index = build_index(corpus, embedder);
    MockChatProvider chat(3);
    RejectAllFilter reject_all;
    auto core = std::make_shared<MockTargetCore>(
        load_mock_gallery_file(testsupport::fixture("gallery_small.json")));
    MockTargetClient target(core);

    SessionEnvironment env;
    env.target = &target;
    env.embedder = &embedder;
    env.chat = &chat;
    env.filter = &reject_all;
    env.corpus = &corpus;
    env.index = &index;

    const auto spec = default_grounded_roster(default_persona_set())[0];
    const auto transcript = run_session(spec, env, ProtocolConfig{});

    expect(transcript.complete, "session did not complete");
    expect(transcript.ranking.has_value(), "no ranking attempt");
    int part123 = 0;
    for (const auto& turn : transcript.turns) {
        if (turn.part == Part::closing) continue;
        ++part123;
        expect(turn.response.abstained, "non-abstained turn despite reject-all filter");
    }
    expect(part123 == 8, "unexpected part1-part3 turn count");
    expect(chat.calls() == 1,
           "chat called " + std::to_string(chat.calls()) + " times; only the ranking call is allowed");
}

// ---- criterion 4: citation soundness -----------------------------------------

void criterion_citation_soundness() {
    std::mt19937_64 rng(4004);
    int misclassified = 0;

    for (int round = 0; round < 500; ++round) {
        // random evidence bundle over P1..P30
        std::uniform_int_distribution<int> pid(1, 30);
        std::uniform_int_distribution<int> n_items(1, 6);
        EvidenceBundle evidence;
        std::set<std::string> present;
        const int items = n_items(rng);
        for (int i = 0; i < items; ++i) {
            const std::string id = "P" + std::to_string(pid(rng));
            present.insert(id);
            ScoredExcerpt scored;
            scored.excerpt = Excerpt{"e" + std::to_string(i), id, {"code1"}, "quote"};
            evidence.items.push_back(scored);
        }

        // scripted response citing a random mix of present and absent ids
        std::vector<std::string> cited_order;
        std::set<std::string> cited_seen;
        std::ostringstream text;
        text << "In my experience";
        const int mentions = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < mentions; ++i) {
            const std::string id = "P" + std::to_string(pid(rng));
            text << " " << testsupport::random_word(rng) << " " << id << ",";
            if (cited_seen.insert(id).second) cited_order.push_back(id);
        }
        text << " done.";

        TurnResponse response;
        response.text = text.str();
        response.citations = extract_citations(response.text);
        expect(response.citations == cited_order, "extraction disagreed with constructed citations");

        const auto report = validate_citations(response, evidence);
        for (const auto& id : cited_order) {
            const bool should_be_valid = present.count(id) > 0;
            const bool in_valid =
                std::find(report.valid.begin(), report.valid.end(), id) != report.valid.end();
            const bool in_invalid =
                std::find(report.invalid.begin(), report.invalid.end(), id) != report.invalid.end();
            if (in_valid == in_invalid) ++misclassified;           // must be in exactly one bucket
            else if (should_be_valid != in_valid) ++misclassified;  // and the right one
        }
        expect(report.valid.size() + report.invalid.size() == cited_order.size(),
               "report lost or invented citations");
    }
    expect(misclassified == 0, std::to_string(misclassified) + " misclassified citations");

    // fabricated ids in an ungrounded turn are recorded and flagged
    MockChatProvider::Script script;
    script.by_needle = {{"workflow", "I heard P4 and P9 say this works."}};
    script.auto_fallback = true;
    MockChatProvider chat(0, script);
    auto core = std::make_shared<MockTargetCore>(
        load_mock_gallery_file(testsupport::fixture("gallery_small.json")));
    MockTargetClient target(core);
    HashEmbeddingProvider embedder("hash-mock-v1", 64, 0);
    SessionEnvironment env;
    env.target = &target;
    env.embedder = &embedder;
    env.chat = &chat;

    const auto transcript = run_session(default_ungrounded_roster()[0], env, ProtocolConfig{});
    expect(transcript.complete, "ungrounded session did not complete");
    const auto& first = transcript.turns[0];
    expect(first.response.citations == std::vector<std::string>{"P4", "P9"},
           "fabricated ids not recorded");
    expect(std::find(first.citation_flags.begin(), first.citation_flags.end(), "fabricated:P4") !=
               first.citation_flags.end(),
           "fabricated:P4 flag missing");
    expect(std::find(first.citation_flags.begin(), first.citation_flags.end(), "fabricated:P9") !=
               first.citation_flags.end(),
           "fabricated:P9 flag missing");
}

// ---- criterion 5: truncation contract ----------------------------------------

void criterion_truncation() {
    std::mt19937_64 rng(5005);
    std::uniform_int_distribution<int> n_words(1, 70);
    std::uniform_int_distribution<int> punct(0, 11);
    const char terminators[] = {'.', '!', '?', ';', '\n'};

    for (int round = 0; round < 10000; ++round) {
        std::string raw;
        const int words = n_words(rng);
        for (int w = 0; w < words; ++w) {
            raw += testsupport::random_word(rng, 1, 12);
            const int p = punct(rng);
            if (p < 4) raw += terminators[p];
            raw += ' ';
        }

        const auto adapted = adapt_text_query(raw);
        const std::string& out = adapted.payload;
        expect(out.size() <= kTextQueryLimit, "output exceeds 120 chars");
        expect(!out.empty(), "output empty");
        expect(adapt_text_query(out).payload == out, "not idempotent");

        // independent first-clause computation
        std::string trimmed = raw;
        trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
        trimmed.erase(trimmed.find_last_not_of(" \t\r\n") + 1);
        std::string clause = trimmed;
        const auto boundary = trimmed.find_first_of(".!?;\n");
        if (boundary != std::string::npos)
            clause = trimmed.substr(0, trimmed[boundary] == '\n' ? boundary : boundary + 1);
        while (!clause.empty() && std::isspace(static_cast<unsigned char>(clause.back())))
            clause.pop_back();

        if (clause.size() <= kTextQueryLimit) {
            expect(out == clause, "output is not the first clause although it fits");
        } else {
            expect(clause.compare(0, out.size(), out) == 0, "output is not a clause prefix");
            expect(std::isspace(static_cast<unsigned char>(clause[out.size()])) != 0,
                   "cut splits a word");
        }
    }
}

// ---- criterion 6: protocol replay determinism ---------------------------------

void criterion_replay_determinism(const fs::path& scratch) {
    const auto start = std::chrono::steady_clock::now();
    const auto dir1 = scratch / "replay1";
    const auto dir2 = scratch / "replay2";
    const auto s1 = run_batch(mock_batch_config(dir1.string(), 99));
    const auto s2 = run_batch(mock_batch_config(dir2.string(), 99));
    expect(s1.ok() && s2.ok(), "replay batches did not complete");
    expect(s1.sessions.size() == 14 && s2.sessions.size() == 14, "expected 7+7 sessions per run");

    int compared = 0;
    for (const auto& entry : fs::directory_iterator(dir1 / "transcripts")) {
        auto doc1 = normalized(json::parse(std::ifstream(entry.path())));
        auto doc2 =
            normalized(json::parse(std::ifstream(dir2 / "transcripts" / entry.path().filename())));
        expect(doc1.dump() == doc2.dump(),
               "transcript diverged: " + entry.path().filename().string());
        ++compared;
    }
    expect(compared == 14, "expected 14 transcript comparisons");
    expect(seconds_since(start) < 60.0, "replay runs exceeded 60 s");
}

// ---- criterion 7: ranking schema ----------------------------------------------

void criterion_ranking_schema(const fs::path& scratch) {
    // every completed session in a batch yields a strict permutation
    const auto transcripts = load_transcripts_dir((scratch / "replay1" / "transcripts").string());
    expect(transcripts.size() == 14, "expected 14 transcripts");
    for (const auto& transcript : transcripts) {
        expect(transcript.complete, "incomplete transcript in batch");
        expect(transcript.ranking && transcript.ranking->is_strict_permutation(),
               "ranking is not a strict permutation");
    }

    // invalid output triggers exactly one corrective re-ask, then succeeds
    {
        MockChatProvider::Script script;
        script.by_turn = {R"({"image":3,"text":3,"specification":1})",
                          R"({"image":2,"text":1,"specification":3})"};
        script.auto_fallback = false;
        MockChatProvider chat(0, script);
        const auto ranking = elicit_ranking(chat, "system", {});
        expect(chat.calls() == 2, "corrective re-ask count wrong");
        expect(ranking.is_strict_permutation(), "re-asked ranking invalid");
    }
    // a second invalid reply fails the session
    {
        MockChatProvider::Script script;
        script.by_turn = {"junk", "more junk"};
        script.auto_fallback = false;
        MockChatProvider chat(0, script);
        bool failed = false;
        try {
            elicit_ranking(chat, "system", {});
        } catch (const EngineError& e) {
            failed = e.code() == Err::RankingParseFailure;
        }
        expect(failed, "RankingParseFailure not raised");
        expect(chat.calls() == 2, "retry policy made the wrong number of calls");
    }
}

// ---- criterion 8: aggregation correctness --------------------------------------

void criterion_aggregation() {
    auto make = [](const std::string& id, int image, int text, int spec) {
        SessionTranscript t;
        t.session_id = id;
        t.evaluator.evaluator_id = id;
        t.evaluator.condition = Condition::grounded;
        t.complete = true;
        ModalityRanking r;
        r.scores[Modality::image] = image;
        r.scores[Modality::text] = text;
        r.scores[Modality::specification] = spec;
        t.ranking = r;
        return t;
    };

    const auto aggregate = aggregate_rankings(
        {make("A", 3, 2, 1), make("B", 2, 3, 1), make("C", 3, 1, 2)});
    expect(std::abs(aggregate.modality_means.at(Modality::image) - 8.0 / 3.0) < 1e-9,
           "image mean != 8/3");
    expect(std::abs(aggregate.modality_means.at(Modality::text) - 2.0) < 1e-9, "text mean != 2");
    expect(std::abs(aggregate.modality_means.at(Modality::specification) - 4.0 / 3.0) < 1e-9,
           "spec mean != 4/3");

    std::mt19937_64 rng(8008);
    std::vector<std::array<int, 3>> perms = {{3, 2, 1}, {3, 1, 2}, {2, 3, 1},
                                             {1, 3, 2}, {2, 1, 3}, {1, 2, 3}};
    for (int round = 0; round < 50; ++round) {
        std::vector<SessionTranscript> transcripts;
        const int n = 1 + static_cast<int>(rng() % 11);
        for (int i = 0; i < n; ++i) {
            const auto& p = perms[rng() % perms.size()];
            transcripts.push_back(make("E" + std::to_string(i), p[0], p[1], p[2]));
        }
        const auto agg = aggregate_rankings(transcripts);
        double sum = 0;
        for (const auto& [m, mean] : agg.modality_means) sum += mean;
        expect(std::abs(sum - 6.0) < 1e-9, "permutation means do not sum to 6");
    }
}

// ---- criterion 9: fixture-scale reproduction of the published comparison -------

void criterion_published_comparison(const fs::path& scratch) {
    const auto ref = ExpertReference::published();
    expect(std::abs(ref.modality_means.at(Modality::image) - 2.29) < 1e-12,
           "reference image mean is not 2.29");
    expect(ref.top_modality == Modality::image, "reference top modality is not image");

    // scripted batch whose rankings place specification highest
    auto config = mock_batch_config((scratch / "spec_high").string(), 17);
    config.chat.mock_script_path = testsupport::fixture("chat_script_spec_high.json");
    const auto summary = run_batch(config);
    expect(summary.ok(), "scripted batch failed");

    const auto transcripts = load_transcripts_dir((scratch / "spec_high" / "transcripts").string());
    std::vector<SessionTranscript> grounded, ungrounded;
    for (const auto& t : transcripts)
        (t.evaluator.condition == Condition::grounded ? grounded : ungrounded).push_back(t);

    for (auto* group : {&grounded, &ungrounded}) {
        const auto aggregate = aggregate_rankings(*group);
        expect(aggregate.modality_means.at(Modality::specification) == 3.0,
               "specification is not ranked highest in the scripted batch");
        expect(compare_orderings(aggregate, ref) == OrderingVerdict::contradicts,
               "comparator failed to report the contradiction");
    }
}

// ---- criterion 10: wire-contract conformance ------------------------------------

void criterion_wire_conformance() {
    auto core_direct = std::make_shared<MockTargetCore>(
        load_mock_gallery_file(testsupport::fixture("gallery_small.json")));
    auto core_served = std::make_shared<MockTargetCore>(
        load_mock_gallery_file(testsupport::fixture("gallery_small.json")));
    MockTargetServer server(core_served);
    httplib::Client http(server.base_url());

    // request suite: gallery + 12 searches across the three modalities
    std::vector<json> searches;
    for (const char* q : {"heatmap hi-c", "coverage track", "variant counts", "ideogram",
                          "gene expression dendrogram", "circos arcs"})
        searches.push_back({{"modality", "text"}, {"query", q}, {"k", 3}});
    for (const char* id : {"g001", "g003", "g005"})
        searches.push_back({{"modality", "image"}, {"query", id}, {"k", 4}});
    for (const char* id : {"g002", "g004", "g006"})
        searches.push_back({{"modality", "specification"}, {"query", id}, {"k", 2}});
    expect(searches.size() == 12, "request suite size");

    const auto direct_gallery = core_direct->handle_gallery();
    const auto served_gallery = http.Get("/gallery");
    expect(static_cast<bool>(served_gallery), "gallery request failed over HTTP");
    expect(direct_gallery.body == served_gallery->body, "gallery bodies differ between modes");

    for (const auto& request : searches) {
        const auto direct = core_direct->handle_search(request.dump());
        const auto served = http.Post("/search", request.dump(), "application/json");
        expect(static_cast<bool>(served), "search request failed over HTTP");
        expect(direct.status == served->status, "search status differs between modes");
        expect(direct.body == served->body, "search bodies differ between modes");
    }

    // the runner-facing clients behave identically against both modes
    MockTargetClient in_process(std::make_shared<MockTargetCore>(
        load_mock_gallery_file(testsupport::fixture("gallery_small.json"))));
    HttpTargetClient over_http(server.base_url(), RetryPolicy{2, 1});

    const auto g1 = in_process.fetch_gallery();
    const auto g2 = over_http.fetch_gallery();
    expect(g1.size() == g2.size(), "client gallery sizes differ");
    for (std::size_t i = 0; i < g1.size(); ++i)
        expect(g1[i].item_id == g2[i].item_id && g1[i].description == g2[i].description &&
                   g1[i].spec_text == g2[i].spec_text,
               "client gallery items differ");

    for (const auto& request : searches) {
        const AdaptedQuery query{modality_from_name(request["modality"].get<std::string>()),
                                 request["query"].get<std::string>()};
        const auto r1 = in_process.search(query, request["k"].get<int>());
        const auto r2 = over_http.search(query, request["k"].get<int>());
        expect(r1.size() == r2.size(), "client result counts differ");
        for (std::size_t i = 0; i < r1.size(); ++i)
            expect(r1[i].description == r2[i].description && r1[i].image_ref == r2[i].image_ref &&
                       r1[i].spec_text == r2[i].spec_text && r1[i].score == r2[i].score,
                   "client results differ");
    }
}

// ---- criterion 11: scale smoke ---------------------------------------------------

void criterion_scale_smoke() {
    const auto start = std::chrono::steady_clock::now();

    const auto corpus = load_corpus(testsupport::fixture("corpus_scale.jsonl"));
    expect(corpus.excerpts.size() == 3270, "scale corpus size");
    expect(corpus.codebook.categories.size() == 31, "scale codebook size");

    HashEmbeddingProvider embedder("hash-mock-v1", 384, 0);
    const auto index = build_index(corpus, embedder);
    expect(index.entries.size() == 3270, "scale index size");

    MockTargetConfig target_config;
    target_config.gallery = testsupport::make_scale_gallery(3200, 50);
    auto core = std::make_shared<MockTargetCore>(std::move(target_config));
    MockTargetClient target(core);
    expect(target.fetch_gallery().size() == 3200, "scale gallery size");

    MockChatProvider chat(11);
    CosineThresholdFilter filter(0.05);
    SessionEnvironment env;
    env.target = &target;
    env.embedder = &embedder;
    env.chat = &chat;
    env.filter = &filter;
    env.corpus = &corpus;
    env.index = &index;

    const auto transcript =
        run_session(default_grounded_roster(default_persona_set())[0], env, ProtocolConfig{});
    expect(transcript.complete, "scale session did not complete: " + transcript.abort_reason);
    expect(transcript.turns.size() == 10, "scale session turn count");

    const double elapsed = seconds_since(start);
    expect(elapsed < 120.0, "scale smoke took " + std::to_string(elapsed) + " s");
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* name;
        std::function<void()> run;
    };

    testsupport::TempDir scratch("syntheval-acceptance");
    const fs::path scratch_path = scratch.path;

    const std::vector<Criterion> criteria = {
        {1, "retrieval-oracle-equivalence", criterion_retrieval_oracle},
        {2, "pool-scoping", criterion_pool_scoping},
        {3, "abstention-forcing", criterion_abstention_forcing},
        {4, "citation-soundness", criterion_citation_soundness},
        {5, "truncation-contract", criterion_truncation},
        {6, "protocol-replay-determinism", [&] { criterion_replay_determinism(scratch_path); }},
        {7, "ranking-schema", [&] { criterion_ranking_schema(scratch_path); }},
        {8, "aggregation-correctness", criterion_aggregation},
        {9, "published-comparison-reproduction", [&] { criterion_published_comparison(scratch_path); }},
        {10, "wire-contract-conformance", criterion_wire_conformance},
        {11, "scale-smoke", criterion_scale_smoke},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.run();
            std::printf("PASS  %2d. %s (%.2fs)\n", criterion.number, criterion.name,
                        seconds_since(start));
        } catch (const std::exception& e) {
            ++failures;
            std::printf("FAIL  %2d. %s: %s\n", criterion.number, criterion.name, e.what());
        }
        std::fflush(stdout);
    }

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all %zu acceptance criteria passed\n", criteria.size());
    return failures == 0 ? 0 : 1;
}
