#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "json.hpp"
#include "syntheval/analysis.hpp"
#include "syntheval/errors.hpp"
#include "syntheval/mock_target.hpp"
#include "syntheval/protocol.hpp"
#include "syntheval/runner.hpp"

namespace py = pybind11;
using namespace syntheval;

namespace {

// The extension keeps conversions thin: structured results cross the
// boundary as JSON strings, scalars and lists as native types.

std::string run_mock_session_json(const std::string& corpus_path, const std::string& gallery_path,
                                  const std::string& evaluator_id, const std::string& condition,
                                  std::uint64_t seed, int k_retrieval, int k_results,
                                  double filter_threshold) {
    std::vector<EvaluatorSpec> roster = condition == "grounded"
                                            ? default_grounded_roster(default_persona_set())
                                            : default_ungrounded_roster();
    const EvaluatorSpec* chosen = nullptr;
    for (const auto& spec : roster)
        if (spec.evaluator_id == evaluator_id) chosen = &spec;
    if (!chosen)
        throw EngineError(Err::ConfigInvalid,
                          "no evaluator '" + evaluator_id + "' in the " + condition + " roster");

    HashEmbeddingProvider embedder("mock-embed-v1", 64, seed);
    MockChatProvider chat(seed);
    CosineThresholdFilter filter(filter_threshold);
    auto core = std::make_shared<MockTargetCore>(load_mock_gallery_file(gallery_path));
    MockTargetClient target(core);

    std::optional<ExcerptCorpus> corpus;
    std::optional<VectorIndex> index;
    SessionEnvironment env;
    env.target = &target;
    env.embedder = &embedder;
    env.chat = &chat;
    env.filter = &filter;
    if (condition == "grounded") {
        corpus = load_corpus(corpus_path);
        index = build_index(*corpus, embedder);
        env.corpus = &*corpus;
        env.index = &*index;
    }

    ProtocolConfig config;
    config.k_retrieval = k_retrieval;
    config.k_results = k_results;
    return transcript_to_json(run_session(*chosen, env, config)).dump();
}

std::string aggregate_transcripts_json(const std::vector<std::string>& transcript_docs) {
    std::vector<SessionTranscript> transcripts;
    for (const auto& text : transcript_docs)
        transcripts.push_back(transcript_from_json(nlohmann::json::parse(text)));
    const auto aggregate = aggregate_rankings(transcripts);
    const auto verdict = compare_orderings(aggregate, ExpertReference::published());

    nlohmann::json out;
    out["condition"] = study_condition_name(aggregate.condition);
    out["n"] = aggregate.n;
    for (const auto& [modality, mean] : aggregate.modality_means)
        out["modality_means"][modality_name(modality)] = mean;
    out["verdict_vs_expert"] = ordering_verdict_name(verdict);
    return out.dump();
}

py::dict roster_entry(const EvaluatorSpec& spec) {
    py::dict entry;
    entry["evaluator_id"] = spec.evaluator_id;
    entry["condition"] = condition_name(spec.condition);
    if (spec.pool_ref) entry["pool_ref"] = *spec.pool_ref;
    if (spec.variation_note) entry["variation_note"] = *spec.variation_note;
    if (spec.role_description) entry["role_description"] = *spec.role_description;
    if (spec.profile) entry["skills"] = spec.profile->skills;
    return entry;
}

}  // namespace

PYBIND11_MODULE(syntheval, m) {
    m.doc() = "synthetic persona evaluation engine (core operations)";

    py::register_exception<EngineError>(m, "EngineError");

    // corpus
    py::class_<ExcerptCorpus>(m, "Corpus")
        .def_property_readonly("excerpt_count",
                               [](const ExcerptCorpus& c) { return c.excerpts.size(); })
        .def_property_readonly("codebook",
                               [](const ExcerptCorpus& c) { return c.codebook.categories; })
        .def_property_readonly("pools",
                               [](const ExcerptCorpus& c) {
                                   py::dict pools;
                                   for (const auto& [persona, pool] : c.pools)
                                       pools[py::str(persona)] =
                                           std::vector<std::string>(pool.participant_ids.begin(),
                                                                    pool.participant_ids.end());
                                   return pools;
                               })
        .def("pool_excerpt_ids", [](const ExcerptCorpus& c, const std::string& persona_id) {
            std::vector<std::string> ids;
            for (const auto& ex : pool_excerpts(c, persona_id)) ids.push_back(ex.excerpt_id);
            return ids;
        });

    m.def("load_corpus", &load_corpus, py::arg("path"));
    m.def("encode_excerpt", [](const std::vector<std::string>& codes, const std::string& quote) {
        return encode_excerpt_text(Excerpt{"", "", codes, quote});
    });

    // retrieval primitives
    m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine(EmbeddingVector{a}, EmbeddingVector{b});
    });
    m.def("embed", [](const std::string& text, std::size_t dimension, std::uint64_t seed) {
        return HashEmbeddingProvider("mock-embed-v1", dimension, seed).embed_one(text).values;
    }, py::arg("text"), py::arg("dimension") = 64, py::arg("seed") = 0);

    // target adaptation
    m.def("adapt_text_query", [](const std::string& raw) { return adapt_text_query(raw).payload; });

    // generation primitives
    m.def("extract_citations", &extract_citations);
    m.def("abstention_message", [] { return std::string(kAbstentionMessage); });

    // rosters
    m.def("default_grounded_roster", [] {
        py::list roster;
        for (const auto& spec : default_grounded_roster(default_persona_set()))
            roster.append(roster_entry(spec));
        return roster;
    });
    m.def("default_ungrounded_roster", [] {
        py::list roster;
        for (const auto& spec : default_ungrounded_roster()) roster.append(roster_entry(spec));
        return roster;
    });

    // protocol + analysis over JSON strings
    m.def("run_mock_session", &run_mock_session_json, py::arg("corpus_path"),
          py::arg("gallery_path"), py::arg("evaluator_id"), py::arg("condition"),
          py::arg("seed") = 0, py::arg("k_retrieval") = 8, py::arg("k_results") = 3,
          py::arg("filter_threshold") = 0.05);
    m.def("validate_transcript", [](const std::string& doc, const std::string& name) {
        validate_transcript_json(nlohmann::json::parse(doc), name);
    }, py::arg("transcript_json"), py::arg("source_name") = "transcript");
    m.def("aggregate_transcripts", &aggregate_transcripts_json, py::arg("transcript_docs"));
}
