#include "syntheval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "syntheval/analysis.hpp"
#include "syntheval/errors.hpp"
#include "syntheval/hashing.hpp"
#include "syntheval/mock_target.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace syntheval {

namespace {

std::string read_text_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw EngineError(Err::ConfigInvalid, std::string("cannot open ") + what + ": " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string env_token(const std::string& var) {
    if (var.empty()) return "";
    const char* value = std::getenv(var.c_str());
    return value ? value : "";
}

ProviderConfig parse_provider(const json& node, const ProviderConfig& defaults) {
    ProviderConfig config = defaults;
    if (node.contains("mock")) config.mock = node["mock"].get<bool>();
    if (node.contains("endpoint")) {
        config.endpoint = node["endpoint"].get<std::string>();
        if (!node.contains("mock")) config.mock = false;
    }
    if (node.contains("model")) config.model_id = node["model"].get<std::string>();
    if (node.contains("dimension")) config.mock_dimension = node["dimension"].get<std::size_t>();
    if (node.contains("script")) config.mock_script_path = node["script"].get<std::string>();
    if (node.contains("api_key_env")) config.api_key_env = node["api_key_env"].get<std::string>();
    return config;
}

struct SessionJob {
    EvaluatorSpec spec;
};

}  // namespace

std::string RunConfig::fingerprint() const {
    // nlohmann objects serialize with sorted keys, so the dump is a
    // canonical form.
    json canonical;
    canonical["corpus_path"] = corpus_path;
    canonical["variation"] = variation_path.value_or("");
    canonical["profiles"] = profiles_path.value_or("");
    canonical["target_endpoint"] = target_endpoint.value_or("");
    canonical["mock_gallery"] = mock_gallery_path.value_or("");
    canonical["embed"] = {{"mock", embed.mock},
                          {"endpoint", embed.endpoint},
                          {"model", embed.model_id},
                          {"dimension", embed.mock_dimension}};
    canonical["chat"] = {{"mock", chat.mock},
                         {"endpoint", chat.endpoint},
                         {"model", chat.model_id},
                         {"script", chat.mock_script_path}};
    canonical["filter"] = {{"type", filter.type}, {"threshold", filter.threshold}};
    canonical["seed"] = seed;
    canonical["k_retrieval"] = k_retrieval;
    canonical["k_results"] = k_results;
    canonical["turns"] = {{"part1", turns_part1},
                          {"part2", turns_part2},
                          {"queries_per_modality", queries_per_modality},
                          {"closing", closing_assessment_turns}};
    json names = json::array();
    for (Condition c : conditions) names.push_back(condition_name(c));
    canonical["conditions"] = names;
    canonical["ungrounded_role"] = ungrounded_role;
    canonical["retry_invalid_citations"] = retry_invalid_citations;

    const std::string tool_text = tool_description_path
                                      ? read_text_file(*tool_description_path, "tool description")
                                      : default_tool_description();
    canonical["tool_description_hash"] = to_hex(fnv1a64(tool_text));
    if (variation_path)
        canonical["variation_hash"] = to_hex(fnv1a64(read_text_file(*variation_path, "variation file")));
    if (profiles_path)
        canonical["profiles_hash"] = to_hex(fnv1a64(read_text_file(*profiles_path, "profiles file")));

    return to_hex(fnv1a64(canonical.dump()));
}

RunConfig parse_run_config(const json& doc) {
    RunConfig config;
    if (doc.contains("corpus")) config.corpus_path = doc["corpus"].get<std::string>();
    if (doc.contains("variation")) config.variation_path = doc["variation"].get<std::string>();
    if (doc.contains("profiles")) config.profiles_path = doc["profiles"].get<std::string>();
    if (doc.contains("target")) {
        const json& target = doc["target"];
        if (target.contains("endpoint")) config.target_endpoint = target["endpoint"].get<std::string>();
        if (target.contains("mock_gallery"))
            config.mock_gallery_path = target["mock_gallery"].get<std::string>();
    }
    if (doc.contains("providers")) {
        const json& providers = doc["providers"];
        if (providers.contains("embed")) config.embed = parse_provider(providers["embed"], config.embed);
        if (providers.contains("chat")) config.chat = parse_provider(providers["chat"], config.chat);
    }
    if (doc.contains("filter")) {
        if (doc["filter"].contains("type")) config.filter.type = doc["filter"]["type"].get<std::string>();
        if (doc["filter"].contains("threshold"))
            config.filter.threshold = doc["filter"]["threshold"].get<double>();
    }
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("k_retrieval")) config.k_retrieval = doc["k_retrieval"].get<int>();
    if (doc.contains("k_results")) config.k_results = doc["k_results"].get<int>();
    if (doc.contains("turns")) {
        const json& turns = doc["turns"];
        if (turns.contains("part1")) config.turns_part1 = turns["part1"].get<int>();
        if (turns.contains("part2")) config.turns_part2 = turns["part2"].get<int>();
        if (turns.contains("queries_per_modality"))
            config.queries_per_modality = turns["queries_per_modality"].get<int>();
        if (turns.contains("closing")) config.closing_assessment_turns = turns["closing"].get<int>();
    }
    if (doc.contains("conditions")) {
        config.conditions.clear();
        for (const auto& name : doc["conditions"])
            config.conditions.push_back(condition_from_name(name.get<std::string>()));
    }
    if (doc.contains("output_dir")) config.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("ungrounded_role")) config.ungrounded_role = doc["ungrounded_role"].get<std::string>();
    if (doc.contains("parallelism")) config.parallelism = doc["parallelism"].get<int>();
    if (doc.contains("retry_invalid_citations"))
        config.retry_invalid_citations = doc["retry_invalid_citations"].get<bool>();
    if (doc.contains("tool_description"))
        config.tool_description_path = doc["tool_description"].get<std::string>();
    if (doc.contains("embedding_cache"))
        config.embedding_cache_path = doc["embedding_cache"].get<std::string>();
    if (doc.contains("themes")) config.themes_path = doc["themes"].get<std::string>();
    return config;
}

RunConfig load_run_config(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path, "config"));
    } catch (const json::parse_error& e) {
        throw EngineError(Err::ConfigInvalid, "config " + path + ": " + e.what());
    }
    return parse_run_config(doc);
}

void validate_run_config(const RunConfig& config) {
    if (config.conditions.empty())
        throw EngineError(Err::ConfigInvalid, "no conditions requested");
    const bool wants_grounded =
        std::find(config.conditions.begin(), config.conditions.end(), Condition::grounded) !=
        config.conditions.end();
    if (wants_grounded && config.corpus_path.empty())
        throw EngineError(Err::ConfigInvalid, "grounded condition requires a corpus path");
    if (!config.target_endpoint && !config.mock_gallery_path)
        throw EngineError(Err::ConfigInvalid, "configure either target.endpoint or target.mock_gallery");
    if (config.target_endpoint && config.mock_gallery_path)
        throw EngineError(Err::ConfigInvalid, "target.endpoint and target.mock_gallery are exclusive");
    if (config.k_retrieval < 1 || config.k_results < 1)
        throw EngineError(Err::ConfigInvalid, "k_retrieval and k_results must be >= 1");
    if (config.turns_part1 < 1 || config.turns_part2 < 1 || config.queries_per_modality < 1 ||
        config.closing_assessment_turns < 1)
        throw EngineError(Err::ConfigInvalid, "turn budgets must be >= 1");
    if (config.parallelism < 1)
        throw EngineError(Err::ConfigInvalid, "parallelism must be >= 1");
    if (config.output_dir.empty())
        throw EngineError(Err::ConfigInvalid, "output_dir must be set");
    const std::string& ft = config.filter.type;
    if (ft != "accept_all" && ft != "reject_all" && ft != "cosine_threshold" && ft != "llm")
        throw EngineError(Err::ConfigInvalid, "unknown filter type '" + ft + "'");
}

BatchSummary run_batch(const RunConfig& config) {
    validate_run_config(config);

    BatchSummary summary;
    summary.config_fingerprint = config.fingerprint();

    // Shared immutable state and providers.
    std::shared_ptr<EmbeddingProvider> embedder;
    if (config.embed.mock) {
        embedder = std::make_shared<HashEmbeddingProvider>("mock-embed-v1", config.embed.mock_dimension,
                                                           config.seed);
    } else {
        embedder = std::make_shared<HttpEmbeddingProvider>(config.embed.endpoint, config.embed.model_id,
                                                           2, 100, env_token(config.embed.api_key_env));
    }
    // Persist embeddings beside the corpus for http providers; the mock is
    // cheaper than the cache itself.
    std::string cache_path;
    if (config.embedding_cache_path)
        cache_path = *config.embedding_cache_path;
    else if (!config.embed.mock && !config.corpus_path.empty())
        cache_path = config.corpus_path + ".embcache.json";
    if (!cache_path.empty()) embedder = std::make_shared<CachingEmbeddingProvider>(embedder, cache_path);

    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<MockChatProvider> mock_chat;
    if (config.chat.mock) {
        MockChatProvider::Script script;
        if (!config.chat.mock_script_path.empty())
            script = MockChatProvider::script_from_file(config.chat.mock_script_path);
        mock_chat = std::make_shared<MockChatProvider>(config.seed, std::move(script));
        chat = mock_chat;
    } else {
        chat = std::make_shared<HttpChatProvider>(config.chat.endpoint, config.chat.model_id,
                                                  config.seed, 2, 100,
                                                  env_token(config.chat.api_key_env));
    }

    std::unique_ptr<RelevanceFilter> filter;
    if (config.filter.type == "accept_all") filter = std::make_unique<AcceptAllFilter>();
    else if (config.filter.type == "reject_all") filter = std::make_unique<RejectAllFilter>();
    else if (config.filter.type == "llm") filter = std::make_unique<LlmRelevanceFilter>(*chat);
    else filter = std::make_unique<CosineThresholdFilter>(config.filter.threshold);

    std::shared_ptr<MockTargetCore> mock_core;
    std::unique_ptr<TargetClient> target;
    if (config.mock_gallery_path) {
        mock_core = std::make_shared<MockTargetCore>(load_mock_gallery_file(*config.mock_gallery_path));
        target = std::make_unique<MockTargetClient>(mock_core);
    } else {
        target = std::make_unique<HttpTargetClient>(*config.target_endpoint);
    }

    const bool wants_grounded =
        std::find(config.conditions.begin(), config.conditions.end(), Condition::grounded) !=
        config.conditions.end();

    std::optional<ExcerptCorpus> corpus;
    std::optional<VectorIndex> index;
    if (wants_grounded) {
        corpus = load_corpus(config.corpus_path);
        index = build_index(*corpus, *embedder);
    }

    // Rosters per requested condition, in config order.
    std::vector<SessionJob> jobs;
    for (Condition condition : config.conditions) {
        std::vector<EvaluatorSpec> roster;
        if (condition == Condition::grounded) {
            PersonaSet personas = config.profiles_path ? load_persona_set(*config.profiles_path)
                                                       : default_persona_set();
            roster = default_grounded_roster(personas);
            if (config.variation_path) apply_variation_overrides_file(roster, *config.variation_path);
        } else {
            roster = default_ungrounded_roster(config.ungrounded_role);
        }
        for (auto& spec : roster) jobs.push_back({std::move(spec)});
    }

    ProtocolConfig protocol;
    protocol.turns_part1 = config.turns_part1;
    protocol.turns_part2 = config.turns_part2;
    protocol.queries_per_modality = config.queries_per_modality;
    protocol.closing_assessment_turns = config.closing_assessment_turns;
    protocol.k_retrieval = config.k_retrieval;
    protocol.k_results = config.k_results;
    if (config.tool_description_path)
        protocol.tool_description = read_text_file(*config.tool_description_path, "tool description");
    protocol.retry_invalid_citations = config.retry_invalid_citations;
    protocol.config_fingerprint = summary.config_fingerprint;

    SessionEnvironment env;
    env.target = target.get();
    env.embedder = embedder.get();
    env.chat = chat.get();
    env.filter = filter.get();
    env.corpus = corpus ? &*corpus : nullptr;
    env.index = index ? &*index : nullptr;

    // Bounded parallelism; sessions are independent and deterministic, so
    // completion order cannot affect transcript or report content.
    std::vector<SessionTranscript> transcripts(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                transcripts[i] = run_session(jobs[i].spec, env, protocol);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const int threads =
        std::max(1, std::min<int>(config.parallelism, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // Write transcripts (stable names: <condition>_<evaluator>.json).
    const fs::path out_root(config.output_dir);
    const fs::path transcripts_dir = out_root / "transcripts";
    const fs::path sessions_dir = out_root / "sessions";
    fs::create_directories(transcripts_dir);
    fs::create_directories(sessions_dir);

    std::vector<SessionTranscript> written;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        SessionOutcome outcome;
        outcome.evaluator_id = jobs[i].spec.evaluator_id;
        outcome.condition = jobs[i].spec.condition;
        if (!errors[i].empty()) {
            outcome.error = errors[i];
            ++summary.failures;
            summary.sessions.push_back(std::move(outcome));
            continue;
        }

        const SessionTranscript& transcript = transcripts[i];
        outcome.session_id = transcript.session_id;
        outcome.complete = transcript.complete;
        outcome.abstained_fraction = abstention_stats(transcript).fraction();
        if (!transcript.complete) {
            outcome.error = transcript.abort_reason;
            ++summary.failures;
        }

        const std::string name = std::string(condition_name(jobs[i].spec.condition)) + "_" +
                                 jobs[i].spec.evaluator_id + ".json";
        const fs::path path = transcripts_dir / name;
        json doc = transcript_to_json(transcript);
        validate_transcript_json(doc, name);
        std::ofstream out(path);
        out << doc.dump(2) << "\n";
        outcome.transcript_path = path.string();

        std::ofstream md(sessions_dir / (std::string(condition_name(jobs[i].spec.condition)) + "_" +
                                         jobs[i].spec.evaluator_id + ".md"));
        md << render_session_markdown(transcript);

        written.push_back(transcript);
        summary.sessions.push_back(std::move(outcome));
    }

    // Batch report over everything that ran, complete or not.
    const auto ref = ExpertReference::published();
    std::optional<AlignmentSummary> themes;
    if (config.themes_path) themes = align_themes_file(*config.themes_path, ref);
    json report = build_batch_report(written, ref, themes);
    report["config_fingerprint"] = summary.config_fingerprint;

    const fs::path report_json = out_root / "report.json";
    const fs::path report_md = out_root / "report.md";
    {
        std::ofstream out(report_json);
        out << report.dump(2) << "\n";
    }
    {
        std::ofstream out(report_md);
        out << render_report_markdown(report);
    }
    summary.report_json_path = report_json.string();
    summary.report_md_path = report_md.string();

    if (auto* caching = dynamic_cast<CachingEmbeddingProvider*>(embedder.get())) caching->flush();
    return summary;
}

std::vector<SessionTranscript> load_transcripts_dir(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw EngineError(Err::ConfigInvalid, "not a directory: " + dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<SessionTranscript> transcripts;
    for (const auto& path : files) {
        json doc;
        try {
            doc = json::parse(read_text_file(path.string(), "transcript"));
        } catch (const json::parse_error& e) {
            throw EngineError(Err::SchemaViolation, path.string() + ": " + e.what());
        }
        validate_transcript_json(doc, path.string());
        transcripts.push_back(transcript_from_json(doc));
    }
    return transcripts;
}

void render_reports(const std::string& transcripts_dir, const std::string& output_dir) {
    const auto transcripts = load_transcripts_dir(transcripts_dir);
    if (transcripts.empty())
        throw EngineError(Err::EmptyInput, "no transcripts in " + transcripts_dir);

    const fs::path out_root(output_dir);
    const fs::path sessions_dir = out_root / "sessions";
    fs::create_directories(sessions_dir);

    std::vector<SessionTranscript> complete;
    for (const auto& transcript : transcripts) {
        std::ofstream md(sessions_dir /
                         (std::string(condition_name(transcript.evaluator.condition)) + "_" +
                          transcript.evaluator.evaluator_id + ".md"));
        md << render_session_markdown(transcript);
        complete.push_back(transcript);
    }

    json report = build_batch_report(complete, ExpertReference::published(), std::nullopt);
    {
        std::ofstream out(out_root / "report.json");
        out << report.dump(2) << "\n";
    }
    {
        std::ofstream out(out_root / "report.md");
        out << render_report_markdown(report);
    }
}

}  // namespace syntheval
