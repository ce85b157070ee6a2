#include <csignal>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "syntheval/analysis.hpp"
#include "syntheval/corpus.hpp"
#include "syntheval/errors.hpp"
#include "syntheval/mock_providers.hpp"
#include "syntheval/mock_target.hpp"
#include "syntheval/runner.hpp"

using nlohmann::json;
using namespace syntheval;

namespace {

int cmd_run(const std::string& config_path, const json& overrides) {
    json doc = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "cannot open config: " << config_path << "\n";
            return 2;
        }
        in >> doc;
    }
    // CLI flags override config-file fields.
    for (const auto& [key, value] : overrides.items()) doc[key] = value;

    RunConfig config = parse_run_config(doc);
    BatchSummary summary = run_batch(config);

    std::cout << "config fingerprint: " << summary.config_fingerprint << "\n";
    for (const auto& outcome : summary.sessions) {
        std::cout << (outcome.error.empty() ? "ok    " : "FAIL  ") << condition_name(outcome.condition)
                  << "/" << outcome.evaluator_id;
        if (!outcome.session_id.empty()) std::cout << "  session=" << outcome.session_id;
        if (outcome.error.empty())
            std::cout << "  abstained=" << outcome.abstained_fraction;
        else
            std::cout << "  error: " << outcome.error;
        std::cout << "\n";
    }
    std::cout << summary.sessions.size() - summary.failures << "/" << summary.sessions.size()
              << " sessions completed\n"
              << "report: " << summary.report_json_path << "\n";
    return summary.ok() ? 0 : 1;
}

int cmd_validate(const std::string& corpus_path, const std::string& transcripts_path) {
    if (!corpus_path.empty()) {
        ExcerptCorpus corpus = load_corpus(corpus_path);
        std::cout << "corpus ok: " << corpus.excerpts.size() << " excerpts, "
                  << corpus.codebook.categories.size() << " codes, " << corpus.pools.size()
                  << " pools\n";
    }
    if (!transcripts_path.empty()) {
        auto transcripts = load_transcripts_dir(transcripts_path);
        std::cout << "transcripts ok: " << transcripts.size() << " validated\n";
    }
    return 0;
}

int cmd_report(const std::string& transcripts_dir, const std::string& output_dir) {
    render_reports(transcripts_dir, output_dir);
    std::cout << "reports written to " << output_dir << "\n";
    return 0;
}

int cmd_mock_serve(const std::string& gallery_path, const std::string& host, int port,
                   bool with_providers, std::size_t dimension, std::uint64_t seed, int latency_ms,
                   std::optional<int> fail_after) {
    MockTargetConfig config = load_mock_gallery_file(gallery_path);
    config.latency_ms = latency_ms;
    config.fail_after = fail_after;
    auto core = std::make_shared<MockTargetCore>(std::move(config));
    MockTargetServer server(core, host, port);
    std::cout << "mock target listening on " << server.base_url() << std::endl;

    std::unique_ptr<MockProviderServer> providers;
    if (with_providers) {
        providers = std::make_unique<MockProviderServer>(
            std::make_shared<HashEmbeddingProvider>("mock-embed-v1", dimension, seed),
            std::make_shared<MockChatProvider>(seed), host, 0);
        std::cout << "mock providers listening on " << providers->base_url() << std::endl;
    }

    std::cout << "press Ctrl-C to stop" << std::endl;
    static volatile std::sig_atomic_t stop_requested = 0;
    std::signal(SIGINT, [](int) { stop_requested = 1; });
    std::signal(SIGTERM, [](int) { stop_requested = 1; });
    while (!stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic persona evaluation engine"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run a batch of evaluation sessions");
    std::string config_path;
    run->add_option("--config", config_path, "JSON config file (flags override it)");
    std::string corpus_path, output_dir, mock_gallery, target_endpoint, variation, profiles, themes;
    std::vector<std::string> conditions;
    std::optional<std::uint64_t> seed;
    std::optional<int> k_retrieval, k_results, parallelism;
    run->add_option("--corpus", corpus_path, "corpus bundle (JSON lines)");
    run->add_option("--output-dir", output_dir, "output directory");
    run->add_option("--mock-gallery", mock_gallery, "gallery JSON for the in-process mock target");
    run->add_option("--target-endpoint", target_endpoint, "base URL of a live target service");
    run->add_option("--variation", variation, "variation-override file");
    run->add_option("--profiles", profiles, "persona profile file");
    run->add_option("--themes", themes, "coded theme-alignment entries");
    run->add_option("--conditions", conditions, "conditions to run (grounded, ungrounded)")
        ->delimiter(',');
    run->add_option("--seed", seed, "seed for mock providers and tie-breaking");
    run->add_option("--k-retrieval", k_retrieval, "excerpts retrieved per question");
    run->add_option("--k-results", k_results, "search results per query");
    run->add_option("--parallelism", parallelism, "concurrent sessions");

    // validate
    auto* validate = app.add_subcommand("validate", "validate a corpus and/or transcripts");
    std::string v_corpus, v_transcripts;
    validate->add_option("--corpus", v_corpus, "corpus bundle to validate");
    validate->add_option("--transcripts", v_transcripts, "transcript directory to validate");

    // report
    auto* report = app.add_subcommand("report", "render session and batch reports");
    std::string r_transcripts, r_output = "reports";
    report->add_option("--transcripts", r_transcripts, "transcript directory")->required();
    report->add_option("--output-dir", r_output, "output directory");

    // mock-serve
    auto* serve = app.add_subcommand("mock-serve", "serve the mock target over HTTP");
    std::string s_gallery, s_host = "127.0.0.1";
    int s_port = 8099;
    bool s_providers = false;
    std::size_t s_dimension = 64;
    std::uint64_t s_seed = 0;
    int s_latency = 0;
    std::optional<int> s_fail_after;
    serve->add_option("--gallery", s_gallery, "gallery JSON file")->required();
    serve->add_option("--host", s_host, "bind host");
    serve->add_option("--port", s_port, "bind port (0 = any free port)");
    serve->add_flag("--with-providers", s_providers, "also serve mock /embed and /chat");
    serve->add_option("--dimension", s_dimension, "mock embedding dimension");
    serve->add_option("--seed", s_seed, "mock provider seed");
    serve->add_option("--latency-ms", s_latency, "per-request latency");
    serve->add_option("--fail-after", s_fail_after, "requests served before a simulated outage");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            json overrides = json::object();
            if (!corpus_path.empty()) overrides["corpus"] = corpus_path;
            if (!output_dir.empty()) overrides["output_dir"] = output_dir;
            if (!mock_gallery.empty()) overrides["target"] = {{"mock_gallery", mock_gallery}};
            if (!target_endpoint.empty()) overrides["target"] = {{"endpoint", target_endpoint}};
            if (!variation.empty()) overrides["variation"] = variation;
            if (!profiles.empty()) overrides["profiles"] = profiles;
            if (!themes.empty()) overrides["themes"] = themes;
            if (!conditions.empty()) overrides["conditions"] = conditions;
            if (seed) overrides["seed"] = *seed;
            if (k_retrieval) overrides["k_retrieval"] = *k_retrieval;
            if (k_results) overrides["k_results"] = *k_results;
            if (parallelism) overrides["parallelism"] = *parallelism;
            return cmd_run(config_path, overrides);
        }
        if (validate->parsed()) {
            if (v_corpus.empty() && v_transcripts.empty()) {
                std::cerr << "validate: pass --corpus and/or --transcripts\n";
                return 2;
            }
            return cmd_validate(v_corpus, v_transcripts);
        }
        if (report->parsed()) return cmd_report(r_transcripts, r_output);
        if (serve->parsed())
            return cmd_mock_serve(s_gallery, s_host, s_port, s_providers, s_dimension, s_seed,
                                  s_latency, s_fail_after);
    } catch (const EngineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
