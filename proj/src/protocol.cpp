#include "syntheval/protocol.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <sstream>

#include "syntheval/errors.hpp"
#include "syntheval/hashing.hpp"

using nlohmann::json;

namespace syntheval {

namespace {

const char* kPart1Question =
    "To begin: describe your typical workflow when you analyze and visualize genomics data. "
    "Walk through how a task moves from raw data to a figure you would share.";

const char* kPart2QuestionSuffix =
    "React to this description: how would the tool fit into the workflow you described, "
    "and what stands out to you, positively or negatively?";

const char* kClosingQuestion =
    "Final assessment: summarize your overall impression of the tool, its usability, its "
    "usefulness for your work, and anything you would need before adopting it.";

std::string query_generation_question(Modality modality) {
    switch (modality) {
        case Modality::text:
            return "You can now search the tool's collection in text mode. Describe, in your own "
                   "words, one search you would run for your work. Reply with only the query text "
                   "you would type.";
        case Modality::image:
            return "You can now search in image mode, using an existing visualization as the "
                   "query. Describe the visualization you would use as your query image.";
        case Modality::specification:
            return "You can now search in specification mode, using an editable visualization "
                   "specification as the query. Describe the specification you would start from.";
    }
    return "";
}

std::string critique_question(Modality modality, const std::vector<ResultTriplet>& results) {
    std::ostringstream out;
    if (results.empty()) {
        out << "No results were retrieved for " << modality_name(modality)
            << " mode (no query was produced). If your experience still lets you assess this "
               "query mode, do so; otherwise say so.";
        return out.str();
    }
    out << "Your " << modality_name(modality) << " query returned " << results.size()
        << " result(s):\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        out << "\nResult " << (i + 1) << ":\n"
            << "  description: " << results[i].description << "\n"
            << "  image: " << results[i].image_ref << "\n"
            << "  specification: " << results[i].spec_text << "\n";
    }
    out << "\nCritique these results: how relevant are they to what you asked for, and would any "
           "serve as a starting template for your own work?";
    return out.str();
}

std::string ranking_question() {
    std::ostringstream out;
    out << "Considering the whole session, rank the three query modalities by preference: image, "
           "text, and specification. Assign each of the scores 3 (most preferred), 2, and 1 "
           "(least preferred) exactly once, no ties. "
        << kJsonObjectReplyMarker
        << " of the form {\"image\": <score>, \"text\": <score>, \"specification\": <score>, "
           "\"rationale\": \"<short reason>\"}.";
    return out.str();
}

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string new_session_id(const std::string& evaluator_id) {
    static std::atomic<std::uint64_t> counter{0};
    const auto nanos = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now().time_since_epoch())
            .count());
    return evaluator_id + "-" + to_hex(fnv1a64(evaluator_id) ^ nanos ^ (counter.fetch_add(1) << 48));
}

/// Balanced-brace scan, string-aware; returns the first complete JSON
/// object embedded in the text.
std::optional<std::string> first_json_object(const std::string& text) {
    const std::size_t start = text.find('{');
    if (start == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0) return text.substr(start, i - start + 1);
        }
    }
    return std::nullopt;
}

std::optional<ModalityRanking> ranking_from_json(const json& doc) {
    if (!doc.is_object()) return std::nullopt;
    ModalityRanking ranking;
    for (Modality m : {Modality::text, Modality::image, Modality::specification}) {
        const char* key = modality_name(m);
        if (!doc.contains(key) || !doc[key].is_number_integer()) return std::nullopt;
        ranking.scores[m] = doc[key].get<int>();
    }
    ranking.rationale = doc.value("rationale", "");
    if (!ranking.is_strict_permutation()) return std::nullopt;
    return ranking;
}

json evidence_items_to_json(const EvidenceBundle& bundle) {
    json items = json::array();
    for (const auto& scored : bundle.items)
        items.push_back({{"excerpt_id", scored.excerpt.excerpt_id},
                         {"participant_id", scored.excerpt.participant_id},
                         {"codes", scored.excerpt.code_labels},
                         {"quote", scored.excerpt.quote_text},
                         {"score", scored.score}});
    return items;
}

json evaluator_to_json(const EvaluatorSpec& spec) {
    json doc;
    doc["evaluator_id"] = spec.evaluator_id;
    doc["condition"] = condition_name(spec.condition);
    if (spec.variation_note) doc["variation_note"] = *spec.variation_note;
    if (spec.pool_ref) doc["pool_ref"] = *spec.pool_ref;
    if (spec.role_description) doc["role_description"] = *spec.role_description;
    if (spec.profile) {
        const PersonaProfile& p = *spec.profile;
        json profile;
        profile["persona_id"] = p.persona_id;
        profile["position_type"] = p.position_type;
        profile["organisation"] = p.organisation;
        profile["skills"] = p.skills;
        profile["work_focus"] =
            p.work_focus == WorkFocus::biology_first ? "biology_first" : "computation_first";
        profile["automation_level"] = p.automation_level;
        profile["primary_audience"] = p.primary_audience;
        profile["role_mappings"] = p.role_mappings;
        doc["profile"] = profile;
    }
    return doc;
}

EvaluatorSpec evaluator_from_json(const json& doc) {
    EvaluatorSpec spec;
    spec.evaluator_id = doc.at("evaluator_id").get<std::string>();
    spec.condition = condition_from_name(doc.at("condition").get<std::string>());
    if (doc.contains("variation_note")) spec.variation_note = doc["variation_note"].get<std::string>();
    if (doc.contains("pool_ref")) spec.pool_ref = doc["pool_ref"].get<std::string>();
    if (doc.contains("role_description"))
        spec.role_description = doc["role_description"].get<std::string>();
    if (doc.contains("profile")) {
        const json& node = doc["profile"];
        PersonaProfile p;
        p.persona_id = node.at("persona_id").get<std::string>();
        p.position_type = node.value("position_type", "");
        p.organisation = node.value("organisation", "");
        for (const auto& [key, value] : node.at("skills").items()) p.skills[key] = value.get<int>();
        p.work_focus = node.value("work_focus", "biology_first") == std::string("computation_first")
                           ? WorkFocus::computation_first
                           : WorkFocus::biology_first;
        p.automation_level = node.value("automation_level", "");
        p.primary_audience = node.value("primary_audience", "");
        if (node.contains("role_mappings"))
            p.role_mappings = node["role_mappings"].get<std::vector<std::string>>();
        spec.profile = std::move(p);
    }
    return spec;
}

[[noreturn]] void schema_violation(const std::string& source, const std::string& path,
                                   const std::string& detail) {
    throw EngineError(Err::SchemaViolation, source + ": " + path + ": " + detail);
}

}  // namespace

const char* part_name(Part p) {
    switch (p) {
        case Part::part1: return "part1";
        case Part::part2: return "part2";
        case Part::part3: return "part3";
        case Part::closing: return "closing";
    }
    return "part1";
}

Part part_from_name(const std::string& name) {
    if (name == "part1") return Part::part1;
    if (name == "part2") return Part::part2;
    if (name == "part3") return Part::part3;
    if (name == "closing") return Part::closing;
    throw EngineError(Err::SchemaViolation, "unknown part '" + name + "'");
}

const char* turn_kind_name(TurnKind k) {
    switch (k) {
        case TurnKind::workflow: return "workflow";
        case TurnKind::tool_reaction: return "tool_reaction";
        case TurnKind::query_generation: return "query_generation";
        case TurnKind::critique: return "critique";
        case TurnKind::assessment: return "assessment";
        case TurnKind::ranking: return "ranking";
    }
    return "workflow";
}

TurnKind turn_kind_from_name(const std::string& name) {
    if (name == "workflow") return TurnKind::workflow;
    if (name == "tool_reaction") return TurnKind::tool_reaction;
    if (name == "query_generation") return TurnKind::query_generation;
    if (name == "critique") return TurnKind::critique;
    if (name == "assessment") return TurnKind::assessment;
    if (name == "ranking") return TurnKind::ranking;
    throw EngineError(Err::SchemaViolation, "unknown turn kind '" + name + "'");
}

bool ModalityRanking::is_strict_permutation() const {
    if (scores.size() != 3) return false;
    bool seen[4] = {false, false, false, false};
    for (const auto& [modality, score] : scores) {
        (void)modality;
        if (score < 1 || score > 3 || seen[score]) return false;
        seen[score] = true;
    }
    return true;
}

std::string default_tool_description() {
    // Versioned part-2 asset; assets/tool_description.txt ships the same
    // text and a unit test keeps the two in sync.
    return
        "The tool under evaluation is a search engine for genomics data visualizations.\n"
        "It maintains a browsable gallery of visualization examples spanning many chart\n"
        "types and genomics use cases. You can query the collection in three ways:\n"
        "\n"
        "1. Text: type a short free-text query describing the visualization you need.\n"
        "2. Image: supply an existing visualization image; the engine finds similar ones.\n"
        "3. Specification: supply a declarative visualization specification to find\n"
        "   visualizations built from similar specifications.\n"
        "\n"
        "Every search returns ranked results as triplets: a preview image, a text\n"
        "description, and the full specification. Any returned specification can be\n"
        "opened in an integrated editor and adapted to your own data, so results double\n"
        "as editable templates rather than static pictures.\n";
}

std::string protocol_fingerprint(const ProtocolConfig& config) {
    const std::string tool_text =
        config.tool_description.empty() ? default_tool_description() : config.tool_description;
    std::ostringstream canonical;
    canonical << "p1=" << config.turns_part1 << ";p2=" << config.turns_part2
              << ";qpm=" << config.queries_per_modality << ";closing=" << config.closing_assessment_turns
              << ";k_retrieval=" << config.k_retrieval << ";k_results=" << config.k_results
              << ";retry_citations=" << (config.retry_invalid_citations ? 1 : 0)
              << ";modality_order=text,image,specification"
              << ";tool_description_hash=" << to_hex(fnv1a64(tool_text));
    return to_hex(fnv1a64(canonical.str()));
}

std::optional<ModalityRanking> parse_ranking_content(const std::string& content) {
    // 1. the whole reply is JSON
    try {
        if (auto ranking = ranking_from_json(json::parse(content))) return ranking;
    } catch (const json::parse_error&) {
    }
    // 2. a fenced ```json block
    std::size_t fence = content.find("```json");
    if (fence == std::string::npos) fence = content.find("```");
    if (fence != std::string::npos) {
        const std::size_t body_start = content.find('\n', fence);
        if (body_start != std::string::npos) {
            const std::size_t fence_end = content.find("```", body_start);
            if (fence_end != std::string::npos) {
                try {
                    if (auto ranking = ranking_from_json(
                            json::parse(content.substr(body_start, fence_end - body_start))))
                        return ranking;
                } catch (const json::parse_error&) {
                }
            }
        }
    }
    // 3. first balanced JSON object anywhere in the reply
    if (auto object_text = first_json_object(content)) {
        try {
            if (auto ranking = ranking_from_json(json::parse(*object_text))) return ranking;
        } catch (const json::parse_error&) {
        }
    }
    return std::nullopt;
}

ModalityRanking elicit_ranking(ChatProvider& chat, const std::string& system_text,
                               const std::vector<std::pair<std::string, std::string>>& history,
                               std::string* raw_content_out, std::string* question_out) {
    const std::string question = ranking_question();
    if (question_out) *question_out = question;

    std::vector<ChatMessage> messages;
    messages.push_back({"system", system_text});
    for (const auto& [past_question, past_response] : history) {
        messages.push_back({"user", past_question});
        messages.push_back({"assistant", past_response});
    }
    messages.push_back({"user", question});

    std::string content = chat.complete(messages);
    if (raw_content_out) *raw_content_out = content;
    if (auto ranking = parse_ranking_content(content)) return *ranking;

    // One corrective re-ask, then fail.
    messages.push_back({"assistant", content});
    messages.push_back({"user",
                        "That reply was not a valid ranking: each of image, text, and "
                        "specification must get one of the scores 3, 2, 1 with no value repeated. " +
                            std::string(kJsonObjectReplyMarker) +
                            " of the form {\"image\": <score>, \"text\": <score>, "
                            "\"specification\": <score>, \"rationale\": \"<short reason>\"} and "
                            "nothing else."});
    content = chat.complete(messages);
    if (raw_content_out) *raw_content_out = content;
    if (auto ranking = parse_ranking_content(content)) return *ranking;

    throw EngineError(Err::RankingParseFailure,
                      "ranking output invalid after one corrective re-ask");
}

namespace {

class SessionRunner {
public:
    SessionRunner(const EvaluatorSpec& evaluator, const SessionEnvironment& env,
                  const ProtocolConfig& config)
        : evaluator_(evaluator), env_(env), config_(config) {}

    SessionTranscript run() {
        validate_spec(evaluator_);
        grounded_ = evaluator_.condition == Condition::grounded;
        if (!env_.target) throw EngineError(Err::ConfigInvalid, "session requires a target client");
        if (!env_.chat) throw EngineError(Err::ConfigInvalid, "session requires a chat provider");
        if (grounded_) {
            if (!env_.corpus || !env_.index || !env_.filter || !env_.embedder)
                throw EngineError(Err::ConfigInvalid,
                                  "grounded session requires corpus, index, filter, and embedder");
            auto it = env_.corpus->pools.find(*evaluator_.pool_ref);
            if (it == env_.corpus->pools.end())
                throw EngineError(Err::UnknownPersona,
                                  "corpus has no pool for persona '" + *evaluator_.pool_ref + "'");
            pool_ = &it->second;
            if (env_.index->provider_fingerprint != env_.embedder->fingerprint())
                throw EngineError(Err::FingerprintMismatch,
                                  "index fingerprint '" + env_.index->provider_fingerprint +
                                      "' does not match provider '" + env_.embedder->fingerprint() +
                                      "'");
        }

        transcript_.session_id = new_session_id(evaluator_.evaluator_id);
        transcript_.evaluator = evaluator_;
        transcript_.started_at = iso8601_utc_now();
        transcript_.config_fingerprint = config_.config_fingerprint.empty()
                                             ? protocol_fingerprint(config_)
                                             : config_.config_fingerprint;

        try {
            run_parts();
            transcript_.complete = true;
        } catch (const EngineError& e) {
            // Mid-session infrastructure failure: abort with a partial
            // transcript so the batch can report and exclude it.
            transcript_.complete = false;
            transcript_.abort_reason = e.what();
        }
        transcript_.ended_at = iso8601_utc_now();
        return std::move(transcript_);
    }

private:
    void run_parts() {
        for (int i = 0; i < config_.turns_part1; ++i)
            content_turn(Part::part1, TurnKind::workflow, std::nullopt, kPart1Question, std::nullopt,
                         std::nullopt);

        const std::string tool_text =
            config_.tool_description.empty() ? default_tool_description() : config_.tool_description;
        for (int i = 0; i < config_.turns_part2; ++i)
            content_turn(Part::part2, TurnKind::tool_reaction, std::nullopt,
                         "Here is a description of the retrieval tool you are evaluating:\n\n" +
                             tool_text + "\n" + kPart2QuestionSuffix,
                         std::nullopt, std::nullopt);

        // Part 3: gallery orientation, then per modality a query-generation
        // turn, the adapted search, and a critique over what came back.
        const auto gallery = env_.target->fetch_gallery();
        for (Modality modality : kModalityOrder) {
            for (int q = 0; q < config_.queries_per_modality; ++q) {
                const Turn& generation =
                    content_turn(Part::part3, TurnKind::query_generation, modality,
                                 query_generation_question(modality), std::nullopt, std::nullopt);

                std::vector<ResultTriplet> results;
                std::optional<AdaptedQuery> adapted;
                if (!generation.response.abstained) {
                    adapted = modality == Modality::text
                                  ? adapt_text_query(generation.response.text)
                                  : synthesize_reference_query(generation.response.text, gallery,
                                                               *env_.embedder, modality);
                    results = env_.target->search(*adapted, config_.k_results);
                }
                content_turn(Part::part3, TurnKind::critique, modality,
                             critique_question(modality, results), results, adapted);
            }
        }

        for (int i = 0; i < config_.closing_assessment_turns; ++i)
            content_turn(Part::closing, TurnKind::assessment, std::nullopt, kClosingQuestion,
                         std::nullopt, std::nullopt);

        ranking_turn();
    }

    const Turn& content_turn(Part part, TurnKind kind, std::optional<Modality> modality,
                             const std::string& question,
                             std::optional<std::vector<ResultTriplet>> search_results,
                             std::optional<AdaptedQuery> adapted) {
        Turn turn;
        turn.part = part;
        turn.kind = kind;
        turn.modality = modality;
        turn.question = question;
        if (kind == TurnKind::critique) {
            turn.search_results = search_results ? std::move(*search_results)
                                                 : std::vector<ResultTriplet>{};
            turn.adapted_query = std::move(adapted);
        }

        if (grounded_) {
            auto candidates = retrieve(*env_.index, *env_.corpus, question, *pool_,
                                       config_.k_retrieval, *env_.embedder);
            turn.evidence =
                filter_relevance(question, candidates, config_.k_retrieval, *env_.filter);

            if (turn.evidence->items.empty()) {
                // Abstention is engine-enforced: no evidence, no chat call.
                turn.response = abstention_turn();
            } else {
                PromptBundle prompt = compose_prompt(evaluator_, question, turn.evidence, history_);
                turn.response = generate_turn(*env_.chat, prompt);
                if (!turn.response.abstained) review_citations(turn, prompt);
            }
        } else {
            PromptBundle prompt = compose_prompt(evaluator_, question, std::nullopt, history_);
            turn.response = generate_turn(*env_.chat, prompt);
            // Ungrounded turns have no evidence to validate against; any
            // P-ids the model produced are fabrications and get flagged.
            for (const auto& id : turn.response.citations)
                turn.citation_flags.push_back("fabricated:" + id);
        }

        history_.emplace_back(question, turn.response.text);
        transcript_.turns.push_back(std::move(turn));
        return transcript_.turns.back();
    }

    void review_citations(Turn& turn, const PromptBundle& prompt) {
        CitationReport report = validate_citations(turn.response, *turn.evidence);
        if (!report.invalid.empty() && config_.retry_invalid_citations) {
            // Single corrective retry; keep whatever comes back.
            PromptBundle corrective = prompt;
            corrective.history.emplace_back(prompt.question, turn.response.text);
            corrective.question =
                "Some identifiers you cited are not among the evidence excerpts. Rewrite your "
                "answer citing only participants that appear in the evidence above.";
            corrective.evidence = turn.evidence;
            TurnResponse retried = generate_turn(*env_.chat, corrective);
            if (!retried.abstained) {
                turn.response = retried;
                report = validate_citations(turn.response, *turn.evidence);
            }
        }
        for (const auto& id : report.invalid) turn.citation_flags.push_back("invalid:" + id);
        if (report.uncited_claims_flag) turn.citation_flags.push_back("uncited");
        turn.citation_report = std::move(report);
    }

    void ranking_turn() {
        PromptBundle style = compose_prompt(
            evaluator_, "", grounded_ ? std::optional<EvidenceBundle>(EvidenceBundle{}) : std::nullopt,
            {});

        std::string raw;
        std::string question;
        ModalityRanking ranking =
            elicit_ranking(*env_.chat, style.system_text, history_, &raw, &question);

        Turn turn;
        turn.part = Part::closing;
        turn.kind = TurnKind::ranking;
        turn.question = question;
        turn.response.text = raw;
        turn.response.raw_provider_payload = raw;
        if (grounded_) {
            EvidenceBundle placeholder;
            placeholder.query_text = question;
            placeholder.k_requested = 0;
            turn.evidence = std::move(placeholder);
        }
        history_.emplace_back(question, raw);
        transcript_.turns.push_back(std::move(turn));
        transcript_.ranking = std::move(ranking);
    }

    const EvaluatorSpec& evaluator_;
    const SessionEnvironment& env_;
    const ProtocolConfig& config_;
    bool grounded_ = false;
    const ParticipantPool* pool_ = nullptr;
    std::vector<std::pair<std::string, std::string>> history_;
    SessionTranscript transcript_;
};

}  // namespace

SessionTranscript run_session(const EvaluatorSpec& evaluator, const SessionEnvironment& env,
                              const ProtocolConfig& config) {
    return SessionRunner(evaluator, env, config).run();
}

json transcript_to_json(const SessionTranscript& transcript) {
    json doc;
    doc["schema_version"] = transcript.schema_version;
    doc["session_id"] = transcript.session_id;
    doc["evaluator"] = evaluator_to_json(transcript.evaluator);
    doc["condition"] = condition_name(transcript.evaluator.condition);
    doc["config_fingerprint"] = transcript.config_fingerprint;
    doc["started_at"] = transcript.started_at;
    doc["ended_at"] = transcript.ended_at;
    doc["complete"] = transcript.complete;
    if (!transcript.abort_reason.empty()) doc["abort_reason"] = transcript.abort_reason;

    doc["turns"] = json::array();
    for (const auto& turn : transcript.turns) {
        json t;
        t["part"] = part_name(turn.part);
        t["kind"] = turn_kind_name(turn.kind);
        if (turn.modality) t["modality"] = modality_name(*turn.modality);
        t["question"] = turn.question;
        t["response"] = turn.response.text;
        t["raw_provider_payload"] = turn.response.raw_provider_payload;
        t["abstained"] = turn.response.abstained;
        t["citations"] = turn.response.citations;
        if (turn.evidence) {
            t["evidence"] = evidence_items_to_json(*turn.evidence);
            t["k_requested"] = turn.evidence->k_requested;
            t["filtered_out"] = turn.evidence->filtered_out;
        }
        if (turn.adapted_query)
            t["adapted_query"] = {{"modality", modality_name(turn.adapted_query->modality)},
                                  {"payload", turn.adapted_query->payload}};
        if (turn.search_results) {
            json results = json::array();
            for (const auto& triplet : *turn.search_results) {
                json r = {{"image_ref", triplet.image_ref},
                          {"description", triplet.description},
                          {"spec_text", triplet.spec_text}};
                if (triplet.score) r["score"] = *triplet.score;
                results.push_back(std::move(r));
            }
            t["search_results"] = std::move(results);
        }
        if (turn.citation_report)
            t["citation_report"] = {{"valid", turn.citation_report->valid},
                                    {"invalid", turn.citation_report->invalid},
                                    {"uncited_claims_flag", turn.citation_report->uncited_claims_flag}};
        t["citation_flags"] = turn.citation_flags;
        doc["turns"].push_back(std::move(t));
    }

    if (transcript.ranking) {
        json r;
        for (const auto& [modality, score] : transcript.ranking->scores)
            r[modality_name(modality)] = score;
        r["rationale"] = transcript.ranking->rationale;
        doc["ranking"] = std::move(r);
    }
    return doc;
}

SessionTranscript transcript_from_json(const json& doc) {
    SessionTranscript transcript;
    transcript.schema_version = doc.at("schema_version").get<std::string>();
    transcript.session_id = doc.at("session_id").get<std::string>();
    transcript.evaluator = evaluator_from_json(doc.at("evaluator"));
    transcript.config_fingerprint = doc.at("config_fingerprint").get<std::string>();
    transcript.started_at = doc.value("started_at", "");
    transcript.ended_at = doc.value("ended_at", "");
    transcript.complete = doc.at("complete").get<bool>();
    transcript.abort_reason = doc.value("abort_reason", "");

    for (const auto& t : doc.at("turns")) {
        Turn turn;
        turn.part = part_from_name(t.at("part").get<std::string>());
        turn.kind = turn_kind_from_name(t.at("kind").get<std::string>());
        if (t.contains("modality")) turn.modality = modality_from_name(t["modality"].get<std::string>());
        turn.question = t.at("question").get<std::string>();
        turn.response.text = t.at("response").get<std::string>();
        turn.response.raw_provider_payload = t.value("raw_provider_payload", "");
        turn.response.abstained = t.at("abstained").get<bool>();
        turn.response.citations = t.at("citations").get<std::vector<std::string>>();
        if (t.contains("evidence")) {
            EvidenceBundle bundle;
            bundle.query_text = turn.question;
            bundle.k_requested = t.value("k_requested", 0);
            bundle.filtered_out = t.value("filtered_out", 0);
            for (const auto& item : t["evidence"]) {
                ScoredExcerpt scored;
                scored.excerpt.excerpt_id = item.at("excerpt_id").get<std::string>();
                scored.excerpt.participant_id = item.at("participant_id").get<std::string>();
                scored.excerpt.code_labels = item.at("codes").get<std::vector<std::string>>();
                scored.excerpt.quote_text = item.at("quote").get<std::string>();
                scored.score = item.at("score").get<double>();
                bundle.items.push_back(std::move(scored));
            }
            turn.evidence = std::move(bundle);
        }
        if (t.contains("adapted_query"))
            turn.adapted_query =
                AdaptedQuery{modality_from_name(t["adapted_query"].at("modality").get<std::string>()),
                             t["adapted_query"].at("payload").get<std::string>()};
        if (t.contains("search_results")) {
            std::vector<ResultTriplet> results;
            for (const auto& r : t["search_results"]) {
                ResultTriplet triplet;
                triplet.image_ref = r.at("image_ref").get<std::string>();
                triplet.description = r.at("description").get<std::string>();
                triplet.spec_text = r.at("spec_text").get<std::string>();
                if (r.contains("score")) triplet.score = r["score"].get<double>();
                results.push_back(std::move(triplet));
            }
            turn.search_results = std::move(results);
        }
        if (t.contains("citation_report")) {
            CitationReport report;
            report.valid = t["citation_report"].at("valid").get<std::vector<std::string>>();
            report.invalid = t["citation_report"].at("invalid").get<std::vector<std::string>>();
            report.uncited_claims_flag = t["citation_report"].at("uncited_claims_flag").get<bool>();
            turn.citation_report = std::move(report);
        }
        if (t.contains("citation_flags"))
            turn.citation_flags = t["citation_flags"].get<std::vector<std::string>>();
        transcript.turns.push_back(std::move(turn));
    }

    if (doc.contains("ranking")) {
        ModalityRanking ranking;
        for (Modality m : {Modality::text, Modality::image, Modality::specification})
            ranking.scores[m] = doc["ranking"].at(modality_name(m)).get<int>();
        ranking.rationale = doc["ranking"].value("rationale", "");
        transcript.ranking = std::move(ranking);
    }
    return transcript;
}

void validate_transcript_json(const json& doc, const std::string& source_name) {
    auto require = [&](const char* key, const char* type) {
        if (!doc.contains(key)) schema_violation(source_name, key, "missing");
        const json& v = doc[key];
        const std::string t = type;
        if ((t == "string" && !v.is_string()) || (t == "bool" && !v.is_boolean()) ||
            (t == "array" && !v.is_array()) || (t == "object" && !v.is_object()))
            schema_violation(source_name, key, "expected " + t);
    };
    require("schema_version", "string");
    if (doc["schema_version"].get<std::string>() != kTranscriptSchemaVersion)
        schema_violation(source_name, "schema_version",
                         "unsupported version '" + doc["schema_version"].get<std::string>() + "'");
    require("session_id", "string");
    require("evaluator", "object");
    require("condition", "string");
    require("config_fingerprint", "string");
    require("complete", "bool");
    require("turns", "array");

    const std::string condition = doc["condition"].get<std::string>();
    if (condition != "grounded" && condition != "ungrounded")
        schema_violation(source_name, "condition", "must be grounded or ungrounded");
    const bool grounded = condition == "grounded";
    const bool complete = doc["complete"].get<bool>();

    if (!doc["evaluator"].contains("condition") ||
        doc["evaluator"]["condition"].get<std::string>() != condition)
        schema_violation(source_name, "evaluator.condition", "disagrees with top-level condition");

    static const std::map<std::string, int> kPartOrder = {
        {"part1", 0}, {"part2", 1}, {"part3", 2}, {"closing", 3}};
    int last_part = -1;
    bool part_seen[4] = {false, false, false, false};
    int ranking_turns = 0;

    for (std::size_t i = 0; i < doc["turns"].size(); ++i) {
        const json& t = doc["turns"][i];
        const std::string at = "turns[" + std::to_string(i) + "]";
        for (const char* key : {"part", "kind", "question", "response"})
            if (!t.contains(key) || !t[key].is_string())
                schema_violation(source_name, at + "." + key, "missing or not a string");
        if (!t.contains("abstained") || !t["abstained"].is_boolean())
            schema_violation(source_name, at + ".abstained", "missing or not a bool");
        if (!t.contains("citations") || !t["citations"].is_array())
            schema_violation(source_name, at + ".citations", "missing or not an array");

        const std::string part = t["part"].get<std::string>();
        auto part_it = kPartOrder.find(part);
        if (part_it == kPartOrder.end()) schema_violation(source_name, at + ".part", "unknown part");
        if (part_it->second < last_part)
            schema_violation(source_name, at + ".part",
                             "parts must appear in order part1, part2, part3, closing");
        last_part = part_it->second;
        part_seen[part_it->second] = true;

        const std::string kind = t["kind"].get<std::string>();
        static const std::map<std::string, std::string> kKindPart = {
            {"workflow", "part1"},       {"tool_reaction", "part2"}, {"query_generation", "part3"},
            {"critique", "part3"},       {"assessment", "closing"},  {"ranking", "closing"}};
        auto kind_it = kKindPart.find(kind);
        if (kind_it == kKindPart.end()) schema_violation(source_name, at + ".kind", "unknown kind");
        if (kind_it->second != part)
            schema_violation(source_name, at + ".kind", "kind '" + kind + "' not valid in " + part);
        if (kind == "ranking") ++ranking_turns;

        if (t["abstained"].get<bool>()) {
            if (!t["citations"].empty())
                schema_violation(source_name, at, "abstained turn with citations");
            if (t["response"].get<std::string>() != kAbstentionMessage)
                schema_violation(source_name, at, "abstained turn text is not the canonical message");
        }

        if (grounded != t.contains("evidence"))
            schema_violation(source_name, at + ".evidence",
                             grounded ? "grounded turn lacks evidence" : "ungrounded turn has evidence");
        if (t.contains("search_results") && kind != "critique")
            schema_violation(source_name, at + ".search_results", "only critique turns carry results");
    }

    if (complete) {
        for (int p = 0; p < 4; ++p)
            if (!part_seen[p])
                schema_violation(source_name, "turns", "complete transcript missing a part");
        if (ranking_turns != 1)
            schema_violation(source_name, "turns", "complete transcript needs exactly one ranking turn");
        if (!doc.contains("ranking") || !doc["ranking"].is_object())
            schema_violation(source_name, "ranking", "missing on a complete transcript");
        ModalityRanking ranking;
        for (const char* key : {"image", "text", "specification"}) {
            if (!doc["ranking"].contains(key) || !doc["ranking"][key].is_number_integer())
                schema_violation(source_name, std::string("ranking.") + key, "missing integer");
            ranking.scores[modality_from_name(key)] = doc["ranking"][key].get<int>();
        }
        if (!ranking.is_strict_permutation())
            schema_violation(source_name, "ranking", "scores are not a strict permutation of 1..3");
    } else {
        if (!doc.contains("abort_reason") || doc["abort_reason"].get<std::string>().empty())
            schema_violation(source_name, "abort_reason", "incomplete transcript needs a reason");
    }
}

}  // namespace syntheval
