#include "syntheval/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "syntheval/errors.hpp"

using nlohmann::json;

namespace syntheval {

namespace {

const Modality kModalities[3] = {Modality::image, Modality::text, Modality::specification};

std::string fmt_mean(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << value;
    return out.str();
}

}  // namespace

const char* study_condition_name(StudyCondition c) {
    switch (c) {
        case StudyCondition::grounded: return "grounded";
        case StudyCondition::ungrounded: return "ungrounded";
        case StudyCondition::expert: return "expert";
    }
    return "grounded";
}

StudyCondition study_condition_from_name(const std::string& name) {
    if (name == "grounded") return StudyCondition::grounded;
    if (name == "ungrounded") return StudyCondition::ungrounded;
    if (name == "expert") return StudyCondition::expert;
    throw EngineError(Err::ConfigInvalid, "unknown study condition '" + name + "'");
}

ExpertReference ExpertReference::published() {
    ExpertReference ref;
    ref.themes = {
        "usability-and-usefulness",        "modality-preference-rationale",
        "balancing-variety-and-similarity", "gallery-browsing-for-orientation",
        "onboarding-and-user-intent",
    };
    // Only the published image mean exists; text/spec means were not
    // released and stay absent rather than being fabricated.
    ref.modality_means[Modality::image] = 2.29;
    ref.top_modality = Modality::image;
    return ref;
}

ConditionAggregate aggregate_rankings(const std::vector<SessionTranscript>& transcripts) {
    if (transcripts.empty())
        throw EngineError(Err::EmptyInput, "aggregate_rankings needs at least one transcript");

    ConditionAggregate aggregate;
    aggregate.condition = transcripts.front().evaluator.condition == Condition::grounded
                              ? StudyCondition::grounded
                              : StudyCondition::ungrounded;

    std::map<Modality, long> sums;
    for (const auto& transcript : transcripts) {
        const auto condition = transcript.evaluator.condition == Condition::grounded
                                   ? StudyCondition::grounded
                                   : StudyCondition::ungrounded;
        if (condition != aggregate.condition)
            throw EngineError(Err::MixedConditions,
                              "transcript '" + transcript.session_id + "' is " +
                                  condition_name(transcript.evaluator.condition) +
                                  ", expected " + study_condition_name(aggregate.condition));
        if (!transcript.complete || !transcript.ranking)
            throw EngineError(Err::IncompleteTranscript,
                              "transcript '" + transcript.session_id + "' is incomplete");

        for (const auto& [modality, score] : transcript.ranking->scores) sums[modality] += score;
        aggregate.per_evaluator[transcript.evaluator.evaluator_id] = *transcript.ranking;
        ++aggregate.n;
    }

    for (Modality m : kModalities)
        aggregate.modality_means[m] = static_cast<double>(sums[m]) / aggregate.n;
    return aggregate;
}

const char* ordering_verdict_name(OrderingVerdict v) {
    switch (v) {
        case OrderingVerdict::agrees: return "agrees";
        case OrderingVerdict::contradicts: return "contradicts";
        case OrderingVerdict::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

OrderingVerdict compare_orderings(const ConditionAggregate& aggregate, const ExpertReference& ref) {
    if (aggregate.modality_means.empty())
        throw EngineError(Err::EmptyInput, "aggregate has no modality means");

    Modality best = Modality::image;
    double best_mean = -1.0;
    bool tie = false;
    for (const auto& [modality, mean] : aggregate.modality_means) {
        if (mean > best_mean) {
            best_mean = mean;
            best = modality;
            tie = false;
        } else if (mean == best_mean) {
            tie = true;
        }
    }
    if (tie) return OrderingVerdict::indeterminate;
    return best == ref.top_modality ? OrderingVerdict::agrees : OrderingVerdict::contradicts;
}

const char* theme_relation_name(ThemeRelation r) {
    switch (r) {
        case ThemeRelation::match: return "match";
        case ThemeRelation::extend: return "extend";
        case ThemeRelation::outside: return "outside";
        case ThemeRelation::contradict: return "contradict";
    }
    return "match";
}

ThemeRelation theme_relation_from_name(const std::string& name) {
    if (name == "match") return ThemeRelation::match;
    if (name == "extend") return ThemeRelation::extend;
    if (name == "outside") return ThemeRelation::outside;
    if (name == "contradict") return ThemeRelation::contradict;
    throw EngineError(Err::UnknownRelation, "relation '" + name +
                                                "' is not one of match/extend/outside/contradict");
}

AlignmentEntry parse_alignment_entry(const json& node) {
    AlignmentEntry entry;
    entry.theme = node.at("theme").get<std::string>();
    entry.condition = study_condition_from_name(node.at("condition").get<std::string>());
    entry.relation = theme_relation_from_name(node.at("relation").get<std::string>());
    entry.notes = node.value("notes", "");
    entry.novel = node.value("novel", false);
    return entry;
}

AlignmentSummary align_themes(const std::vector<AlignmentEntry>& coded, const ExpertReference& ref) {
    AlignmentSummary summary;
    for (const auto& entry : coded) {
        const bool known =
            std::find(ref.themes.begin(), ref.themes.end(), entry.theme) != ref.themes.end();
        if (!known && !entry.novel)
            throw EngineError(Err::ConfigInvalid,
                              "theme '" + entry.theme +
                                  "' is not a reference theme; mark it novel or fix the label");
        AlignmentEntry validated = entry;
        validated.novel = !known;
        summary.entries.push_back(std::move(validated));
    }

    for (StudyCondition condition : {StudyCondition::grounded, StudyCondition::ungrounded}) {
        std::vector<std::string> missing;
        for (const auto& theme : ref.themes) {
            const bool covered = std::any_of(
                summary.entries.begin(), summary.entries.end(), [&](const AlignmentEntry& e) {
                    return e.condition == condition && e.theme == theme;
                });
            if (!covered) missing.push_back(theme);
        }
        summary.missing_by_condition[study_condition_name(condition)] = std::move(missing);
    }
    return summary;
}

AlignmentSummary align_themes_file(const std::string& path, const ExpertReference& ref) {
    std::ifstream in(path);
    if (!in) throw EngineError(Err::ConfigInvalid, "cannot open themes file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw EngineError(Err::ConfigInvalid, std::string("themes file: ") + e.what());
    }
    std::vector<AlignmentEntry> entries;
    for (const auto& node : doc.at("entries")) entries.push_back(parse_alignment_entry(node));
    return align_themes(entries, ref);
}

AbstentionStats abstention_stats(const SessionTranscript& transcript) {
    AbstentionStats stats;
    for (const auto& turn : transcript.turns) {
        if (turn.kind == TurnKind::ranking) continue;  // elicitation, not a content claim
        ++stats.content_turns;
        if (turn.response.abstained) ++stats.abstained;
    }
    return stats;
}

CitationTally citation_tally(const SessionTranscript& transcript) {
    CitationTally tally;
    for (const auto& turn : transcript.turns) {
        if (turn.citation_report) {
            tally.valid += static_cast<int>(turn.citation_report->valid.size());
            tally.invalid += static_cast<int>(turn.citation_report->invalid.size());
            if (turn.citation_report->uncited_claims_flag) ++tally.uncited_turns;
        }
        for (const auto& flag : turn.citation_flags)
            if (flag.rfind("fabricated:", 0) == 0) ++tally.fabricated;
    }
    return tally;
}

json build_batch_report(const std::vector<SessionTranscript>& transcripts,
                        const ExpertReference& ref, const std::optional<AlignmentSummary>& themes) {
    json report;
    report["schema_version"] = "syntheval-report-v1";

    json expert;
    expert["top_modality"] = modality_name(ref.top_modality);
    expert["themes"] = ref.themes;
    json expert_means = json::object();
    for (const auto& [modality, mean] : ref.modality_means) expert_means[modality_name(modality)] = mean;
    expert["modality_means"] = expert_means;
    report["expert_reference"] = expert;

    json sessions = json::array();
    std::vector<std::string> excluded;
    std::map<Condition, std::vector<SessionTranscript>> by_condition;
    for (const auto& transcript : transcripts) {
        const auto abst = abstention_stats(transcript);
        const auto cite = citation_tally(transcript);
        json s;
        s["session_id"] = transcript.session_id;
        s["evaluator_id"] = transcript.evaluator.evaluator_id;
        s["condition"] = condition_name(transcript.evaluator.condition);
        s["complete"] = transcript.complete;
        if (!transcript.abort_reason.empty()) s["abort_reason"] = transcript.abort_reason;
        s["content_turns"] = abst.content_turns;
        s["abstained_turns"] = abst.abstained;
        s["abstained_fraction"] = abst.fraction();
        s["citations"] = {{"valid", cite.valid},
                          {"invalid", cite.invalid},
                          {"fabricated", cite.fabricated},
                          {"uncited_turns", cite.uncited_turns}};
        if (transcript.ranking) {
            json r;
            for (const auto& [modality, score] : transcript.ranking->scores)
                r[modality_name(modality)] = score;
            s["ranking"] = r;
        }
        sessions.push_back(std::move(s));

        if (transcript.complete)
            by_condition[transcript.evaluator.condition].push_back(transcript);
        else
            excluded.push_back(transcript.session_id);
    }
    report["sessions"] = std::move(sessions);
    report["excluded_incomplete"] = excluded;

    json conditions = json::object();
    for (const auto& [condition, group] : by_condition) {
        const auto aggregate = aggregate_rankings(group);
        json c;
        c["n"] = aggregate.n;
        json means = json::object();
        for (const auto& [modality, mean] : aggregate.modality_means)
            means[modality_name(modality)] = mean;
        c["modality_means"] = means;
        json per = json::object();
        for (const auto& [evaluator_id, ranking] : aggregate.per_evaluator) {
            json r;
            for (const auto& [modality, score] : ranking.scores) r[modality_name(modality)] = score;
            per[evaluator_id] = r;
        }
        c["per_evaluator"] = per;
        c["verdict_vs_expert"] = ordering_verdict_name(compare_orderings(aggregate, ref));

        int content_turns = 0, abstained = 0;
        CitationTally tally;
        for (const auto& transcript : group) {
            const auto abst = abstention_stats(transcript);
            content_turns += abst.content_turns;
            abstained += abst.abstained;
            const auto cite = citation_tally(transcript);
            tally.valid += cite.valid;
            tally.invalid += cite.invalid;
            tally.fabricated += cite.fabricated;
            tally.uncited_turns += cite.uncited_turns;
        }
        c["abstention"] = {{"content_turns", content_turns},
                           {"abstained_turns", abstained},
                           {"fraction", content_turns ? double(abstained) / content_turns : 0.0}};
        c["citations"] = {{"valid", tally.valid},
                          {"invalid", tally.invalid},
                          {"fabricated", tally.fabricated},
                          {"uncited_turns", tally.uncited_turns}};
        conditions[condition_name(condition)] = std::move(c);
    }
    report["conditions"] = std::move(conditions);

    if (themes) {
        json alignment;
        alignment["entries"] = json::array();
        for (const auto& entry : themes->entries)
            alignment["entries"].push_back({{"theme", entry.theme},
                                            {"condition", study_condition_name(entry.condition)},
                                            {"relation", theme_relation_name(entry.relation)},
                                            {"notes", entry.notes},
                                            {"novel", entry.novel}});
        alignment["missing_by_condition"] = themes->missing_by_condition;
        report["theme_alignment"] = std::move(alignment);
    }
    return report;
}

std::string render_session_markdown(const SessionTranscript& transcript) {
    std::ostringstream out;
    out << "# Session " << transcript.session_id << "\n\n"
        << "- evaluator: " << transcript.evaluator.evaluator_id << " ("
        << condition_name(transcript.evaluator.condition) << ")\n"
        << "- config fingerprint: `" << transcript.config_fingerprint << "`\n"
        << "- started: " << transcript.started_at << "  ended: " << transcript.ended_at << "\n"
        << "- status: " << (transcript.complete ? "complete" : "incomplete") << "\n";
    if (!transcript.abort_reason.empty()) out << "- aborted: " << transcript.abort_reason << "\n";
    out << "\n";

    Part current = Part::part1;
    bool first_header = true;
    int turn_no = 0;
    for (const auto& turn : transcript.turns) {
        ++turn_no;
        if (first_header || turn.part != current) {
            out << "## " << part_name(turn.part) << "\n\n";
            current = turn.part;
            first_header = false;
        }
        out << "### Turn " << turn_no << " — " << turn_kind_name(turn.kind);
        if (turn.modality) out << " (" << modality_name(*turn.modality) << ")";
        out << "\n\n";
        out << "**Q:** " << turn.question << "\n\n";
        if (turn.response.abstained) out << "**[ABSTAINED]** ";
        out << "**A:** " << turn.response.text << "\n\n";

        if (turn.evidence && !turn.evidence->items.empty()) {
            out << "Evidence:\n\n";
            for (const auto& item : turn.evidence->items) {
                out << "- " << item.excerpt.participant_id << " (score " << fmt_mean(item.score)
                    << ", codes: ";
                for (std::size_t i = 0; i < item.excerpt.code_labels.size(); ++i)
                    out << (i ? "; " : "") << item.excerpt.code_labels[i];
                out << "): \"" << item.excerpt.quote_text << "\"\n";
            }
            out << "\n";
        }
        if (!turn.response.citations.empty()) {
            out << "Citations: ";
            for (std::size_t i = 0; i < turn.response.citations.size(); ++i)
                out << (i ? ", " : "") << turn.response.citations[i];
            out << "\n\n";
        }
        if (!turn.citation_flags.empty()) {
            out << "Flags: ";
            for (std::size_t i = 0; i < turn.citation_flags.size(); ++i)
                out << (i ? ", " : "") << "`" << turn.citation_flags[i] << "`";
            out << "\n\n";
        }
        if (turn.search_results && !turn.search_results->empty()) {
            out << "Search results:\n\n";
            for (const auto& triplet : *turn.search_results) {
                out << "- " << triplet.description << " (image: " << triplet.image_ref;
                if (triplet.score) out << ", score " << fmt_mean(*triplet.score);
                out << ")\n";
            }
            out << "\n";
        }
    }

    if (transcript.ranking) {
        out << "## Modality ranking\n\n";
        for (Modality m : kModalities) {
            auto it = transcript.ranking->scores.find(m);
            if (it != transcript.ranking->scores.end())
                out << "- " << modality_name(m) << ": " << it->second << "\n";
        }
        if (!transcript.ranking->rationale.empty())
            out << "\nRationale: " << transcript.ranking->rationale << "\n";
    }
    return out.str();
}

std::string render_report_markdown(const json& report) {
    std::ostringstream out;
    out << "# Batch evaluation report\n\n";

    const json& expert = report["expert_reference"];
    out << "Expert reference: top modality **" << expert["top_modality"].get<std::string>() << "**";
    if (expert["modality_means"].contains("image"))
        out << " (image mean " << fmt_mean(expert["modality_means"]["image"].get<double>()) << ")";
    out << "\n\n";

    out << "## Conditions\n\n";
    out << "| condition | n | image | text | specification | vs expert |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& [name, c] : report["conditions"].items()) {
        out << "| " << name << " | " << c["n"].get<int>();
        for (const char* key : {"image", "text", "specification"}) {
            out << " | ";
            if (c["modality_means"].contains(key))
                out << fmt_mean(c["modality_means"][key].get<double>());
        }
        out << " | " << c["verdict_vs_expert"].get<std::string>() << " |\n";
    }
    out << "\n";

    out << "## Abstention and citations\n\n";
    out << "| condition | content turns | abstained | fraction | valid | invalid | fabricated |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& [name, c] : report["conditions"].items()) {
        out << "| " << name << " | " << c["abstention"]["content_turns"].get<int>() << " | "
            << c["abstention"]["abstained_turns"].get<int>() << " | "
            << fmt_mean(c["abstention"]["fraction"].get<double>()) << " | "
            << c["citations"]["valid"].get<int>() << " | " << c["citations"]["invalid"].get<int>()
            << " | " << c["citations"]["fabricated"].get<int>() << " |\n";
    }
    out << "\n";

    out << "## Per-evaluator rankings\n\n";
    out << "| condition | evaluator | image | text | specification |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& [name, c] : report["conditions"].items())
        for (const auto& [evaluator_id, r] : c["per_evaluator"].items())
            out << "| " << name << " | " << evaluator_id << " | " << r["image"].get<int>() << " | "
                << r["text"].get<int>() << " | " << r["specification"].get<int>() << " |\n";
    out << "\n";

    if (!report["excluded_incomplete"].empty()) {
        out << "## Excluded (incomplete)\n\n";
        for (const auto& id : report["excluded_incomplete"])
            out << "- " << id.get<std::string>() << "\n";
        out << "\n";
    }

    if (report.contains("theme_alignment")) {
        out << "## Theme alignment\n\n";
        out << "| theme | condition | relation | novel | notes |\n";
        out << "|---|---|---|---|---|\n";
        for (const auto& entry : report["theme_alignment"]["entries"])
            out << "| " << entry["theme"].get<std::string>() << " | "
                << entry["condition"].get<std::string>() << " | "
                << entry["relation"].get<std::string>() << " | "
                << (entry["novel"].get<bool>() ? "yes" : "no") << " | "
                << entry["notes"].get<std::string>() << " |\n";
        out << "\n";
        for (const auto& [condition, missing] : report["theme_alignment"]["missing_by_condition"].items()) {
            if (missing.empty()) continue;
            out << "Uncovered reference themes (" << condition << "): ";
            for (std::size_t i = 0; i < missing.size(); ++i)
                out << (i ? ", " : "") << missing[i].get<std::string>();
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace syntheval
