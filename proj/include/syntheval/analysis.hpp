#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "syntheval/protocol.hpp"

namespace syntheval {

enum class StudyCondition { grounded, ungrounded, expert };

const char* study_condition_name(StudyCondition c);
StudyCondition study_condition_from_name(const std::string& name);

/// Published human-study findings used as comparison data, never
/// regenerated. Only the published mean is stored (image 2.29); the
/// comparator needs argmax and means alone, so the unpublished per-
/// modality values stay absent.
struct ExpertReference {
    std::vector<std::string> themes;
    std::map<Modality, double> modality_means;
    Modality top_modality = Modality::image;

    static ExpertReference published();
};

struct ConditionAggregate {
    StudyCondition condition = StudyCondition::grounded;
    int n = 0;
    std::map<Modality, double> modality_means;
    std::map<std::string, ModalityRanking> per_evaluator;
};

/// Arithmetic mean per modality over complete transcripts of one
/// condition. Throws Err::EmptyInput, Err::MixedConditions,
/// Err::IncompleteTranscript.
ConditionAggregate aggregate_rankings(const std::vector<SessionTranscript>& transcripts);

enum class OrderingVerdict { agrees, contradicts, indeterminate };

const char* ordering_verdict_name(OrderingVerdict v);

/// Compares the aggregate's argmax modality against the reference's top
/// modality. A tied argmax is reported as indeterminate rather than
/// forced either way.
OrderingVerdict compare_orderings(const ConditionAggregate& aggregate, const ExpertReference& ref);

enum class ThemeRelation { match, extend, outside, contradict };

const char* theme_relation_name(ThemeRelation r);
ThemeRelation theme_relation_from_name(const std::string& name);  // Err::UnknownRelation

/// One externally coded observation: how a condition's theme relates to
/// the reference themes. The coding itself is human work; entries arrive
/// as data.
struct AlignmentEntry {
    std::string theme;
    StudyCondition condition = StudyCondition::grounded;
    ThemeRelation relation = ThemeRelation::match;
    std::string notes;
    bool novel = false;  // theme outside the reference set, declared as such
};

struct AlignmentSummary {
    std::vector<AlignmentEntry> entries;
    // condition name -> reference themes with no entry for that condition
    std::map<std::string, std::vector<std::string>> missing_by_condition;
};

AlignmentEntry parse_alignment_entry(const nlohmann::json& node);
AlignmentSummary align_themes(const std::vector<AlignmentEntry>& coded, const ExpertReference& ref);
AlignmentSummary align_themes_file(const std::string& path, const ExpertReference& ref);

struct AbstentionStats {
    int content_turns = 0;  // all turns except the ranking elicitation
    int abstained = 0;

    double fraction() const { return content_turns == 0 ? 0.0 : double(abstained) / content_turns; }
};

AbstentionStats abstention_stats(const SessionTranscript& transcript);

struct CitationTally {
    int valid = 0;
    int invalid = 0;
    int fabricated = 0;
    int uncited_turns = 0;
};

CitationTally citation_tally(const SessionTranscript& transcript);

/// Batch report: per-condition aggregates and verdicts against the expert
/// reference, abstention statistics, citation-flag counts, per-session
/// summaries, and (optionally) the theme alignment.
nlohmann::json build_batch_report(const std::vector<SessionTranscript>& transcripts,
                                  const ExpertReference& ref,
                                  const std::optional<AlignmentSummary>& themes);

/// Static session rendering: timeline of turns, evidence quotes with
/// participant ids inline, abstained turns visibly tagged, ranking at the
/// end.
std::string render_session_markdown(const SessionTranscript& transcript);

std::string render_report_markdown(const nlohmann::json& report);

}  // namespace syntheval
