#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace syntheval {

enum class Condition { grounded, ungrounded };

const char* condition_name(Condition c);
Condition condition_from_name(const std::string& name);

enum class WorkFocus { biology_first, computation_first };

/// Structured persona profile: position, organisation, self-assessed
/// skills on a 1..3 scale, work focus, automation level, audience, and
/// mappings to related role classifications.
struct PersonaProfile {
    std::string persona_id;
    std::string position_type;
    std::string organisation;
    std::map<std::string, int> skills;  // keys: genomics, data_preparation, programming, visualization
    WorkFocus work_focus = WorkFocus::biology_first;
    std::string automation_level;
    std::string primary_audience;
    std::vector<std::string> role_mappings;
};

/// Throws Err::ConfigInvalid unless all four skill keys are present with
/// values in {1,2,3}.
void validate_profile(const PersonaProfile& profile);

/// A runnable synthetic evaluator. Grounded evaluators carry a profile and
/// a pool reference; ungrounded evaluators carry only a role description.
struct EvaluatorSpec {
    std::string evaluator_id;  // e.g. "CB1", "U4"
    Condition condition = Condition::ungrounded;
    std::optional<PersonaProfile> profile;
    std::optional<std::string> role_description;
    std::optional<std::string> variation_note;
    std::optional<std::string> pool_ref;  // persona_id of the participant pool
};

EvaluatorSpec make_grounded_spec(std::string evaluator_id, PersonaProfile profile,
                                 std::string pool_ref,
                                 std::optional<std::string> variation_note = std::nullopt);
EvaluatorSpec make_ungrounded_spec(std::string evaluator_id, std::string role_description);

/// Throws Err::ConditionMismatch when the condition invariant is broken.
void validate_spec(const EvaluatorSpec& spec);

/// Per-participant self-assessed skills, used for group-average evaluators.
struct ParticipantSkills {
    std::string participant_id;
    std::map<std::string, int> skills;
};

struct PersonaDefinition {
    PersonaProfile profile;
    std::vector<ParticipantSkills> participant_skills;
};

struct PersonaSet {
    std::map<std::string, PersonaDefinition> personas;  // persona_id -> definition
};

/// Compiled-in default persona set; fixtures/profiles_default.json ships
/// the same content for editing.
PersonaSet default_persona_set();

PersonaSet load_persona_set(const std::string& path);
PersonaSet parse_persona_set(const std::string& json_text);

inline const char* kDefaultUngroundedRole =
    "a genomics researcher evaluating a visualization retrieval system";

/// The seven-evaluator grounded roster: CB1, CB2, BIF1, BIF2, SE1, SE2, Bio.
/// Paired evaluators differ in variation_note; Bio carries skills averaged
/// (arithmetic mean, rounded half-up) over the biologist participant set.
/// Deterministic: identical inputs yield identical specs.
std::vector<EvaluatorSpec> default_grounded_roster(const PersonaSet& personas);

/// U1..U7, all ungrounded with the same role description.
std::vector<EvaluatorSpec> default_ungrounded_roster(
    const std::string& role_description = kDefaultUngroundedRole);

/// Applies a variation-override file ({"<evaluator_id>": {field: value}})
/// on top of a roster. Skills merge per key; other fields replace.
void apply_variation_overrides(std::vector<EvaluatorSpec>& roster, const std::string& json_text);
void apply_variation_overrides_file(std::vector<EvaluatorSpec>& roster, const std::string& path);

}  // namespace syntheval
