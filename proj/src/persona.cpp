#include "syntheval/persona.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "syntheval/errors.hpp"

using nlohmann::json;

namespace syntheval {

namespace {

const std::vector<std::string> kSkillKeys = {"genomics", "data_preparation", "programming",
                                             "visualization"};

// Mirrored by fixtures/profiles_default.json; these are illustrative
// defaults, not measurements. A unit test guards against drift.
const char* kDefaultPersonaJson = R"JSON({
  "note": "illustrative default profiles and pools; override with --profiles / --variation",
  "personas": [
    {
      "persona_id": "computational_biologist",
      "position_type": "postdoctoral researcher",
      "organisation": "academic research lab",
      "skills": {"genomics": 3, "data_preparation": 2, "programming": 2, "visualization": 2},
      "work_focus": "biology_first",
      "automation_level": "scripts recurring steps, explores interactively",
      "primary_audience": "lab members and collaborators",
      "role_mappings": ["data analyst", "research scientist"]
    },
    {
      "persona_id": "bioinformatician",
      "position_type": "staff bioinformatician",
      "organisation": "sequencing core facility",
      "skills": {"genomics": 2, "data_preparation": 3, "programming": 3, "visualization": 2},
      "work_focus": "computation_first",
      "automation_level": "automates pipelines end to end",
      "primary_audience": "facility clients",
      "role_mappings": ["pipeline engineer", "data engineer"]
    },
    {
      "persona_id": "software_engineer",
      "position_type": "research software engineer",
      "organisation": "research institute",
      "skills": {"genomics": 1, "data_preparation": 2, "programming": 3, "visualization": 2},
      "work_focus": "computation_first",
      "automation_level": "builds and maintains shared tooling",
      "primary_audience": "tool users and contributors",
      "role_mappings": ["software developer"]
    },
    {
      "persona_id": "biologist",
      "position_type": "wet-lab biologist",
      "organisation": "university department",
      "skills": {"genomics": 3, "data_preparation": 1, "programming": 1, "visualization": 2},
      "work_focus": "biology_first",
      "automation_level": "mostly manual, GUI tools",
      "primary_audience": "lab meetings and publications",
      "role_mappings": ["bench scientist"],
      "participant_skills": [
        {"participant_id": "P16", "skills": {"genomics": 3, "data_preparation": 1, "programming": 1, "visualization": 2}},
        {"participant_id": "P17", "skills": {"genomics": 2, "data_preparation": 2, "programming": 1, "visualization": 1}},
        {"participant_id": "P18", "skills": {"genomics": 3, "data_preparation": 1, "programming": 2, "visualization": 2}}
      ]
    }
  ]
})JSON";

WorkFocus work_focus_from_name(const std::string& name) {
    if (name == "biology_first") return WorkFocus::biology_first;
    if (name == "computation_first") return WorkFocus::computation_first;
    throw EngineError(Err::ConfigInvalid, "unknown work_focus '" + name + "'");
}

PersonaProfile parse_profile(const json& node) {
    PersonaProfile p;
    p.persona_id = node.at("persona_id").get<std::string>();
    p.position_type = node.value("position_type", "");
    p.organisation = node.value("organisation", "");
    for (const auto& [key, value] : node.at("skills").items()) p.skills[key] = value.get<int>();
    p.work_focus = work_focus_from_name(node.value("work_focus", "biology_first"));
    p.automation_level = node.value("automation_level", "");
    p.primary_audience = node.value("primary_audience", "");
    if (node.contains("role_mappings"))
        p.role_mappings = node["role_mappings"].get<std::vector<std::string>>();
    validate_profile(p);
    return p;
}

const PersonaDefinition& require_persona(const PersonaSet& set, const std::string& persona_id) {
    auto it = set.personas.find(persona_id);
    if (it == set.personas.end())
        throw EngineError(Err::ConfigInvalid, "persona set lacks '" + persona_id + "'");
    return it->second;
}

// Arithmetic mean per skill over the participant set, rounded half-up on
// the 1..3 scale. Integer arithmetic keeps the rounding exact.
std::map<std::string, int> average_skills(const std::vector<ParticipantSkills>& members,
                                          const std::map<std::string, int>& fallback) {
    if (members.empty()) return fallback;
    std::map<std::string, int> out;
    for (const auto& key : kSkillKeys) {
        long sum = 0;
        for (const auto& m : members) {
            auto it = m.skills.find(key);
            if (it == m.skills.end())
                throw EngineError(Err::ConfigInvalid,
                                  "participant " + m.participant_id + " lacks skill '" + key + "'");
            sum += it->second;
        }
        const long n = static_cast<long>(members.size());
        long rounded = (2 * sum + n) / (2 * n);
        if (rounded < 1) rounded = 1;
        if (rounded > 3) rounded = 3;
        out[key] = static_cast<int>(rounded);
    }
    return out;
}

}  // namespace

const char* condition_name(Condition c) {
    return c == Condition::grounded ? "grounded" : "ungrounded";
}

Condition condition_from_name(const std::string& name) {
    if (name == "grounded") return Condition::grounded;
    if (name == "ungrounded") return Condition::ungrounded;
    throw EngineError(Err::ConfigInvalid, "unknown condition '" + name + "'");
}

void validate_profile(const PersonaProfile& profile) {
    for (const auto& key : kSkillKeys) {
        auto it = profile.skills.find(key);
        if (it == profile.skills.end())
            throw EngineError(Err::ConfigInvalid,
                              "profile '" + profile.persona_id + "' lacks skill '" + key + "'");
        if (it->second < 1 || it->second > 3)
            throw EngineError(Err::ConfigInvalid, "profile '" + profile.persona_id + "' skill '" +
                                                      key + "' outside 1..3");
    }
}

EvaluatorSpec make_grounded_spec(std::string evaluator_id, PersonaProfile profile,
                                 std::string pool_ref, std::optional<std::string> variation_note) {
    validate_profile(profile);
    EvaluatorSpec spec;
    spec.evaluator_id = std::move(evaluator_id);
    spec.condition = Condition::grounded;
    spec.profile = std::move(profile);
    spec.pool_ref = std::move(pool_ref);
    spec.variation_note = std::move(variation_note);
    return spec;
}

EvaluatorSpec make_ungrounded_spec(std::string evaluator_id, std::string role_description) {
    EvaluatorSpec spec;
    spec.evaluator_id = std::move(evaluator_id);
    spec.condition = Condition::ungrounded;
    spec.role_description = std::move(role_description);
    return spec;
}

void validate_spec(const EvaluatorSpec& spec) {
    if (spec.condition == Condition::grounded) {
        if (!spec.profile || !spec.pool_ref)
            throw EngineError(Err::ConditionMismatch,
                              "grounded evaluator '" + spec.evaluator_id +
                                  "' requires a profile and a pool_ref");
        validate_profile(*spec.profile);
    } else {
        if (!spec.role_description || spec.pool_ref)
            throw EngineError(Err::ConditionMismatch,
                              "ungrounded evaluator '" + spec.evaluator_id +
                                  "' requires a role description and no pool_ref");
    }
}

PersonaSet parse_persona_set(const std::string& json_text) {
    json doc = json::parse(json_text);
    PersonaSet set;
    for (const auto& node : doc.at("personas")) {
        PersonaDefinition def;
        def.profile = parse_profile(node);
        if (node.contains("participant_skills")) {
            for (const auto& member : node["participant_skills"]) {
                ParticipantSkills ps;
                ps.participant_id = member.at("participant_id").get<std::string>();
                for (const auto& [key, value] : member.at("skills").items())
                    ps.skills[key] = value.get<int>();
                def.participant_skills.push_back(std::move(ps));
            }
        }
        set.personas.emplace(def.profile.persona_id, std::move(def));
    }
    return set;
}

PersonaSet default_persona_set() { return parse_persona_set(kDefaultPersonaJson); }

PersonaSet load_persona_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EngineError(Err::ConfigInvalid, "cannot open persona file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_persona_set(buffer.str());
    } catch (const json::exception& e) {
        throw EngineError(Err::ConfigInvalid, "persona file " + path + ": " + e.what());
    }
}

std::vector<EvaluatorSpec> default_grounded_roster(const PersonaSet& personas) {
    const auto& cb = require_persona(personas, "computational_biologist");
    const auto& bif = require_persona(personas, "bioinformatician");
    const auto& se = require_persona(personas, "software_engineer");
    const auto& bio = require_persona(personas, "biologist");

    std::vector<EvaluatorSpec> roster;
    roster.push_back(make_grounded_spec("CB1", cb.profile, "computational_biologist",
                                        "leans exploratory: interactive analysis before scripting"));
    roster.push_back(make_grounded_spec("CB2", cb.profile, "computational_biologist",
                                        "leans pipeline-first: scripted, reproducible analysis"));
    roster.push_back(make_grounded_spec("BIF1", bif.profile, "bioinformatician", "scientist-engineer"));
    roster.push_back(make_grounded_spec("BIF2", bif.profile, "bioinformatician", "tool-builder"));
    roster.push_back(make_grounded_spec("SE1", se.profile, "software_engineer",
                                        "builds internal analysis tooling for one group"));
    roster.push_back(make_grounded_spec("SE2", se.profile, "software_engineer",
                                        "maintains shared services and deployment"));

    PersonaProfile averaged = bio.profile;
    averaged.skills = average_skills(bio.participant_skills, bio.profile.skills);
    roster.push_back(
        make_grounded_spec("Bio", std::move(averaged), "biologist", "group-average profile"));
    return roster;
}

std::vector<EvaluatorSpec> default_ungrounded_roster(const std::string& role_description) {
    std::vector<EvaluatorSpec> roster;
    for (int i = 1; i <= 7; ++i)
        roster.push_back(make_ungrounded_spec("U" + std::to_string(i), role_description));
    return roster;
}

void apply_variation_overrides(std::vector<EvaluatorSpec>& roster, const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw EngineError(Err::ConfigInvalid, std::string("variation file: ") + e.what());
    }
    if (!doc.is_object()) throw EngineError(Err::ConfigInvalid, "variation file must be an object");

    for (auto& spec : roster) {
        if (!doc.contains(spec.evaluator_id)) continue;
        const json& over = doc[spec.evaluator_id];
        if (over.contains("variation_note"))
            spec.variation_note = over["variation_note"].get<std::string>();
        if (over.contains("role_description"))
            spec.role_description = over["role_description"].get<std::string>();
        if (spec.profile) {
            PersonaProfile& p = *spec.profile;
            if (over.contains("skills"))
                for (const auto& [key, value] : over["skills"].items())
                    p.skills[key] = value.get<int>();
            if (over.contains("position_type")) p.position_type = over["position_type"].get<std::string>();
            if (over.contains("organisation")) p.organisation = over["organisation"].get<std::string>();
            if (over.contains("work_focus"))
                p.work_focus = work_focus_from_name(over["work_focus"].get<std::string>());
            if (over.contains("automation_level"))
                p.automation_level = over["automation_level"].get<std::string>();
            if (over.contains("primary_audience"))
                p.primary_audience = over["primary_audience"].get<std::string>();
            if (over.contains("role_mappings"))
                p.role_mappings = over["role_mappings"].get<std::vector<std::string>>();
            validate_profile(p);
        }
        validate_spec(spec);
    }
}

void apply_variation_overrides_file(std::vector<EvaluatorSpec>& roster, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EngineError(Err::ConfigInvalid, "cannot open variation file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    apply_variation_overrides(roster, buffer.str());
}

}  // namespace syntheval
