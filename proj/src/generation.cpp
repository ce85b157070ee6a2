#include "syntheval/generation.hpp"

#include <cctype>
#include <set>
#include <sstream>

#include "syntheval/errors.hpp"

namespace syntheval {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string skill_line(const PersonaProfile& profile) {
    std::ostringstream out;
    bool first = true;
    for (const char* key : {"genomics", "data_preparation", "programming", "visualization"}) {
        auto it = profile.skills.find(key);
        if (it == profile.skills.end()) continue;
        if (!first) out << ", ";
        first = false;
        out << key << " " << it->second << "/3";
    }
    return out.str();
}

}  // namespace

bool matches_abstention(const std::string& text) {
    const std::string t = trim(text);
    if (t == kAbstentionMessage) return true;
    return t.rfind(kAbstentionPrefix, 0) == 0;
}

std::vector<std::string> extract_citations(const std::string& text) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (text[i] != 'P') continue;
        if (i > 0 && std::isalnum(static_cast<unsigned char>(text[i - 1]))) continue;
        std::size_t j = i + 1;
        while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j == i + 1) continue;  // no digits after 'P'
        if (j < n && std::isalnum(static_cast<unsigned char>(text[j]))) continue;
        std::string id = text.substr(i, j - i);
        if (seen.insert(id).second) out.push_back(std::move(id));
        i = j - 1;
    }
    return out;
}

std::vector<ChatMessage> PromptBundle::to_messages() const {
    std::vector<ChatMessage> messages;
    messages.push_back({"system", system_text});
    for (const auto& [past_question, past_response] : history) {
        messages.push_back({"user", past_question});
        messages.push_back({"assistant", past_response});
    }

    std::ostringstream user;
    user << question;
    if (evidence) {
        user << "\n\nEvidence excerpts:\n";
        if (evidence->items.empty()) {
            user << "(none)";
        } else {
            for (const auto& item : evidence->items) {
                user << "- [" << item.excerpt.participant_id << "] (codes: ";
                for (std::size_t i = 0; i < item.excerpt.code_labels.size(); ++i)
                    user << (i ? "; " : "") << item.excerpt.code_labels[i];
                user << ") \"" << item.excerpt.quote_text << "\"\n";
            }
        }
    }
    messages.push_back({"user", user.str()});
    return messages;
}

PromptBundle compose_prompt(const EvaluatorSpec& evaluator, const std::string& question,
                            std::optional<EvidenceBundle> evidence,
                            const std::vector<std::pair<std::string, std::string>>& history) {
    const bool grounded = evaluator.condition == Condition::grounded;
    if (grounded && !evidence)
        throw EngineError(Err::ConditionMismatch,
                          "grounded evaluator '" + evaluator.evaluator_id + "' needs an evidence bundle");
    if (!grounded && evidence)
        throw EngineError(Err::ConditionMismatch, "ungrounded evaluator '" + evaluator.evaluator_id +
                                                      "' must not receive evidence");

    PromptBundle bundle;
    bundle.history = history;
    bundle.question = question;
    bundle.evidence = std::move(evidence);

    std::ostringstream sys;
    if (grounded) {
        const PersonaProfile& p = *evaluator.profile;
        sys << "You answer in the first person as a synthetic evaluator with this profile:\n"
            << "- position: " << p.position_type << "\n"
            << "- organisation: " << p.organisation << "\n"
            << "- skills: " << skill_line(p) << "\n"
            << "- work focus: "
            << (p.work_focus == WorkFocus::biology_first ? "biology first" : "computation first")
            << "\n"
            << "- automation: " << p.automation_level << "\n"
            << "- primary audience: " << p.primary_audience << "\n";
        if (!p.role_mappings.empty()) {
            sys << "- related roles: ";
            for (std::size_t i = 0; i < p.role_mappings.size(); ++i)
                sys << (i ? ", " : "") << p.role_mappings[i];
            sys << "\n";
        }
        if (evaluator.variation_note) sys << "Emphasis for this evaluator: " << *evaluator.variation_note << "\n";
        sys << "Answer only from the evidence excerpts supplied with each question; do not invent "
               "experiences beyond them. Cite the source participants inline by their identifier "
               "(e.g. P9) for every claim you ground.\n"
            << "If the evidence does not cover the question, reply exactly: \"" << kAbstentionMessage
            << "\"";
    } else {
        sys << "You answer in the first person as " << *evaluator.role_description << ".\n"
            << "Stay in character and answer from that perspective.";
        if (evaluator.variation_note) sys << "\nEmphasis for this evaluator: " << *evaluator.variation_note;
    }
    bundle.system_text = sys.str();
    return bundle;
}

TurnResponse generate_turn(ChatProvider& provider, const PromptBundle& prompt) {
    const std::string content = provider.complete(prompt.to_messages());
    if (trim(content).empty())
        throw EngineError(Err::MalformedResponse, "provider returned empty text");

    TurnResponse response;
    response.raw_provider_payload = content;
    if (matches_abstention(content)) {
        response.abstained = true;
        response.text = kAbstentionMessage;
    } else {
        response.text = content;
        response.citations = extract_citations(content);
    }
    return response;
}

CitationReport validate_citations(const TurnResponse& response, const EvidenceBundle& evidence) {
    std::set<std::string> present;
    for (const auto& item : evidence.items) present.insert(item.excerpt.participant_id);

    CitationReport report;
    for (const auto& id : response.citations) {
        if (present.count(id))
            report.valid.push_back(id);
        else
            report.invalid.push_back(id);
    }
    report.uncited_claims_flag = !response.abstained && response.citations.empty();
    return report;
}

TurnResponse abstention_turn() {
    TurnResponse response;
    response.text = kAbstentionMessage;
    response.abstained = true;
    return response;
}

}  // namespace syntheval
