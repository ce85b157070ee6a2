#include "syntheval/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "syntheval/errors.hpp"

using nlohmann::json;

namespace syntheval {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& field, const std::string& detail) {
    std::ostringstream msg;
    msg << "line " << line_no << ", field '" << field << "': " << detail;
    throw EngineError(Err::MalformedRecord, msg.str());
}

std::string require_string(const json& record, const char* field, std::size_t line_no) {
    if (!record.contains(field) || !record[field].is_string())
        malformed(line_no, field, "missing or not a string");
    return record[field].get<std::string>();
}

}  // namespace

bool Codebook::contains(const std::string& label) const {
    return std::find(categories.begin(), categories.end(), label) != categories.end();
}

bool is_participant_id(const std::string& id) {
    if (id.size() < 2 || id[0] != 'P') return false;
    return std::all_of(id.begin() + 1, id.end(), [](unsigned char c) { return std::isdigit(c); });
}

ExcerptCorpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EngineError(Err::MalformedRecord, "cannot open corpus file: " + path);

    ExcerptCorpus corpus;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::set<std::string> seen_ids;
    std::set<std::string> codebook_set;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;

        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            malformed(line_no, "-", std::string("invalid JSON: ") + e.what());
        }
        if (!record.is_object() || !record.contains("kind") || !record["kind"].is_string())
            malformed(line_no, "kind", "missing record kind");
        const std::string kind = record["kind"].get<std::string>();

        if (!header_seen) {
            if (kind != "header") malformed(line_no, "kind", "first record must be the header");
            if (!record.contains("codebook") || !record["codebook"].is_array())
                malformed(line_no, "codebook", "missing or not an array");
            for (const auto& entry : record["codebook"]) {
                if (!entry.is_string()) malformed(line_no, "codebook", "labels must be strings");
                const std::string label = entry.get<std::string>();
                if (!codebook_set.insert(label).second)
                    malformed(line_no, "codebook", "duplicate label '" + label + "'");
                corpus.codebook.categories.push_back(label);
            }
            if (corpus.codebook.categories.empty())
                malformed(line_no, "codebook", "codebook must be non-empty");
            if (!record.contains("pools") || !record["pools"].is_object())
                malformed(line_no, "pools", "missing or not an object");
            for (const auto& [persona_id, ids] : record["pools"].items()) {
                if (!ids.is_array() || ids.empty())
                    malformed(line_no, "pools", "pool '" + persona_id + "' must be a non-empty array");
                ParticipantPool pool;
                pool.persona_id = persona_id;
                for (const auto& pid : ids) {
                    if (!pid.is_string() || !is_participant_id(pid.get<std::string>()))
                        malformed(line_no, "pools",
                                  "pool '" + persona_id + "' has an id not matching P<digits>");
                    pool.participant_ids.insert(pid.get<std::string>());
                }
                corpus.pools.emplace(persona_id, std::move(pool));
            }
            header_seen = true;
            continue;
        }

        if (kind != "excerpt") malformed(line_no, "kind", "expected 'excerpt', got '" + kind + "'");

        Excerpt ex;
        ex.excerpt_id = require_string(record, "excerpt_id", line_no);
        if (ex.excerpt_id.empty()) malformed(line_no, "excerpt_id", "must be non-empty");
        if (!seen_ids.insert(ex.excerpt_id).second)
            malformed(line_no, "excerpt_id", "duplicate id '" + ex.excerpt_id + "'");

        ex.participant_id = require_string(record, "participant_id", line_no);
        if (!is_participant_id(ex.participant_id))
            malformed(line_no, "participant_id", "'" + ex.participant_id + "' does not match P<digits>");

        if (!record.contains("codes") || !record["codes"].is_array() || record["codes"].empty())
            malformed(line_no, "codes", "missing or empty code list");
        for (const auto& code : record["codes"]) {
            if (!code.is_string()) malformed(line_no, "codes", "labels must be strings");
            const std::string label = code.get<std::string>();
            if (codebook_set.find(label) == codebook_set.end())
                throw EngineError(Err::UnknownCode,
                                  "code '" + label + "' on excerpt '" + ex.excerpt_id +
                                      "' is not in the codebook");
            ex.code_labels.push_back(label);
        }

        ex.quote_text = trim(require_string(record, "quote", line_no));
        if (ex.quote_text.empty()) malformed(line_no, "quote", "empty after whitespace trim");

        corpus.excerpts.push_back(std::move(ex));
    }

    if (!header_seen) throw EngineError(Err::EmptyCorpus, "no header record in " + path);
    if (corpus.excerpts.empty()) throw EngineError(Err::EmptyCorpus, "no excerpt records in " + path);

    // Every pool participant must appear in at least one excerpt.
    std::set<std::string> participants;
    for (const auto& ex : corpus.excerpts) participants.insert(ex.participant_id);
    for (const auto& [persona_id, pool] : corpus.pools) {
        for (const auto& pid : pool.participant_ids) {
            if (participants.find(pid) == participants.end())
                malformed(1, "pools",
                          "pool '" + persona_id + "' references participant '" + pid +
                              "' with no excerpts");
        }
    }

    return corpus;
}

void save_corpus(const ExcerptCorpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw EngineError(Err::MalformedRecord, "cannot write corpus file: " + path);

    json header;
    header["kind"] = "header";
    header["codebook"] = corpus.codebook.categories;
    json pools = json::object();
    for (const auto& [persona_id, pool] : corpus.pools)
        pools[persona_id] = std::vector<std::string>(pool.participant_ids.begin(), pool.participant_ids.end());
    header["pools"] = pools;
    out << header.dump() << "\n";

    for (const auto& ex : corpus.excerpts) {
        json record;
        record["kind"] = "excerpt";
        record["excerpt_id"] = ex.excerpt_id;
        record["participant_id"] = ex.participant_id;
        record["codes"] = ex.code_labels;
        record["quote"] = ex.quote_text;
        out << record.dump() << "\n";
    }
}

std::vector<Excerpt> pool_excerpts(const ExcerptCorpus& corpus, const std::string& persona_id) {
    auto it = corpus.pools.find(persona_id);
    if (it == corpus.pools.end())
        throw EngineError(Err::UnknownPersona, "no participant pool for persona '" + persona_id + "'");
    std::vector<Excerpt> out;
    for (const auto& ex : corpus.excerpts)
        if (it->second.participant_ids.count(ex.participant_id)) out.push_back(ex);
    return out;
}

}  // namespace syntheval
