#include "syntheval/chat.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "syntheval/errors.hpp"
#include "syntheval/hashing.hpp"
#include "syntheval/http_util.hpp"

using nlohmann::json;

namespace syntheval {

HttpChatProvider::HttpChatProvider(std::string base_url, std::string model_id, std::uint64_t seed,
                                   int max_retries, int base_backoff_ms, std::string bearer_token)
    : base_url_(std::move(base_url)),
      model_id_(std::move(model_id)),
      seed_(seed),
      max_retries_(max_retries),
      base_backoff_ms_(base_backoff_ms),
      bearer_token_(std::move(bearer_token)) {}

std::string HttpChatProvider::complete(const std::vector<ChatMessage>& messages) {
    json request;
    request["model"] = model_id_;
    request["messages"] = json::array();
    for (const auto& message : messages)
        request["messages"].push_back({{"role", message.role}, {"content", message.content}});
    request["seed"] = seed_;

    RetryPolicy policy{max_retries_, base_backoff_ms_};
    HttpResult result = http_request(base_url_, "POST", "/chat", request.dump(), policy,
                                     Err::ProviderUnavailable, bearer_token_);
    if (result.status != 200)
        throw EngineError(Err::ProviderUnavailable,
                          "chat endpoint returned status " + std::to_string(result.status));
    try {
        json doc = json::parse(result.body);
        return doc.at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw EngineError(Err::ProviderUnavailable, std::string("malformed chat response: ") + e.what());
    }
}

MockChatProvider::MockChatProvider(std::uint64_t seed) : seed_(seed), model_id_("mock-chat-v1") {}

MockChatProvider::MockChatProvider(std::uint64_t seed, Script script, std::string model_id)
    : seed_(seed), script_(std::move(script)), model_id_(std::move(model_id)) {}

std::vector<std::size_t> MockChatProvider::call_message_counts() const {
    std::lock_guard<std::mutex> lock(record_mutex_);
    return message_counts_;
}

std::string MockChatProvider::complete(const std::vector<ChatMessage>& messages) {
    calls_.fetch_add(1);
    {
        std::lock_guard<std::mutex> lock(record_mutex_);
        message_counts_.push_back(messages.size());
    }

    const int turn = turn_cursor_.fetch_add(1);
    if (turn < static_cast<int>(script_.by_turn.size())) return script_.by_turn[static_cast<std::size_t>(turn)];

    std::string last_user;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") {
            last_user = it->content;
            break;
        }
    }
    for (const auto& [needle, response] : script_.by_needle)
        if (last_user.find(needle) != std::string::npos) return response;

    if (!script_.auto_fallback)
        throw EngineError(Err::ProviderUnavailable, "mock chat script exhausted and auto mode disabled");
    return auto_response(messages);
}

namespace {

// Short first-person fragments the auto mode assembles from; none contain
// P<digits> tokens, so citation extraction sees only the ids the mock
// inserts on purpose.
const std::array<const char*, 6> kGroundedFillers = {
    "that is how my day-to-day analysis actually runs.",
    "the quoted experiences match the constraints I work under.",
    "this mirrors how I move from raw files to a shareable figure.",
    "those quotes reflect the tooling friction I deal with.",
    "my answer stays within what those excerpts describe.",
    "that evidence covers the part of my workflow this touches.",
};

const std::array<const char*, 6> kUngroundedFillers = {
    "I mostly work from tabular outputs and want quick visual checks.",
    "I care about getting from data to a presentable figure fast.",
    "reusing an editable starting point beats building charts from scratch.",
    "search results need to match the data types I actually have.",
    "I want something my collaborators can open without setup.",
    "a browsable gallery helps me see what is even possible.",
};

std::vector<std::string> evidence_ids_in_prompt(const std::string& user_content) {
    // Evidence lines are rendered as "- [P9] ...": collect the bracketed ids.
    std::vector<std::string> ids;
    std::size_t pos = 0;
    while ((pos = user_content.find("- [P", pos)) != std::string::npos) {
        const std::size_t start = pos + 3;  // at 'P'
        const std::size_t end = user_content.find(']', start);
        if (end == std::string::npos) break;
        std::string id = user_content.substr(start, end - start);
        bool fresh = true;
        for (const auto& seen : ids)
            if (seen == id) fresh = false;
        if (fresh) ids.push_back(id);
        if (ids.size() >= 2) break;
        pos = end;
    }
    return ids;
}

}  // namespace

std::string MockChatProvider::auto_response(const std::vector<ChatMessage>& messages) const {
    std::string all;
    for (const auto& message : messages) {
        all += message.role;
        all += '\x1f';
        all += message.content;
        all += '\x1e';
    }
    const std::uint64_t h = fnv1a64(all, 0xcbf29ce484222325ULL ^ seed_);

    std::string last_user;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") {
            last_user = it->content;
            break;
        }
    }

    if (last_user.find(kYesNoReplyMarker) != std::string::npos) {
        return (h % 4 == 0) ? "NO" : "YES";
    }

    if (last_user.find(kJsonObjectReplyMarker) != std::string::npos) {
        static const std::array<std::array<int, 3>, 6> kPermutations = {{
            {3, 2, 1}, {3, 1, 2}, {2, 3, 1}, {1, 3, 2}, {2, 1, 3}, {1, 2, 3},
        }};
        const auto& perm = kPermutations[h % kPermutations.size()];
        json ranking;
        ranking["image"] = perm[0];
        ranking["text"] = perm[1];
        ranking["specification"] = perm[2];
        const char* top = perm[0] == 3 ? "image" : (perm[1] == 3 ? "text" : "specification");
        ranking["rationale"] =
            std::string("Deterministic mock preference; ") + top + " fits my workflow best.";
        return ranking.dump();
    }

    const auto ids = evidence_ids_in_prompt(last_user);
    std::ostringstream out;
    if (!ids.empty()) {
        out << "Drawing on what I have described before (";
        for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? ", " : "") << ids[i];
        out << "), " << kGroundedFillers[h % kGroundedFillers.size()];
    } else {
        out << "Speaking from my own perspective, "
            << kUngroundedFillers[h % kUngroundedFillers.size()];
    }
    return out.str();
}

MockChatProvider::Script MockChatProvider::script_from_json_text(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw EngineError(Err::ConfigInvalid, std::string("chat script: ") + e.what());
    }
    Script script;
    if (doc.contains("by_turn")) script.by_turn = doc["by_turn"].get<std::vector<std::string>>();
    if (doc.contains("by_needle"))
        for (const auto& pair : doc["by_needle"])
            script.by_needle.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    script.auto_fallback = doc.value("auto_fallback", true);
    return script;
}

MockChatProvider::Script MockChatProvider::script_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EngineError(Err::ConfigInvalid, "cannot open chat script: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return script_from_json_text(buffer.str());
}

}  // namespace syntheval
