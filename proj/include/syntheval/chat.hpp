#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace syntheval {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    virtual std::string model_id() const = 0;
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// Phrase the runner puts in elicitation questions that expect a JSON
/// reply; the scriptable mock keys its structured answers off it.
inline const char* kJsonObjectReplyMarker = "Reply with a single JSON object";

/// Marker used by the LLM relevance filter; the mock answers YES/NO
/// deterministically when it sees it.
inline const char* kYesNoReplyMarker = "Answer with exactly YES or NO";

/// Client for the chat wire contract:
///   POST /chat {"model":"<id>","messages":[{"role","content"},...],"seed":N}
///     -> {"content":"..."}
class HttpChatProvider : public ChatProvider {
public:
    HttpChatProvider(std::string base_url, std::string model_id, std::uint64_t seed = 0,
                     int max_retries = 2, int base_backoff_ms = 100, std::string bearer_token = "");

    std::string model_id() const override { return model_id_; }
    std::string complete(const std::vector<ChatMessage>& messages) override;

private:
    std::string base_url_;
    std::string model_id_;
    std::uint64_t seed_;
    int max_retries_;
    int base_backoff_ms_;
    std::string bearer_token_;
};

/// Scriptable deterministic chat double.
///
/// Resolution order per call: scripted by turn index, then by needle
/// (first needle found anywhere in the last user message wins), then the
/// synthetic auto mode — a pure function of (seed, messages) that answers
/// ranking elicitations with a valid permutation, relevance checks with
/// YES/NO, and content questions with short first-person text citing
/// participant ids lifted from the evidence block when one is present.
class MockChatProvider : public ChatProvider {
public:
    struct Script {
        std::vector<std::string> by_turn;
        std::vector<std::pair<std::string, std::string>> by_needle;
        bool auto_fallback = true;
    };

    explicit MockChatProvider(std::uint64_t seed = 0);
    MockChatProvider(std::uint64_t seed, Script script, std::string model_id = "mock-chat-v1");

    std::string model_id() const override { return model_id_; }
    std::string complete(const std::vector<ChatMessage>& messages) override;

    int calls() const { return calls_.load(); }

    /// Message-list sizes observed per call, in call order. Used to assert
    /// that conversation history grows by one (question, response) pair
    /// per turn.
    std::vector<std::size_t> call_message_counts() const;

    static Script script_from_json_text(const std::string& json_text);
    static Script script_from_file(const std::string& path);

private:
    std::string auto_response(const std::vector<ChatMessage>& messages) const;

    std::uint64_t seed_;
    Script script_;
    std::string model_id_;
    std::atomic<int> calls_{0};
    std::atomic<int> turn_cursor_{0};
    mutable std::mutex record_mutex_;
    std::vector<std::size_t> message_counts_;
};

}  // namespace syntheval
