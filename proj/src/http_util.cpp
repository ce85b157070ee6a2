#include "syntheval/http_util.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"

namespace syntheval {

HttpResult http_request(const std::string& base_url, const std::string& method,
                        const std::string& path, const std::optional<std::string>& json_body,
                        const RetryPolicy& policy, Err unavailable_code,
                        const std::string& bearer_token) {
    std::string last_failure;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        if (attempt > 0) {
            auto backoff = std::chrono::milliseconds(policy.base_backoff_ms) * (1 << (attempt - 1));
            std::this_thread::sleep_for(backoff);
        }

        // httplib clients are not thread-safe; one per exchange keeps
        // callers free to share this function across sessions.
        httplib::Client client(base_url);
        client.set_connection_timeout(10);
        client.set_read_timeout(30);
        if (!bearer_token.empty()) client.set_bearer_token_auth(bearer_token);

        httplib::Result result;
        if (method == "GET") {
            result = client.Get(path);
        } else {
            result = client.Post(path, json_body.value_or("{}"), "application/json");
        }

        if (!result) {
            last_failure = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 500) {
            last_failure = "server error: status " + std::to_string(result->status);
            continue;
        }
        return HttpResult{result->status, result->body};
    }
    throw EngineError(unavailable_code, base_url + path + " unreachable after " +
                                            std::to_string(policy.max_retries + 1) +
                                            " attempts (" + last_failure + ")");
}

}  // namespace syntheval
