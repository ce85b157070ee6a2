#pragma once

#include <optional>
#include <string>

#include "syntheval/errors.hpp"

namespace syntheval {

struct RetryPolicy {
    int max_retries = 2;       // attempts after the first
    int base_backoff_ms = 100; // doubled per retry
};

struct HttpResult {
    int status = 0;
    std::string body;
};

/// One HTTP exchange with retry-on-transient semantics: connection
/// failures and 5xx responses are retried with exponential backoff, then
/// converted to `unavailable_code`. 2xx–4xx responses return for the
/// caller to interpret.
HttpResult http_request(const std::string& base_url, const std::string& method,
                        const std::string& path, const std::optional<std::string>& json_body,
                        const RetryPolicy& policy, Err unavailable_code,
                        const std::string& bearer_token = "");

}  // namespace syntheval
