#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "syntheval/embedding.hpp"
#include "syntheval/http_util.hpp"
#include "syntheval/target.hpp"

namespace syntheval {

struct MockTargetConfig {
    enum class Scoring { token_overlap, embed_cosine };

    std::vector<GalleryItem> gallery;  // item_ids unique
    Scoring scoring = Scoring::token_overlap;
    int latency_ms = 0;
    std::optional<int> fail_after;  // requests served before simulated outage
};

/// Deterministic implementation of the target wire contract. Responses
/// are pure functions of (config, request); the in-process client and the
/// HTTP server both serve the exact byte strings produced here.
///
/// token_overlap ranks items by the count of distinct lowercase tokens
/// shared between the query text and the item description, ties by
/// item_id ascending. For image/specification queries the query text is
/// the referenced gallery item's description.
class MockTargetCore {
public:
    explicit MockTargetCore(MockTargetConfig config);

    struct Response {
        int status = 200;
        std::string body;
    };

    Response handle_gallery();
    Response handle_search(const std::string& request_json);

    int requests_served() const { return request_count_.load(); }

private:
    bool outage();

    MockTargetConfig config_;
    std::atomic<int> request_count_{0};
    HashEmbeddingProvider embedder_;  // embed_cosine scoring
};

MockTargetConfig load_mock_gallery_file(const std::string& path);

/// In-process client over a core: no sockets, same behavior as the HTTP
/// client including retry-then-TargetUnavailable on simulated outages.
class MockTargetClient : public TargetClient {
public:
    explicit MockTargetClient(std::shared_ptr<MockTargetCore> core,
                              RetryPolicy policy = {2, 1});

    std::vector<GalleryItem> fetch_gallery() override;
    std::vector<ResultTriplet> search(const AdaptedQuery& query, int k) override;

private:
    MockTargetCore::Response with_retry(const std::function<MockTargetCore::Response()>& op);

    std::shared_ptr<MockTargetCore> core_;
    RetryPolicy policy_;
};

/// Serves a core over localhost HTTP on its own thread. port 0 binds any
/// free port. Throws Err::PortUnavailable when binding fails.
class MockTargetServer {
public:
    MockTargetServer(std::shared_ptr<MockTargetCore> core, const std::string& host = "127.0.0.1",
                     int port = 0);
    ~MockTargetServer();

    MockTargetServer(const MockTargetServer&) = delete;
    MockTargetServer& operator=(const MockTargetServer&) = delete;

    int port() const { return port_; }
    std::string base_url() const;
    void stop();

private:
    std::shared_ptr<MockTargetCore> core_;
    std::string host_;
    int port_ = 0;
    std::unique_ptr<class MockServerImpl> impl_;
};

}  // namespace syntheval
