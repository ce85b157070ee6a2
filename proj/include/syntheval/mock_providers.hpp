#pragma once

#include <memory>
#include <string>

#include "syntheval/chat.hpp"
#include "syntheval/embedding.hpp"

namespace syntheval {

/// Serves the provider wire contracts over localhost HTTP from any
/// in-process providers (normally the deterministic mocks):
///   POST /embed {"model","inputs"} -> {"dimension","vectors"}
///   POST /chat  {"model","messages","seed"} -> {"content"}
/// Requests naming a different model get 400.
class MockProviderServer {
public:
    MockProviderServer(std::shared_ptr<EmbeddingProvider> embedder,
                       std::shared_ptr<ChatProvider> chat, const std::string& host = "127.0.0.1",
                       int port = 0);
    ~MockProviderServer();

    MockProviderServer(const MockProviderServer&) = delete;
    MockProviderServer& operator=(const MockProviderServer&) = delete;

    int port() const { return port_; }
    std::string base_url() const;
    void stop();

private:
    std::shared_ptr<EmbeddingProvider> embedder_;
    std::shared_ptr<ChatProvider> chat_;
    std::string host_;
    int port_ = 0;
    std::unique_ptr<class ProviderServerImpl> impl_;
};

}  // namespace syntheval
