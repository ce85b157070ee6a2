#include "syntheval/mock_providers.hpp"

#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "syntheval/errors.hpp"

using nlohmann::json;

namespace syntheval {

class ProviderServerImpl {
public:
    httplib::Server server;
    std::thread thread;
};

MockProviderServer::MockProviderServer(std::shared_ptr<EmbeddingProvider> embedder,
                                       std::shared_ptr<ChatProvider> chat, const std::string& host,
                                       int port)
    : embedder_(std::move(embedder)),
      chat_(std::move(chat)),
      host_(host),
      impl_(std::make_unique<ProviderServerImpl>()) {
    if (embedder_) {
        auto provider = embedder_;
        impl_->server.Post("/embed", [provider](const httplib::Request& req, httplib::Response& res) {
            json request;
            try {
                request = json::parse(req.body);
            } catch (const json::parse_error&) {
                res.status = 400;
                res.set_content(R"({"error":"malformed_request"})", "application/json");
                return;
            }
            if (request.value("model", "") != provider->model_id()) {
                res.status = 400;
                res.set_content(R"({"error":"unknown_model"})", "application/json");
                return;
            }
            const auto inputs = request.at("inputs").get<std::vector<std::string>>();
            const auto vectors = provider->embed(inputs);
            json response;
            response["dimension"] = provider->dimension();
            response["vectors"] = json::array();
            for (const auto& vec : vectors) response["vectors"].push_back(vec.values);
            res.set_content(response.dump(), "application/json");
        });
    }
    if (chat_) {
        auto provider = chat_;
        impl_->server.Post("/chat", [provider](const httplib::Request& req, httplib::Response& res) {
            json request;
            try {
                request = json::parse(req.body);
            } catch (const json::parse_error&) {
                res.status = 400;
                res.set_content(R"({"error":"malformed_request"})", "application/json");
                return;
            }
            std::vector<ChatMessage> messages;
            for (const auto& m : request.at("messages"))
                messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
            json response;
            response["content"] = provider->complete(messages);
            res.set_content(response.dump(), "application/json");
        });
    }

    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host_);
        if (port_ <= 0)
            throw EngineError(Err::PortUnavailable, "cannot bind provider server on " + host_);
    } else {
        if (!impl_->server.bind_to_port(host_, port))
            throw EngineError(Err::PortUnavailable,
                              "cannot bind provider server on " + host_ + ":" + std::to_string(port));
        port_ = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

MockProviderServer::~MockProviderServer() { stop(); }

void MockProviderServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
    impl_.reset();
}

std::string MockProviderServer::base_url() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace syntheval
