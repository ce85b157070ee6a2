#include "syntheval/mock_target.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "syntheval/errors.hpp"

using nlohmann::json;

namespace syntheval {

namespace {

std::set<std::string> tokenize_lower(const std::string& text) {
    std::set<std::string> tokens;
    std::string current;
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            current += static_cast<char>(std::tolower(c));
        } else if (!current.empty()) {
            tokens.insert(current);
            current.clear();
        }
    }
    if (!current.empty()) tokens.insert(current);
    return tokens;
}

json error_body(const char* code) { return json{{"error", code}}; }

}  // namespace

MockTargetConfig load_mock_gallery_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EngineError(Err::ConfigInvalid, "cannot open gallery file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw EngineError(Err::MalformedGallery, std::string("gallery file: ") + e.what());
    }
    MockTargetConfig config;
    for (const auto& node : doc.at("items")) {
        GalleryItem item;
        item.item_id = node.at("item_id").get<std::string>();
        item.category = node.value("category", "");
        item.description = node.at("description").get<std::string>();
        item.image_ref = node.at("image_ref").get<std::string>();
        item.spec_text = node.at("spec_text").get<std::string>();
        config.gallery.push_back(std::move(item));
    }
    return config;
}

MockTargetCore::MockTargetCore(MockTargetConfig config)
    : config_(std::move(config)), embedder_("mock-target-embed", 64, 0) {
    std::set<std::string> seen;
    for (const auto& item : config_.gallery)
        if (!seen.insert(item.item_id).second)
            throw EngineError(Err::MalformedGallery,
                              "mock gallery has duplicate item_id '" + item.item_id + "'");
}

bool MockTargetCore::outage() {
    const int served = request_count_.fetch_add(1) + 1;
    if (config_.latency_ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.latency_ms));
    return config_.fail_after && served > *config_.fail_after;
}

MockTargetCore::Response MockTargetCore::handle_gallery() {
    if (outage()) return {503, error_body("simulated_outage").dump()};

    json doc;
    doc["items"] = json::array();
    for (const auto& item : config_.gallery)
        doc["items"].push_back({{"item_id", item.item_id},
                                {"category", item.category},
                                {"description", item.description},
                                {"image_ref", item.image_ref},
                                {"spec_text", item.spec_text}});
    return {200, doc.dump()};
}

MockTargetCore::Response MockTargetCore::handle_search(const std::string& request_json) {
    if (outage()) return {503, error_body("simulated_outage").dump()};

    json request;
    try {
        request = json::parse(request_json);
    } catch (const json::parse_error&) {
        return {400, error_body("malformed_request").dump()};
    }
    if (!request.contains("modality") || !request["modality"].is_string() ||
        !request.contains("query") || !request["query"].is_string() || !request.contains("k") ||
        !request["k"].is_number_integer())
        return {400, error_body("malformed_request").dump()};

    const std::string modality = request["modality"].get<std::string>();
    const std::string query = request["query"].get<std::string>();
    const int k = request["k"].get<int>();
    if (modality != "text" && modality != "image" && modality != "specification")
        return {400, error_body("unsupported_modality").dump()};
    if (k < 1) return {400, error_body("malformed_request").dump()};

    // image/spec queries reference a gallery item; score against its description.
    std::string query_text = query;
    if (modality != "text") {
        const GalleryItem* anchor = nullptr;
        for (const auto& item : config_.gallery)
            if (item.item_id == query) anchor = &item;
        if (!anchor) return {404, error_body("unknown_item").dump()};
        query_text = anchor->description;
    }

    struct Hit {
        const GalleryItem* item;
        double score;
    };
    std::vector<Hit> hits;
    hits.reserve(config_.gallery.size());
    if (config_.scoring == MockTargetConfig::Scoring::token_overlap) {
        const auto query_tokens = tokenize_lower(query_text);
        for (const auto& item : config_.gallery) {
            const auto item_tokens = tokenize_lower(item.description);
            std::size_t shared = 0;
            for (const auto& token : query_tokens)
                if (item_tokens.count(token)) ++shared;
            hits.push_back({&item, static_cast<double>(shared)});
        }
    } else {
        const EmbeddingVector query_vec = embedder_.embed_one(query_text);
        for (const auto& item : config_.gallery)
            hits.push_back({&item, cosine(query_vec, embedder_.embed_one(item.description))});
    }

    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.item->item_id < b.item->item_id;
    });
    if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));

    json doc;
    doc["results"] = json::array();
    for (const auto& hit : hits)
        doc["results"].push_back({{"image_ref", hit.item->image_ref},
                                  {"description", hit.item->description},
                                  {"spec_text", hit.item->spec_text},
                                  {"score", hit.score}});
    return {200, doc.dump()};
}

MockTargetClient::MockTargetClient(std::shared_ptr<MockTargetCore> core, RetryPolicy policy)
    : core_(std::move(core)), policy_(policy) {}

MockTargetCore::Response MockTargetClient::with_retry(
    const std::function<MockTargetCore::Response()>& op) {
    MockTargetCore::Response response;
    for (int attempt = 0; attempt <= policy_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(policy_.base_backoff_ms) * (1 << (attempt - 1)));
        response = op();
        if (response.status < 500) return response;
    }
    throw EngineError(Err::TargetUnavailable, "mock target failing after " +
                                                  std::to_string(policy_.max_retries + 1) +
                                                  " attempts (status " +
                                                  std::to_string(response.status) + ")");
}

std::vector<GalleryItem> MockTargetClient::fetch_gallery() {
    auto response = with_retry([this] { return core_->handle_gallery(); });
    return parse_gallery_response(response.status, response.body);
}

std::vector<ResultTriplet> MockTargetClient::search(const AdaptedQuery& query, int k) {
    if (k < 1) throw EngineError(Err::ConfigInvalid, "search requires k >= 1");
    json request;
    request["modality"] = modality_name(query.modality);
    request["query"] = query.payload;
    request["k"] = k;
    const std::string body = request.dump();
    auto response = with_retry([this, &body] { return core_->handle_search(body); });
    return parse_search_response(response.status, response.body);
}

class MockServerImpl {
public:
    httplib::Server server;
    std::thread thread;
};

MockTargetServer::MockTargetServer(std::shared_ptr<MockTargetCore> core, const std::string& host,
                                   int port)
    : core_(std::move(core)), host_(host), impl_(std::make_unique<MockServerImpl>()) {
    auto core_ptr = core_;
    impl_->server.Get("/gallery", [core_ptr](const httplib::Request&, httplib::Response& res) {
        auto response = core_ptr->handle_gallery();
        res.status = response.status;
        res.set_content(response.body, "application/json");
    });
    impl_->server.Post("/search", [core_ptr](const httplib::Request& req, httplib::Response& res) {
        auto response = core_ptr->handle_search(req.body);
        res.status = response.status;
        res.set_content(response.body, "application/json");
    });

    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host_);
        if (port_ <= 0) throw EngineError(Err::PortUnavailable, "cannot bind mock target on " + host_);
    } else {
        if (!impl_->server.bind_to_port(host_, port))
            throw EngineError(Err::PortUnavailable,
                              "cannot bind mock target on " + host_ + ":" + std::to_string(port));
        port_ = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

MockTargetServer::~MockTargetServer() { stop(); }

void MockTargetServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
    impl_.reset();
}

std::string MockTargetServer::base_url() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace syntheval
