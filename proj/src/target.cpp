#include "syntheval/target.hpp"

#include <algorithm>
#include <cctype>
#include <set>

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

std::string rtrim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

std::string require_field(const json& node, const char* field, Err code, const char* what) {
    if (!node.contains(field) || !node[field].is_string() || node[field].get<std::string>().empty())
        throw EngineError(code, std::string(what) + " missing field '" + field + "'");
    return node[field].get<std::string>();
}

}  // namespace

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::text: return "text";
        case Modality::image: return "image";
        case Modality::specification: return "specification";
    }
    return "text";
}

Modality modality_from_name(const std::string& name) {
    if (name == "text") return Modality::text;
    if (name == "image") return Modality::image;
    if (name == "specification") return Modality::specification;
    throw EngineError(Err::UnsupportedModality, "unknown modality '" + name + "'");
}

std::vector<GalleryItem> parse_gallery_response(int status, const std::string& body) {
    if (status != 200)
        throw EngineError(Err::TargetUnavailable,
                          "gallery endpoint returned status " + std::to_string(status));
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw EngineError(Err::MalformedGallery, std::string("gallery is not JSON: ") + e.what());
    }
    if (!doc.contains("items") || !doc["items"].is_array())
        throw EngineError(Err::MalformedGallery, "gallery response lacks an items array");

    std::vector<GalleryItem> items;
    std::set<std::string> seen;
    for (const auto& node : doc["items"]) {
        GalleryItem item;
        item.item_id = require_field(node, "item_id", Err::MalformedGallery, "gallery item");
        item.category = node.value("category", "");
        item.description = require_field(node, "description", Err::MalformedGallery, "gallery item");
        item.image_ref = require_field(node, "image_ref", Err::MalformedGallery, "gallery item");
        item.spec_text = require_field(node, "spec_text", Err::MalformedGallery, "gallery item");
        if (!seen.insert(item.item_id).second)
            throw EngineError(Err::MalformedGallery, "duplicate gallery item_id '" + item.item_id + "'");
        items.push_back(std::move(item));
    }
    if (items.empty())
        throw EngineError(Err::MalformedGallery, "gallery is empty; the service is misconfigured");

    std::sort(items.begin(), items.end(),
              [](const GalleryItem& a, const GalleryItem& b) { return a.item_id < b.item_id; });
    return items;
}

std::vector<ResultTriplet> parse_search_response(int status, const std::string& body) {
    if (status == 404) throw EngineError(Err::UnknownItem, "search: " + body);
    if (status == 400) {
        try {
            json err = json::parse(body);
            if (err.value("error", "") == "unsupported_modality")
                throw EngineError(Err::UnsupportedModality, "search rejected the modality");
        } catch (const json::parse_error&) {
        }
        throw EngineError(Err::MalformedResult, "search rejected the request: " + body);
    }
    if (status != 200)
        throw EngineError(Err::TargetUnavailable,
                          "search endpoint returned status " + std::to_string(status));

    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw EngineError(Err::MalformedResult, std::string("search response is not JSON: ") + e.what());
    }
    if (!doc.contains("results") || !doc["results"].is_array())
        throw EngineError(Err::MalformedResult, "search response lacks a results array");

    std::vector<ResultTriplet> results;
    for (const auto& node : doc["results"]) {
        // Triplet completeness: a hit missing any component is malformed.
        ResultTriplet triplet;
        triplet.image_ref = require_field(node, "image_ref", Err::MalformedResult, "search result");
        triplet.description = require_field(node, "description", Err::MalformedResult, "search result");
        triplet.spec_text = require_field(node, "spec_text", Err::MalformedResult, "search result");
        if (node.contains("score") && node["score"].is_number())
            triplet.score = node["score"].get<double>();
        results.push_back(std::move(triplet));
    }
    return results;
}

HttpTargetClient::HttpTargetClient(std::string base_url, RetryPolicy policy)
    : base_url_(std::move(base_url)), policy_(policy) {}

std::vector<GalleryItem> HttpTargetClient::fetch_gallery() {
    HttpResult result =
        http_request(base_url_, "GET", "/gallery", std::nullopt, policy_, Err::TargetUnavailable);
    return parse_gallery_response(result.status, result.body);
}

std::vector<ResultTriplet> HttpTargetClient::search(const AdaptedQuery& query, int k) {
    if (k < 1) throw EngineError(Err::ConfigInvalid, "search requires k >= 1");
    json request;
    request["modality"] = modality_name(query.modality);
    request["query"] = query.payload;
    request["k"] = k;
    HttpResult result =
        http_request(base_url_, "POST", "/search", request.dump(), policy_, Err::TargetUnavailable);
    return parse_search_response(result.status, result.body);
}

AdaptedQuery adapt_text_query(const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) throw EngineError(Err::EmptyQuery, "text query empty after trim");

    // First clause: up to and including the first sentence terminator or
    // semicolon; a newline ends the clause without being kept.
    std::string clause = text;
    const std::size_t boundary = text.find_first_of(".!?;\n");
    if (boundary != std::string::npos)
        clause = rtrim(text.substr(0, text[boundary] == '\n' ? boundary : boundary + 1));

    if (clause.size() <= kTextQueryLimit) return {Modality::text, clause};

    // Clause too long: cut at the last word boundary within the limit.
    std::size_t cut = kTextQueryLimit;
    if (!std::isspace(static_cast<unsigned char>(clause[kTextQueryLimit]))) {
        cut = kTextQueryLimit;
        while (cut > 0 && !std::isspace(static_cast<unsigned char>(clause[cut - 1]))) --cut;
        if (cut == 0) cut = kTextQueryLimit;  // single oversized token: hard cut, never empty
    }
    return {Modality::text, rtrim(clause.substr(0, cut))};
}

AdaptedQuery synthesize_reference_query(const std::string& described,
                                        const std::vector<GalleryItem>& gallery,
                                        EmbeddingProvider& provider, Modality modality) {
    if (gallery.empty()) throw EngineError(Err::EmptyGallery, "cannot synthesize against an empty gallery");

    std::vector<const GalleryItem*> ordered;
    ordered.reserve(gallery.size());
    for (const auto& item : gallery) ordered.push_back(&item);
    std::sort(ordered.begin(), ordered.end(),
              [](const GalleryItem* a, const GalleryItem* b) { return a->item_id < b->item_id; });

    std::vector<std::string> inputs;
    inputs.push_back(described);
    for (const auto* item : ordered) inputs.push_back(item->description);
    auto vectors = provider.embed(inputs);

    const EmbeddingVector& query_vec = vectors[0];
    std::size_t best = 0;
    double best_score = -2.0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const double score = cosine(query_vec, vectors[i + 1]);
        if (score > best_score) {  // strict: ties keep the smaller item_id
            best_score = score;
            best = i;
        }
    }
    return {modality, ordered[best]->item_id};
}

}  // namespace syntheval
