#include "syntheval/embedding.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "syntheval/errors.hpp"
#include "syntheval/hashing.hpp"
#include "syntheval/http_util.hpp"

using nlohmann::json;

namespace syntheval {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        throw EngineError(Err::DimensionMismatch, "cosine over dimensions " +
                                                      std::to_string(a.dimension()) + " and " +
                                                      std::to_string(b.dimension()));
    double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        norm_a += a.values[i] * a.values[i];
        norm_b += b.values[i] * b.values[i];
    }
    if (norm_a == 0.0 || norm_b == 0.0)
        throw EngineError(Err::ZeroVector, "cosine undefined for a zero vector");
    return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

HashEmbeddingProvider::HashEmbeddingProvider(std::string model_id, std::size_t dimension,
                                             std::uint64_t seed)
    : model_id_(std::move(model_id)), dimension_(dimension), seed_(seed) {}

EmbeddingVector HashEmbeddingProvider::embed_one(const std::string& input) const {
    // Seed from (model id, seed, input); expand with splitmix64. Pure
    // integer-and-double arithmetic, so vectors are bit-identical on any
    // platform.
    std::uint64_t state = fnv1a64(input, fnv1a64(model_id_) ^ (seed_ * 0x9e3779b97f4a7c15ULL));
    EmbeddingVector vec;
    vec.values.resize(dimension_);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) {
        const std::uint64_t bits = splitmix64(state);
        // 53 high bits -> uniform double in [0,1), shifted to [-1,1)
        const double u = static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);
        vec.values[i] = 2.0 * u - 1.0;
        norm_sq += vec.values[i] * vec.values[i];
    }
    if (norm_sq < 1e-24) {
        vec.values[0] = 1.0;
        norm_sq = 1.0;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (auto& v : vec.values) v *= inv;
    return vec;
}

std::vector<EmbeddingVector> HashEmbeddingProvider::embed(const std::vector<std::string>& inputs) {
    std::vector<EmbeddingVector> out;
    out.reserve(inputs.size());
    for (const auto& input : inputs) out.push_back(embed_one(input));
    return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, std::string model_id,
                                             int max_retries, int base_backoff_ms,
                                             std::string bearer_token)
    : base_url_(std::move(base_url)),
      model_id_(std::move(model_id)),
      max_retries_(max_retries),
      base_backoff_ms_(base_backoff_ms),
      bearer_token_(std::move(bearer_token)) {}

std::size_t HttpEmbeddingProvider::dimension() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (dimension_) return *dimension_;
    }
    embed({"dimension probe"});
    std::lock_guard<std::mutex> lock(mutex_);
    return *dimension_;
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(const std::vector<std::string>& inputs) {
    json request;
    request["model"] = model_id_;
    request["inputs"] = inputs;

    RetryPolicy policy{max_retries_, base_backoff_ms_};
    HttpResult result = http_request(base_url_, "POST", "/embed", request.dump(), policy,
                                     Err::ProviderUnavailable, bearer_token_);
    if (result.status != 200)
        throw EngineError(Err::ProviderUnavailable,
                          "embed endpoint returned status " + std::to_string(result.status));

    json doc;
    try {
        doc = json::parse(result.body);
    } catch (const json::parse_error& e) {
        throw EngineError(Err::ProviderUnavailable, std::string("malformed embed response: ") + e.what());
    }
    if (!doc.contains("dimension") || !doc.contains("vectors") || !doc["vectors"].is_array())
        throw EngineError(Err::ProviderUnavailable, "embed response missing dimension/vectors");

    const auto reported = doc["dimension"].get<std::size_t>();
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (dimension_ && *dimension_ != reported)
            throw EngineError(Err::DimensionMismatch,
                              "provider changed dimension from " + std::to_string(*dimension_) +
                                  " to " + std::to_string(reported));
        dimension_ = reported;
    }

    if (doc["vectors"].size() != inputs.size())
        throw EngineError(Err::ProviderUnavailable, "embed response count mismatch");

    std::vector<EmbeddingVector> out;
    out.reserve(inputs.size());
    for (const auto& row : doc["vectors"]) {
        EmbeddingVector vec;
        vec.values = row.get<std::vector<double>>();
        if (vec.values.size() != reported)
            throw EngineError(Err::DimensionMismatch,
                              "provider returned a vector of length " +
                                  std::to_string(vec.values.size()) + ", declared " +
                                  std::to_string(reported));
        out.push_back(std::move(vec));
    }
    return out;
}

CachingEmbeddingProvider::CachingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner,
                                                   std::string cache_path)
    : inner_(std::move(inner)), cache_path_(std::move(cache_path)) {
    load();
}

CachingEmbeddingProvider::~CachingEmbeddingProvider() {
    try {
        flush();
    } catch (...) {
        // best effort on teardown
    }
}

void CachingEmbeddingProvider::load() {
    std::ifstream in(cache_path_);
    if (!in) return;
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error&) {
        return;  // stale or truncated cache: rebuild from scratch
    }
    if (!doc.contains("entries")) return;
    for (const auto& [fp, inputs] : doc["entries"].items())
        for (const auto& [input, values] : inputs.items())
            entries_[fp][input] = EmbeddingVector{values.get<std::vector<double>>()};
}

void CachingEmbeddingProvider::flush() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!dirty_) return;
    json doc;
    doc["entries"] = json::object();
    for (const auto& [fp, inputs] : entries_) {
        json per = json::object();
        for (const auto& [input, vec] : inputs) per[input] = vec.values;
        doc["entries"][fp] = std::move(per);
    }
    const std::string tmp = cache_path_ + ".tmp";
    std::ofstream out(tmp);
    out << doc.dump();
    out.close();
    std::filesystem::rename(tmp, cache_path_);
    dirty_ = false;
}

std::vector<EmbeddingVector> CachingEmbeddingProvider::embed(const std::vector<std::string>& inputs) {
    const std::string fp = inner_->fingerprint();

    std::vector<EmbeddingVector> out(inputs.size());
    std::vector<std::size_t> miss_positions;
    std::vector<std::string> miss_inputs;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto& per_fp = entries_[fp];
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto it = per_fp.find(inputs[i]);
            if (it != per_fp.end()) {
                out[i] = it->second;
                ++hits_;
            } else {
                miss_positions.push_back(i);
                miss_inputs.push_back(inputs[i]);
            }
        }
    }

    if (!miss_inputs.empty()) {
        auto fresh = inner_->embed(miss_inputs);
        std::lock_guard<std::mutex> lock(mutex_);
        auto& per_fp = entries_[fp];
        for (std::size_t j = 0; j < miss_positions.size(); ++j) {
            out[miss_positions[j]] = fresh[j];
            per_fp[miss_inputs[j]] = fresh[j];
        }
        dirty_ = true;
    }
    return out;
}

}  // namespace syntheval
