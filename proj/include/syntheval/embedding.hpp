#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace syntheval {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
};

/// dot(a,b) / (|a|*|b|). Throws Err::DimensionMismatch on unequal
/// dimensions, Err::ZeroVector when either vector has zero norm.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::string model_id() const = 0;
    virtual std::size_t dimension() = 0;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs) = 0;

    /// Model id + dimension; recorded in indexes and caches so a provider
    /// swap is detectable.
    std::string fingerprint() { return model_id() + ":" + std::to_string(dimension()); }
};

/// Deterministic mock: hash-seeded pseudo-random unit vectors per input
/// string. Bit-reproducible across runs and platforms (no libc RNG).
/// Identical inputs always embed to identical vectors.
class HashEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::string model_id = "hash-mock-v1", std::size_t dimension = 64,
                                   std::uint64_t seed = 0);

    std::string model_id() const override { return model_id_; }
    std::size_t dimension() override { return dimension_; }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs) override;

    EmbeddingVector embed_one(const std::string& input) const;

private:
    std::string model_id_;
    std::size_t dimension_;
    std::uint64_t seed_;
};

/// Client for the embedding wire contract:
///   POST /embed {"model":"<id>","inputs":["..."]}
///     -> {"dimension":N,"vectors":[[...],...]}
/// Transient transport failures are retried (exponential backoff), then
/// surfaced as Err::ProviderUnavailable. A response vector of unexpected
/// length raises Err::DimensionMismatch.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string base_url, std::string model_id, int max_retries = 2,
                          int base_backoff_ms = 100, std::string bearer_token = "");

    std::string model_id() const override { return model_id_; }
    std::size_t dimension() override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs) override;

private:
    std::string base_url_;
    std::string model_id_;
    int max_retries_;
    int base_backoff_ms_;
    std::string bearer_token_;
    std::optional<std::size_t> dimension_;
    std::mutex mutex_;
};

/// Wraps a provider with a (fingerprint, input string) keyed cache,
/// persisted as a JSON file beside the corpus. Batch runs re-embed the
/// same questions per evaluator; the cache absorbs that.
class CachingEmbeddingProvider : public EmbeddingProvider {
public:
    CachingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner, std::string cache_path);
    ~CachingEmbeddingProvider() override;

    std::string model_id() const override { return inner_->model_id(); }
    std::size_t dimension() override { return inner_->dimension(); }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& inputs) override;

    void flush();
    std::size_t hit_count() const { return hits_; }

private:
    void load();

    std::shared_ptr<EmbeddingProvider> inner_;
    std::string cache_path_;
    std::map<std::string, std::map<std::string, EmbeddingVector>> entries_;  // fingerprint -> input -> vec
    std::mutex mutex_;
    bool dirty_ = false;
    std::size_t hits_ = 0;
};

}  // namespace syntheval
