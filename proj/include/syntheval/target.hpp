#pragma once

#include <optional>
#include <string>
#include <vector>

#include "syntheval/embedding.hpp"
#include "syntheval/http_util.hpp"

namespace syntheval {

enum class Modality { text, image, specification };

const char* modality_name(Modality m);
Modality modality_from_name(const std::string& name);

struct GalleryItem {
    std::string item_id;
    std::string category;
    std::string description;
    std::string image_ref;  // opaque reference
    std::string spec_text;
};

/// One search hit: all three components always present.
struct ResultTriplet {
    std::string image_ref;
    std::string description;
    std::string spec_text;
    std::optional<double> score;
};

struct AdaptedQuery {
    Modality modality = Modality::text;
    std::string payload;  // truncated text, or a gallery item_id for image/spec
};

/// Maximum text-query length the evaluated service accepts.
inline constexpr std::size_t kTextQueryLimit = 120;

/// Client contract for the retrieval service under evaluation.
class TargetClient {
public:
    virtual ~TargetClient() = default;

    /// Full gallery snapshot, item_id ascending. Throws
    /// Err::TargetUnavailable, Err::MalformedGallery (empty or duplicate ids).
    virtual std::vector<GalleryItem> fetch_gallery() = 0;

    /// Up to k service-ranked triplets. Throws Err::TargetUnavailable,
    /// Err::UnknownItem, Err::UnsupportedModality, Err::MalformedResult.
    virtual std::vector<ResultTriplet> search(const AdaptedQuery& query, int k) = 0;
};

/// Wire-contract client:
///   GET  /gallery -> {"items":[{"item_id","category","description","image_ref","spec_text"},...]}
///   POST /search  {"modality":"text"|"image"|"specification","query":"...","k":N}
///                 -> {"results":[{"image_ref","description","spec_text","score"},...]}
/// Transient transport failures retried per policy, then Err::TargetUnavailable.
class HttpTargetClient : public TargetClient {
public:
    explicit HttpTargetClient(std::string base_url, RetryPolicy policy = {});

    std::vector<GalleryItem> fetch_gallery() override;
    std::vector<ResultTriplet> search(const AdaptedQuery& query, int k) override;

private:
    std::string base_url_;
    RetryPolicy policy_;
};

/// Shared response interpretation, used by the HTTP client and the
/// in-process mock client so both behave identically.
std::vector<GalleryItem> parse_gallery_response(int status, const std::string& body);
std::vector<ResultTriplet> parse_search_response(int status, const std::string& body);

/// Truncates free text to a leading keyword clause of at most 120
/// characters: cut at the first sentence terminator, semicolon, or
/// newline; if that clause is still too long, cut at the last word
/// boundary within the limit. Never returns empty; never splits a word
/// (unless a single token exceeds the limit outright). Idempotent.
/// Throws Err::EmptyQuery when raw is empty after trimming.
AdaptedQuery adapt_text_query(const std::string& raw);

/// Picks the gallery item whose description embeds closest (cosine) to
/// the evaluator's described query; ties broken by item_id ascending.
/// The payload is that item's id. Throws Err::EmptyGallery.
AdaptedQuery synthesize_reference_query(const std::string& described,
                                        const std::vector<GalleryItem>& gallery,
                                        EmbeddingProvider& provider, Modality modality);

}  // namespace syntheval
