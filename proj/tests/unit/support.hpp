#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "syntheval/corpus.hpp"
#include "syntheval/embedding.hpp"
#include "syntheval/target.hpp"

namespace testsupport {

inline std::string fixtures_dir() { return SYNTHEVAL_FIXTURES_DIR; }
inline std::string assets_dir() { return SYNTHEVAL_ASSETS_DIR; }
inline std::string fixture(const std::string& name) { return fixtures_dir() + "/" + name; }

struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& prefix) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               (prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Independent of syntheval::cosine; used as the scoring oracle.
inline double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::string random_word(std::mt19937_64& rng, int min_len = 2, int max_len = 9) {
    std::uniform_int_distribution<int> len(min_len, max_len);
    std::uniform_int_distribution<int> ch(0, 25);
    std::string word;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) word += static_cast<char>('a' + ch(rng));
    return word;
}

inline std::string random_sentence(std::mt19937_64& rng, int words) {
    std::ostringstream out;
    for (int i = 0; i < words; ++i) out << (i ? " " : "") << random_word(rng);
    return out.str();
}

inline syntheval::ExcerptCorpus make_random_corpus(std::mt19937_64& rng, int n_excerpts,
                                                   int n_codes, int n_participants) {
    syntheval::ExcerptCorpus corpus;
    for (int c = 0; c < n_codes; ++c)
        corpus.codebook.categories.push_back("code" + std::to_string(c + 1));

    std::uniform_int_distribution<int> participant(1, n_participants);
    std::uniform_int_distribution<int> code(0, n_codes - 1);
    std::uniform_int_distribution<int> n_labels(1, std::min(3, n_codes));
    std::uniform_int_distribution<int> quote_words(3, 12);
    for (int i = 0; i < n_excerpts; ++i) {
        syntheval::Excerpt ex;
        ex.excerpt_id = "x" + std::to_string(i + 1);
        ex.participant_id = "P" + std::to_string(participant(rng));
        const int labels = n_labels(rng);
        for (int j = 0; j < labels; ++j)
            ex.code_labels.push_back(corpus.codebook.categories[static_cast<std::size_t>(code(rng))]);
        ex.quote_text = random_sentence(rng, quote_words(rng));
        corpus.excerpts.push_back(std::move(ex));
    }
    return corpus;
}

// Pool over participants that actually appear in the corpus.
inline syntheval::ParticipantPool random_pool(std::mt19937_64& rng,
                                              const syntheval::ExcerptCorpus& corpus,
                                              std::size_t max_size) {
    std::vector<std::string> participants;
    for (const auto& ex : corpus.excerpts) {
        bool seen = false;
        for (const auto& p : participants)
            if (p == ex.participant_id) seen = true;
        if (!seen) participants.push_back(ex.participant_id);
    }
    std::shuffle(participants.begin(), participants.end(), rng);
    std::uniform_int_distribution<std::size_t> size(1, std::min(max_size, participants.size()));
    syntheval::ParticipantPool pool;
    pool.persona_id = "random_pool";
    const std::size_t n = size(rng);
    for (std::size_t i = 0; i < n; ++i) pool.participant_ids.insert(participants[i]);
    return pool;
}

inline std::vector<syntheval::GalleryItem> make_scale_gallery(int n_items, int n_categories) {
    std::vector<syntheval::GalleryItem> gallery;
    gallery.reserve(static_cast<std::size_t>(n_items));
    const char* kNouns[] = {"heatmap", "ideogram", "barchart", "linechart", "circos",
                            "matrix",  "track",    "scatter",  "arcplot",   "dotplot"};
    for (int i = 0; i < n_items; ++i) {
        syntheval::GalleryItem item;
        std::ostringstream id;
        id << "g" << std::setw(5) << std::setfill('0') << i + 1;
        item.item_id = id.str();
        item.category = "cat" + std::to_string(i % n_categories + 1);
        item.description = std::string(kNouns[i % 10]) + " view number " + std::to_string(i + 1) +
                           " for category " + std::to_string(i % n_categories + 1);
        item.image_ref = "img/" + item.item_id + ".png";
        item.spec_text = "{\"mark\":\"" + std::string(kNouns[(i + 3) % 10]) + "\",\"row\":" +
                         std::to_string(i) + "}";
        gallery.push_back(std::move(item));
    }
    return gallery;
}

}  // namespace testsupport
