#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ltm/series.hpp"

namespace ltm {
namespace kdtp {

constexpr int kEmbedDim = 64;
constexpr uint64_t kEmbedderSeed = 0x1d7b1ULL;
constexpr int kPromptMaxWords = 128;   // cap on generated prompt length, word tokens
constexpr int kExcerptChars = 200;

struct Document {
    std::string id;
    std::string text;
    std::vector<std::string> keywords;  // sorted unique lowercase tokens
    std::vector<double> embedding;      // unit L2 norm, length kEmbedDim
};

struct ScoredDocument {
    const Document* doc;
    double score;
};

// Deterministic hashing embedder: each token hashes to a fixed gaussian
// vector; a text embeds to the L2-normalized mean of its token vectors.
std::vector<std::string> tokenize(const std::string& text);
std::vector<double> token_vector(const std::string& token, uint64_t seed = kEmbedderSeed);
std::vector<double> embed_text(const std::string& text, uint64_t seed = kEmbedderSeed);

class DocumentIndex {
  public:
    static DocumentIndex build(const std::vector<std::pair<std::string, std::string>>& corpus,
                               uint64_t seed = kEmbedderSeed);

    // Documents ranked by descending cosine similarity to the query, ties
    // broken by ascending id; returns min(k, size) entries.
    std::vector<ScoredDocument> retrieve(const std::string& query, int k) const;

    size_t size() const { return docs_.size(); }
    int skipped_empty() const { return skipped_empty_; }
    const std::vector<Document>& documents() const { return docs_; }
    uint64_t embedder_seed() const { return seed_; }

  private:
    std::vector<Document> docs_;
    int skipped_empty_ = 0;
    uint64_t seed_ = kEmbedderSeed;
};

enum class Trend { kIncreasing, kDecreasing, kFlat };
const char* trend_name(Trend t);

struct SeriesDescriptor {
    Trend trend = Trend::kFlat;
    double global_min = 0.0;
    int global_min_index = 0;
    double global_max = 0.0;
    int global_max_index = 0;
    double mean = 0.0;
    double std = 0.0;
    std::optional<int> dominant_period;
    std::vector<int> outlier_indices;  // |z| > 3
};

// Summary of channel 0: least-squares trend, extremes, autocorrelation
// period (lags [2, L/2], floor 0.3) and |z|>3 outliers.
SeriesDescriptor describe_series(const TimeSeries& x);

struct EnhancedPrompt {
    std::string text;
    std::vector<std::string> source_doc_ids;
    SeriesDescriptor descriptor;
    std::string query;
};

// Deterministic template: task line (query verbatim), descriptor sentence,
// then ranked excerpts of kExcerptChars; total length capped at
// kPromptMaxWords whitespace tokens (the task line is never truncated).
EnhancedPrompt generate_enhanced_prompt(const std::string& query,
                                        const std::vector<ScoredDocument>& retrieved,
                                        const SeriesDescriptor& desc);

// Corpus loading: a directory of *.txt files (id = file stem, sorted), or a
// JSON-lines file with {"id": ..., "text": ...} per line.
std::vector<std::pair<std::string, std::string>> load_corpus(const std::string& path);

}  // namespace kdtp
}  // namespace ltm
