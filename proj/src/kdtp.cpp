#include "ltm/kdtp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace ltm {
namespace kdtp {

namespace {

std::string fmt_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void l2_normalize(std::vector<double>& v) {
    double n = std::sqrt(dot(v, v));
    if (n > 0.0)
        for (auto& x : v) x /= n;
}

int count_words(const std::string& s) {
    int n = 0;
    bool in_word = false;
    for (char c : s) {
        const bool ws = c == ' ' || c == '\n' || c == '\t';
        if (!ws && !in_word) ++n;
        in_word = !ws;
    }
    return n;
}

// Keeps at most `budget` whitespace tokens, cutting at a word boundary.
std::string truncate_words(const std::string& s, int budget) {
    if (budget <= 0) return "";
    int n = 0;
    bool in_word = false;
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        const bool ws = c == ' ' || c == '\n' || c == '\t';
        if (!ws && !in_word) {
            ++n;
            if (n > budget) return s.substr(0, i);
        }
        in_word = !ws;
    }
    return s;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> toks;
    std::string cur;
    for (char c : text) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur += static_cast<char>(std::tolower(u));
        } else if (!cur.empty()) {
            toks.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) toks.push_back(cur);
    return toks;
}

std::vector<double> token_vector(const std::string& token, uint64_t seed) {
    Rng rng(fnv1a64(token) ^ seed);
    std::vector<double> v(kEmbedDim);
    for (auto& x : v) x = rng.normal();
    return v;
}

std::vector<double> embed_text(const std::string& text, uint64_t seed) {
    const auto toks = tokenize(text);
    std::vector<double> acc(kEmbedDim, 0.0);
    for (const auto& t : toks) {
        const auto tv = token_vector(t, seed);
        for (int i = 0; i < kEmbedDim; ++i) acc[i] += tv[i];
    }
    if (!toks.empty())
        for (auto& x : acc) x /= static_cast<double>(toks.size());
    l2_normalize(acc);
    return acc;
}

DocumentIndex DocumentIndex::build(const std::vector<std::pair<std::string, std::string>>& corpus,
                                   uint64_t seed) {
    if (corpus.empty()) throw std::runtime_error("build_index: empty corpus");
    DocumentIndex index;
    index.seed_ = seed;
    std::set<std::string> seen_ids;
    for (const auto& [id, text] : corpus) {
        const auto toks = tokenize(text);
        if (toks.empty()) {
            ++index.skipped_empty_;
            continue;
        }
        if (!seen_ids.insert(id).second)
            throw std::runtime_error("build_index: duplicate document id '" + id + "'");
        Document d;
        d.id = id;
        d.text = text;
        std::set<std::string> kw(toks.begin(), toks.end());
        d.keywords.assign(kw.begin(), kw.end());
        d.embedding = embed_text(text, seed);
        index.docs_.push_back(std::move(d));
    }
    if (index.docs_.empty()) throw std::runtime_error("build_index: corpus has no non-empty documents");
    return index;
}

std::vector<ScoredDocument> DocumentIndex::retrieve(const std::string& query, int k) const {
    if (k < 1) throw std::runtime_error("retrieve: k must be >= 1");
    if (docs_.empty()) throw std::runtime_error("retrieve: empty index");
    if (tokenize(query).empty())
        throw std::runtime_error("retrieve: query is empty after tokenization");
    const auto q = embed_text(query, seed_);
    std::vector<ScoredDocument> scored;
    scored.reserve(docs_.size());
    for (const auto& d : docs_) scored.push_back({&d, dot(q, d.embedding)});
    std::sort(scored.begin(), scored.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc->id < b.doc->id;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<size_t>(k));
    return scored;
}

const char* trend_name(Trend t) {
    switch (t) {
        case Trend::kIncreasing: return "increasing";
        case Trend::kDecreasing: return "decreasing";
        default: return "flat";
    }
}

SeriesDescriptor describe_series(const TimeSeries& x) {
    const int L = x.length;
    if (L < 4) throw std::runtime_error("describe_series: series length must be >= 4");
    const double* v = x.channel(0);

    SeriesDescriptor d;
    double mu = 0.0;
    for (int t = 0; t < L; ++t) mu += v[t];
    mu /= L;
    double var = 0.0;
    for (int t = 0; t < L; ++t) var += (v[t] - mu) * (v[t] - mu);
    var /= L;
    d.mean = mu;
    d.std = std::sqrt(var);

    d.global_min = v[0];
    d.global_max = v[0];
    for (int t = 1; t < L; ++t) {
        if (v[t] < d.global_min) {
            d.global_min = v[t];
            d.global_min_index = t;
        }
        if (v[t] > d.global_max) {
            d.global_max = v[t];
            d.global_max_index = t;
        }
    }

    // Least-squares slope against t = 0..L-1.
    const double tbar = (L - 1) / 2.0;
    double sxy = 0.0, sxx = 0.0;
    for (int t = 0; t < L; ++t) {
        sxy += (t - tbar) * (v[t] - mu);
        sxx += (t - tbar) * (t - tbar);
    }
    const double slope = sxy / sxx;
    const double flat_eps = 1e-3 * d.std / L;
    if (std::fabs(slope) <= flat_eps)
        d.trend = Trend::kFlat;
    else
        d.trend = slope > 0.0 ? Trend::kIncreasing : Trend::kDecreasing;

    // Dominant period from the autocorrelation peak over lags [2, L/2].
    if (var > 0.0) {
        double best = 0.0;
        int best_lag = 0;
        for (int lag = 2; lag <= L / 2; ++lag) {
            double acc = 0.0;
            for (int t = 0; t + lag < L; ++t) acc += (v[t] - mu) * (v[t + lag] - mu);
            const double r = acc / (var * L);
            if (r > best) {
                best = r;
                best_lag = lag;
            }
        }
        if (best > 0.3) d.dominant_period = best_lag;
    }

    if (d.std > 0.0) {
        for (int t = 0; t < L; ++t)
            if (std::fabs((v[t] - mu) / d.std) > 3.0) d.outlier_indices.push_back(t);
    }
    return d;
}

EnhancedPrompt generate_enhanced_prompt(const std::string& query,
                                        const std::vector<ScoredDocument>& retrieved,
                                        const SeriesDescriptor& desc) {
    EnhancedPrompt p;
    p.query = query;
    p.descriptor = desc;

    std::string text = "Task: " + query + "\n";
    std::string summary = "Series summary: trend " + std::string(trend_name(desc.trend)) +
                          "; mean " + fmt_num(desc.mean) + "; std " + fmt_num(desc.std) +
                          "; min " + fmt_num(desc.global_min) + " at " +
                          std::to_string(desc.global_min_index) + "; max " + fmt_num(desc.global_max) +
                          " at " + std::to_string(desc.global_max_index);
    if (desc.dominant_period)
        summary += "; period " + std::to_string(*desc.dominant_period) + " samples";
    if (!desc.outlier_indices.empty()) {
        summary += "; outliers at";
        const size_t show = std::min<size_t>(desc.outlier_indices.size(), 8);
        for (size_t i = 0; i < show; ++i)
            summary += (i ? "," : " ") + std::to_string(desc.outlier_indices[i]);
        if (desc.outlier_indices.size() > show) summary += ",...";
    }
    summary += ".\n";

    int budget = kPromptMaxWords - count_words(text);
    text += truncate_words(summary, budget);
    budget = kPromptMaxWords - count_words(text);

    for (const auto& sd : retrieved) {
        if (budget <= 2) break;
        std::string excerpt = sd.doc->text.substr(0, kExcerptChars);
        std::string line = "Reference [" + sd.doc->id + "]: " + excerpt + "\n";
        text += truncate_words(line, budget);
        budget = kPromptMaxWords - count_words(text);
        p.source_doc_ids.push_back(sd.doc->id);
    }
    p.text = std::move(text);
    return p;
}

std::vector<std::pair<std::string, std::string>> load_corpus(const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<std::pair<std::string, std::string>> corpus;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(f);
            std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            corpus.emplace_back(f.stem().string(), std::move(text));
        }
    } else {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("load_corpus: cannot open '" + path + "'");
        std::string line;
        int row = 0;
        while (std::getline(in, line)) {
            ++row;
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const std::exception& e) {
                throw std::runtime_error("load_corpus: bad JSON on line " + std::to_string(row) +
                                         ": " + e.what());
            }
            corpus.emplace_back(j.at("id").get<std::string>(), j.at("text").get<std::string>());
        }
    }
    if (corpus.empty()) throw std::runtime_error("load_corpus: no documents found at '" + path + "'");
    return corpus;
}

}  // namespace kdtp
}  // namespace ltm
