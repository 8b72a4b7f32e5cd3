#include "milestone/baseline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "milestone/errors.hpp"
#include "json.hpp"

namespace milestone {

namespace {

// FNV-1a, mixed with a seed
uint64_t hash64(const std::string& s, uint64_t seed) {
    uint64_t h = 14695981039346656037ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

StubEmbedder::StubEmbedder(int dimension, int ngram, uint64_t seed)
    : dimension_(dimension), ngram_(ngram), seed_(seed) {
    if (dimension_ <= 0 || ngram_ <= 0) throw ConfigError("stub embedder: bad dimension/ngram");
}

std::vector<double> StubEmbedder::embed(const std::string& text) const {
    std::vector<double> v(dimension_, 0.0);
    std::string s;
    s.reserve(text.size());
    for (unsigned char c : text)
        if (!std::isspace(c)) s.push_back(static_cast<char>(std::tolower(c)));
    if (s.size() < static_cast<size_t>(ngram_)) s.resize(ngram_, '_');
    for (size_t i = 0; i + ngram_ <= s.size(); ++i) {
        uint64_t h = hash64(s.substr(i, ngram_), seed_);
        double sign = (h >> 63) ? 1.0 : -1.0;
        v[h % dimension_] += sign;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v[0] = 1.0;  // degenerate input still gets a valid unit vector
        return v;
    }
    for (double& x : v) x /= norm;
    return v;
}

std::string FileEmbedder::text_hash(const std::string& text) {
    std::ostringstream out;
    out << std::hex << hash64(text, 0);
    return out.str();
}

FileEmbedder::FileEmbedder(const std::string& cache_path) {
    std::ifstream in(cache_path);
    if (!in) throw ConfigError("cannot open embedding cache: " + cache_path);
    nlohmann::json doc;
    try {
        in >> doc;
        for (auto& [key, vec] : doc.items()) {
            std::vector<double> v = vec.get<std::vector<double>>();
            if (dimension_ == 0) dimension_ = static_cast<int>(v.size());
            if (static_cast<int>(v.size()) != dimension_)
                throw ConfigError("embedding cache: inconsistent dimensions");
            cache_[key] = std::move(v);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("embedding cache: invalid JSON: ") + e.what());
    }
    if (cache_.empty()) throw ConfigError("embedding cache is empty: " + cache_path);
}

std::vector<double> FileEmbedder::embed(const std::string& text) const {
    auto it = cache_.find(text_hash(text));
    if (it == cache_.end())
        throw DataError("embedding cache has no entry for text: " + text.substr(0, 60));
    return it->second;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw DataError("cosine: zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<RankedCandidate> score_candidates(const Transcript& t, const MilestoneSpec& m,
                                              const EmbeddingProvider& provider) {
    if (t.empty()) throw DataError("score_candidates: empty transcript");

    std::vector<std::pair<int, std::vector<double>>> references;  // index -1 = solution statement
    references.emplace_back(-1, provider.embed(m.solution_statement));
    for (size_t i = 0; i < m.paraphrases.size(); ++i)
        references.emplace_back(static_cast<int>(i), provider.embed(m.paraphrases[i]));

    std::vector<RankedCandidate> ranked;
    ranked.reserve(t.size());
    for (const auto& u : t.utterances) {
        auto e = provider.embed(u.text);
        RankedCandidate c;
        c.utterance_id = u.id;
        c.score = -2.0;
        for (const auto& [idx, ref] : references) {
            double s = cosine(e, ref);
            if (s > c.score) {
                c.score = s;
                c.best_paraphrase_index = idx;
            }
        }
        ranked.push_back(c);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.utterance_id < b.utterance_id;
    });
    return ranked;
}

std::vector<RankedCandidate> top_k_detect(const std::vector<RankedCandidate>& ranked,
                                          double threshold, int k) {
    if (k < 1) throw ConfigError("top_k_detect: k must be >= 1");
    std::vector<RankedCandidate> out;
    for (const auto& c : ranked) {
        if (c.score < threshold) break;
        out.push_back(c);
        if (static_cast<int>(out.size()) == k) break;
    }
    return out;
}

double ThresholdTable::at(const std::string& milestone) const {
    auto it = thresholds.find(milestone);
    if (it == thresholds.end())
        throw ConfigError("threshold table has no entry for milestone '" + milestone + "'");
    return it->second;
}

ThresholdTable parse_threshold_table(const std::string& json_text, const PuzzleSpec& spec) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("threshold table: invalid JSON: ") + e.what());
    }
    ThresholdTable table;
    for (auto& [name, value] : doc.items()) table.thresholds[name] = value.get<double>();
    for (const auto& m : spec.milestones) table.at(m.name);  // must be complete
    return table;
}

ThresholdTable load_threshold_table(const std::string& path, const PuzzleSpec& spec) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open threshold table: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_threshold_table(buf.str(), spec);
}

}  // namespace milestone
