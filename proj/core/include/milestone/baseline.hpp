#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "milestone/prompting.hpp"
#include "milestone/transcript.hpp"

namespace milestone {

/// Text -> fixed-dimension vector; deterministic for fixed input.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(const std::string& text) const = 0;
    virtual int dimension() const = 0;
    virtual std::string name() const = 0;
};

/// Deterministic offline embedder: hashes character n-grams into a
/// fixed-dimension vector, L2-normalized. Makes every ranking brute-force
/// verifiable without a model.
class StubEmbedder : public EmbeddingProvider {
public:
    explicit StubEmbedder(int dimension = 64, int ngram = 3, uint64_t seed = 0);
    std::vector<double> embed(const std::string& text) const override;
    int dimension() const override { return dimension_; }
    std::string name() const override { return "stub"; }

private:
    int dimension_;
    int ngram_;
    uint64_t seed_;
};

/// Reads precomputed embeddings from a JSON cache file (text-hash -> vector).
class FileEmbedder : public EmbeddingProvider {
public:
    explicit FileEmbedder(const std::string& cache_path);
    std::vector<double> embed(const std::string& text) const override;
    int dimension() const override { return dimension_; }
    std::string name() const override { return "file"; }

    static std::string text_hash(const std::string& text);

private:
    std::map<std::string, std::vector<double>> cache_;
    int dimension_ = 0;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct RankedCandidate {
    int utterance_id = 0;
    double score = 0.0;               // max over the milestone's references
    int best_paraphrase_index = 0;    // -1 = solution statement itself
};

/// Scores every utterance against the milestone's solution statement and
/// paraphrase bank, descending by score, ties toward the earlier utterance.
std::vector<RankedCandidate> score_candidates(const Transcript& t, const MilestoneSpec& m,
                                              const EmbeddingProvider& provider);

/// First min(k, count above threshold) entries. Empty output means the
/// milestone is predicted not achieved.
std::vector<RankedCandidate> top_k_detect(const std::vector<RankedCandidate>& ranked,
                                          double threshold, int k);

/// Per-milestone similarity thresholds; must cover the spec's milestones.
struct ThresholdTable {
    std::map<std::string, double> thresholds;

    double at(const std::string& milestone) const;
};

ThresholdTable parse_threshold_table(const std::string& json_text, const PuzzleSpec& spec);
ThresholdTable load_threshold_table(const std::string& path, const PuzzleSpec& spec);

}  // namespace milestone
