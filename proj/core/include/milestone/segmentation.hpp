#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "milestone/transcript.hpp"

namespace milestone {

/// Deterministic token counter: same text, same count. Shareable across
/// tasks after construction.
class TokenCounter {
public:
    virtual ~TokenCounter() = default;
    virtual int count(const std::string& text) const = 0;
    virtual std::string name() const = 0;
};

/// Byte-pair-encoding counter. Pre-tokenizes byte-level on whitespace, then
/// applies merges greedily by rank within each pre-token.
class BpeCounter : public TokenCounter {
public:
    /// Merge table: text lines "tokenA tokenB" in rank order.
    static BpeCounter from_merges_file(const std::string& path);
    static BpeCounter from_merges_text(const std::string& text);

    int count(const std::string& text) const override;
    std::string name() const override { return "bpe"; }

private:
    // (left, right) -> rank
    std::map<std::pair<std::string, std::string>, int> merge_ranks_;
};

/// Offline fallback: one token per whitespace-separated word plus one per
/// punctuation mark.
class FallbackCounter : public TokenCounter {
public:
    int count(const std::string& text) const override;
    std::string name() const override { return "fallback"; }
};

struct Chunk {
    int index = 0;
    int first_utterance_id = 0;
    int last_utterance_id = 0;  // inclusive
    std::string rendered_text;  // "Speaker: text" lines, newline-terminated
    int token_count = 0;
};

/// "Speaker: text" with a trailing newline; token accounting is over
/// rendered lines.
std::string render_line(const Utterance& u);

/// Greedy left-to-right packing under `budget` tokens per chunk. Chunks
/// partition the utterance range exactly; no utterance is split. An
/// utterance whose rendered line alone exceeds the budget is an error.
std::vector<Chunk> chunk_transcript(const Transcript& t, const TokenCounter& counter, int budget);

}  // namespace milestone
