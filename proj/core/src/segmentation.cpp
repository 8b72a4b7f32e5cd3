#include "milestone/segmentation.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "milestone/errors.hpp"

namespace milestone {

BpeCounter BpeCounter::from_merges_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open merges file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_merges_text(buf.str());
}

BpeCounter BpeCounter::from_merges_text(const std::string& text) {
    BpeCounter counter;
    std::istringstream in(text);
    std::string line;
    int rank = 0;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto space = line.find(' ');
        if (space == std::string::npos || space == 0 || space + 1 == line.size())
            throw ConfigError("merges file: expected 'tokenA tokenB' at line " +
                              std::to_string(lineno));
        counter.merge_ranks_[{line.substr(0, space), line.substr(space + 1)}] = rank++;
    }
    return counter;
}

int BpeCounter::count(const std::string& text) const {
    int total = 0;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) continue;

        // one symbol per byte, then merge lowest-rank adjacent pairs
        std::vector<std::string> symbols;
        symbols.reserve(i - start);
        for (size_t p = start; p < i; ++p) symbols.emplace_back(1, text[p]);
        while (symbols.size() > 1) {
            int best_rank = -1;
            for (size_t p = 0; p + 1 < symbols.size(); ++p) {
                auto it = merge_ranks_.find({symbols[p], symbols[p + 1]});
                if (it != merge_ranks_.end() && (best_rank < 0 || it->second < best_rank))
                    best_rank = it->second;
            }
            if (best_rank < 0) break;
            // merge all non-overlapping occurrences of the best pair, left to right
            std::vector<std::string> merged;
            merged.reserve(symbols.size());
            for (size_t p = 0; p < symbols.size(); ++p) {
                if (p + 1 < symbols.size()) {
                    auto it = merge_ranks_.find({symbols[p], symbols[p + 1]});
                    if (it != merge_ranks_.end() && it->second == best_rank) {
                        merged.push_back(symbols[p] + symbols[p + 1]);
                        ++p;
                        continue;
                    }
                }
                merged.push_back(symbols[p]);
            }
            symbols = std::move(merged);
        }
        total += static_cast<int>(symbols.size());
    }
    return total;
}

int FallbackCounter::count(const std::string& text) const {
    int tokens = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_word = false;
        } else if (std::ispunct(c)) {
            ++tokens;  // punctuation counts on its own
            in_word = false;
        } else {
            if (!in_word) ++tokens;
            in_word = true;
        }
    }
    return tokens;
}

std::string render_line(const Utterance& u) { return u.speaker + ": " + u.text + "\n"; }

std::vector<Chunk> chunk_transcript(const Transcript& t, const TokenCounter& counter, int budget) {
    if (budget <= 0) throw ConfigError("token budget must be positive");
    std::vector<Chunk> chunks;
    Chunk current;
    bool open = false;
    for (const auto& u : t.utterances) {
        std::string line = render_line(u);
        int line_tokens = counter.count(line);
        if (line_tokens > budget)
            throw DataError("utterance " + std::to_string(u.id) + " alone exceeds token budget (" +
                            std::to_string(line_tokens) + " > " + std::to_string(budget) + ")");
        if (open && current.token_count + line_tokens > budget) {
            chunks.push_back(std::move(current));
            current = Chunk{};
            open = false;
        }
        if (!open) {
            current.index = static_cast<int>(chunks.size());
            current.first_utterance_id = u.id;
            open = true;
        }
        current.last_utterance_id = u.id;
        current.rendered_text += line;
        current.token_count += line_tokens;
    }
    if (open) chunks.push_back(std::move(current));
    return chunks;
}

}  // namespace milestone
