#include "milestone/transcript.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "milestone/errors.hpp"
#include "json.hpp"

namespace milestone {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            if (!current.empty() && current.back() == '\r') current.pop_back();
            lines.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) {
        if (current.back() == '\r') current.pop_back();
        lines.push_back(current);
    }
    return lines;
}

// "HH:MM:SS.mmm" or "MM:SS.mmm"
std::optional<double> parse_vtt_timestamp(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    if (parts.size() != 2 && parts.size() != 3) return std::nullopt;
    double total = 0.0;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        const std::string& p = parts[i];
        if (p.empty() || !std::all_of(p.begin(), p.end(), [](unsigned char c) { return std::isdigit(c); }))
            return std::nullopt;
        total = total * 60.0 + std::stod(p);
    }
    const std::string& sec = parts.back();
    if (sec.empty()) return std::nullopt;
    for (char c : sec)
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.') return std::nullopt;
    try {
        return total * 60.0 + std::stod(sec);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void sort_and_index(Transcript& t) {
    std::stable_sort(t.utterances.begin(), t.utterances.end(),
                     [](const Utterance& a, const Utterance& b) { return a.start < b.start; });
    for (size_t i = 0; i < t.utterances.size(); ++i) t.utterances[i].id = static_cast<int>(i);
}

}  // namespace

Transcript parse_vtt(const std::string& raw_text) {
    Transcript t;
    auto lines = split_lines(raw_text);
    std::string last_speaker;
    size_t i = 0;
    while (i < lines.size()) {
        const std::string& line = lines[i];
        auto arrow = line.find("-->");
        if (arrow == std::string::npos) {
            ++i;
            continue;
        }
        std::string start_str = trim(line.substr(0, arrow));
        std::string end_str = trim(line.substr(arrow + 3));
        // cue settings after the end timestamp are ignored
        if (auto sp = end_str.find(' '); sp != std::string::npos) end_str = end_str.substr(0, sp);
        auto start = parse_vtt_timestamp(start_str);
        auto end = parse_vtt_timestamp(end_str);
        if (!start || !end)
            throw DataError("vtt: malformed timestamp at line " + std::to_string(i + 1));
        ++i;
        std::string payload;
        while (i < lines.size() && !trim(lines[i]).empty()) {
            if (!payload.empty()) payload += " ";
            payload += trim(lines[i]);
            ++i;
        }
        std::string speaker = last_speaker;
        std::string text = payload;
        if (auto colon = payload.find(": "); colon != std::string::npos && colon > 0) {
            speaker = payload.substr(0, colon);
            text = trim(payload.substr(colon + 2));
        }
        last_speaker = speaker;
        Utterance u;
        u.speaker = speaker;
        u.start = *start;
        u.end = *end;
        u.text = text;
        t.utterances.push_back(std::move(u));
    }
    if (t.utterances.empty()) throw DataError("vtt: no cues");
    sort_and_index(t);
    return t;
}

Transcript parse_canonical(const std::string& jsonl_text) {
    Transcript t;
    auto lines = split_lines(jsonl_text);
    double prev_start = -1.0;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("canonical transcript: invalid JSON at line " + std::to_string(i + 1) +
                            ": " + e.what());
        }
        for (const char* field : {"speaker", "start", "end", "text"}) {
            if (!obj.contains(field))
                throw DataError("canonical transcript: missing field '" + std::string(field) +
                                "' at line " + std::to_string(i + 1));
        }
        Utterance u;
        u.speaker = obj["speaker"].get<std::string>();
        u.start = obj["start"].get<double>();
        u.end = obj["end"].get<double>();
        u.text = obj["text"].get<std::string>();
        if (u.speaker.empty())
            throw DataError("canonical transcript: empty speaker at line " + std::to_string(i + 1));
        if (u.start < 0 || u.end < u.start)
            throw DataError("canonical transcript: invalid time range at line " + std::to_string(i + 1));
        if (u.start < prev_start)
            throw DataError("canonical transcript: start times not monotone at line " +
                            std::to_string(i + 1));
        prev_start = u.start;
        t.utterances.push_back(std::move(u));
    }
    for (size_t i = 0; i < t.utterances.size(); ++i) t.utterances[i].id = static_cast<int>(i);
    return t;
}

std::string serialize_canonical(const Transcript& t) {
    std::string out;
    for (const auto& u : t.utterances) {
        nlohmann::json obj{{"id", u.id},
                           {"speaker", u.speaker},
                           {"start", u.start},
                           {"end", u.end},
                           {"text", u.text}};
        out += obj.dump();
        out += "\n";
    }
    return out;
}

GroundTruth parse_ground_truth(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("ground truth: invalid JSON: ") + e.what());
    }
    if (!doc.contains("team_id") || !doc.contains("milestones"))
        throw DataError("ground truth: expected team_id and milestones");
    GroundTruth gt;
    gt.team_id = doc["team_id"].get<std::string>();
    for (auto& [name, entry] : doc["milestones"].items()) {
        MilestoneTruth mt;
        mt.achieved = entry.at("achieved").get<bool>();
        for (const auto& id : entry.value("valid_utterance_ids", nlohmann::json::array()))
            mt.valid_utterance_ids.insert(id.get<int>());
        if (mt.achieved != !mt.valid_utterance_ids.empty())
            throw DataError("ground truth: milestone '" + name +
                            "' achieved flag inconsistent with valid_utterance_ids");
        gt.milestones[name] = std::move(mt);
    }
    return gt;
}

std::string serialize_ground_truth(const GroundTruth& gt) {
    nlohmann::json milestones = nlohmann::json::object();
    for (const auto& [name, mt] : gt.milestones) {
        milestones[name] = {{"achieved", mt.achieved},
                            {"valid_utterance_ids",
                             std::vector<int>(mt.valid_utterance_ids.begin(), mt.valid_utterance_ids.end())}};
    }
    return nlohmann::json{{"team_id", gt.team_id}, {"milestones", milestones}}.dump(2);
}

void check_ground_truth(const GroundTruth& gt, const Transcript& t) {
    for (const auto& [name, mt] : gt.milestones) {
        for (int id : mt.valid_utterance_ids) {
            if (id < 0 || id >= static_cast<int>(t.size()))
                throw DataError("ground truth: milestone '" + name + "' references utterance " +
                                std::to_string(id) + " not present in transcript " + t.team_id);
        }
    }
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> pieces;
    std::string current;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        current.push_back(c);
        if (c == '.' || c == '!' || c == '?') {
            bool boundary = (i + 1 == text.size()) ||
                            std::isspace(static_cast<unsigned char>(text[i + 1]));
            if (boundary) {
                std::string piece = trim(current);
                if (!piece.empty()) pieces.push_back(piece);
                current.clear();
            }
        }
    }
    std::string piece = trim(current);
    if (!piece.empty()) pieces.push_back(piece);
    return pieces;
}

AlignResult align(const std::vector<LongSegment>& long_side,
                  const std::vector<Utterance>& short_side) {
    if (short_side.empty()) throw DataError("align: short side is empty");
    AlignResult result;
    result.transcript.utterances = short_side;
    for (size_t i = 0; i < result.transcript.utterances.size(); ++i)
        result.transcript.utterances[i].id = static_cast<int>(i);
    if (long_side.empty()) {
        result.long_side_empty = true;
        return result;
    }

    struct Piece {
        std::string text;
        std::string speaker;
        double start, end;
    };
    std::vector<Piece> pieces;
    for (const auto& seg : long_side) {
        auto sentences = split_sentences(seg.text);
        if (sentences.empty()) continue;
        size_t total_chars = 0;
        for (const auto& s : sentences) total_chars += s.size();
        if (total_chars == 0) continue;
        double duration = seg.end - seg.start;
        double cursor = seg.start;
        for (const auto& s : sentences) {
            double span = duration * static_cast<double>(s.size()) / static_cast<double>(total_chars);
            pieces.push_back({s, seg.speaker, cursor, cursor + span});
            cursor += span;
        }
    }

    std::vector<std::string> assigned_texts(short_side.size());
    for (const auto& p : pieces) {
        size_t best = 0;
        double best_overlap = -1.0;
        for (size_t f = 0; f < short_side.size(); ++f) {
            double overlap = std::max(0.0, std::min(p.end, short_side[f].end) -
                                               std::max(p.start, short_side[f].start));
            if (overlap > best_overlap) {
                best_overlap = overlap;
                best = f;
            }
        }
        if (!assigned_texts[best].empty()) assigned_texts[best] += " ";
        assigned_texts[best] += p.text;
        if (p.speaker != short_side[best].speaker) ++result.speaker_discrepancies;
    }
    for (size_t f = 0; f < assigned_texts.size(); ++f)
        result.transcript.utterances[f].text = assigned_texts[f];
    return result;
}

std::string normalize_for_match(const std::string& text) {
    std::string s = trim(text);
    // strip one leading "speaker:" prefix when the pre-colon part looks like a name
    if (auto colon = s.find(':'); colon != std::string::npos && colon > 0 && colon <= 40) {
        bool name_like = std::all_of(s.begin(), s.begin() + static_cast<long>(colon),
                                     [](unsigned char c) { return std::isalnum(c) || c == ' ' || c == '_'; });
        if (name_like) s = s.substr(colon + 1);
    }
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

double edit_ratio(const std::string& a, const std::string& b) {
    const size_t n = a.size(), m = b.size();
    if (n == 0 && m == 0) return 1.0;
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    double dist = static_cast<double>(prev[m]);
    return 1.0 - dist / static_cast<double>(std::max(n, m));
}

std::optional<ResolvedText> resolve_text(const Transcript& t, const std::string& candidate,
                                         double fuzzy_threshold) {
    for (const auto& u : t.utterances)
        if (u.text == candidate) return ResolvedText{&u, MatchKind::Exact};

    const std::string norm_candidate = normalize_for_match(candidate);
    for (const auto& u : t.utterances)
        if (!norm_candidate.empty() && normalize_for_match(u.text) == norm_candidate)
            return ResolvedText{&u, MatchKind::Normalized};

    const Utterance* best = nullptr;
    double best_ratio = 0.0;
    for (const auto& u : t.utterances) {
        double r = edit_ratio(norm_candidate, normalize_for_match(u.text));
        if (r > best_ratio) {
            best_ratio = r;
            best = &u;
        }
    }
    if (best && best_ratio >= fuzzy_threshold) return ResolvedText{best, MatchKind::Fuzzy};
    return std::nullopt;
}

}  // namespace milestone
