#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace milestone {

/// One speaker-tagged, time-stamped fragment of a meeting.
struct Utterance {
    int id = 0;           // dense 0-based index within a transcript
    std::string speaker;
    double start = 0.0;   // seconds from meeting start
    double end = 0.0;     // >= start
    std::string text;

    bool operator==(const Utterance&) const = default;
};

struct Transcript {
    std::string team_id;
    std::vector<Utterance> utterances;

    bool empty() const { return utterances.empty(); }
    size_t size() const { return utterances.size(); }
};

/// A multi-sentence monologue from a long-form transcription service.
struct LongSegment {
    std::string speaker;
    double start = 0.0;
    double end = 0.0;
    std::string text;
};

struct MilestoneTruth {
    bool achieved = false;
    std::set<int> valid_utterance_ids;  // empty iff !achieved
};

struct GroundTruth {
    std::string team_id;
    std::map<std::string, MilestoneTruth> milestones;
};

/// parse_vtt: WebVTT cues with "Speaker: text" payloads. Cues without a
/// speaker prefix inherit the previous cue's speaker.
Transcript parse_vtt(const std::string& raw_text);

/// parse_canonical: JSON Lines, one {speaker,start,end,text} object per line.
/// Ids are re-assigned densely; start times must be non-decreasing.
Transcript parse_canonical(const std::string& jsonl_text);

std::string serialize_canonical(const Transcript& t);

GroundTruth parse_ground_truth(const std::string& json_text);
std::string serialize_ground_truth(const GroundTruth& gt);

/// Validates ids against the transcript.
void check_ground_truth(const GroundTruth& gt, const Transcript& t);

struct AlignResult {
    Transcript transcript;
    int speaker_discrepancies = 0;
    bool long_side_empty = false;  // warning: output is `short` unchanged
};

/// Splits each LongSegment into sentence pieces ('.', '!', '?' followed by
/// whitespace or end), interpolates piece intervals proportionally to
/// character length, and assigns every piece to the short fragment with
/// maximal temporal overlap (ties toward the earlier fragment). The output
/// keeps the timing/speaker skeleton of `short_side`.
AlignResult align(const std::vector<LongSegment>& long_side,
                  const std::vector<Utterance>& short_side);

enum class MatchKind { Exact, Normalized, Fuzzy };

struct ResolvedText {
    const Utterance* utterance = nullptr;
    MatchKind kind = MatchKind::Exact;
};

/// Normalization used for matching: lowercase, strip punctuation and
/// whitespace, strip one leading "speaker:" prefix.
std::string normalize_for_match(const std::string& text);

/// 1 - edit_distance / max(len); 1.0 for two empty strings.
double edit_ratio(const std::string& a, const std::string& b);

/// Maps free text back to an utterance: exact, then normalized, then the
/// best fuzzy match if its normalized edit ratio is >= fuzzy_threshold.
/// Ties break toward the earliest utterance. Absence is a valid result.
std::optional<ResolvedText> resolve_text(const Transcript& t, const std::string& candidate,
                                         double fuzzy_threshold = 0.90);

/// Sentence split rule shared with align(): boundaries at '.', '!', '?'
/// followed by whitespace or end of string.
std::vector<std::string> split_sentences(const std::string& text);

}  // namespace milestone
