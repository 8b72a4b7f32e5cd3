#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "milestone/gateway.hpp"
#include "milestone/prompting.hpp"
#include "milestone/segmentation.hpp"
#include "milestone/transcript.hpp"

namespace milestone {

struct ResolvedUtterance {
    int utterance_id = 0;
    std::string speaker;
    double timestamp = 0.0;  // start of the utterance

    bool operator==(const ResolvedUtterance&) const = default;
};

struct MilestoneDetection {
    std::string raw_sentence;                   // "" when nothing was found
    std::optional<ResolvedUtterance> resolved;  // present only for transcript sentences
    bool hallucinated = false;                  // echoed a prompt-supplied true answer
};

struct DetectionResult {
    std::string team_id;
    int trial_index = 0;
    int chunk_count = 0;
    std::map<std::string, MilestoneDetection> milestones;
    std::map<std::string, int> violation_counts;
    std::vector<std::string> blocked_downgrades;  // milestone keys, per occurrence
};

std::string serialize_detection_result(const DetectionResult& r);
DetectionResult parse_detection_result(const std::string& json_text);

struct DetectorConfig {
    std::string model_name = "gpt-4";
    double temperature = 0.0;
    int token_budget = 3600;
    int max_response_tokens = 500;
    double fuzzy_threshold = 0.90;
    RetryPolicy retry;
};

/// One pass of the iterative query loop: chunk the transcript, then per
/// chunk render the prompt, acquire the rate limiter, complete, parse, and
/// merge. After the last chunk every non-empty summary sentence is resolved
/// against the transcript; unresolved sentences close enough to a
/// prompt-supplied true answer are flagged hallucinated.
DetectionResult detect(const Transcript& t, const PuzzleSpec& spec, Backend& backend,
                       const TokenCounter& counter, RateLimiter& limiter, Clock& clock,
                       const DetectorConfig& config, int trial_index = 0);

struct TrialError {
    int trial_index = 0;
    std::string message;
};

struct TrialBatch {
    std::string team_id;
    std::vector<DetectionResult> results;
    std::vector<TrialError> errors;
};

/// n independent detect() runs; trial_index is threaded to the backend so
/// scripted variance stays reproducible. A failing trial is recorded and
/// the batch continues.
TrialBatch run_trials(const Transcript& t, const PuzzleSpec& spec, Backend& backend,
                      const TokenCounter& counter, RateLimiter& limiter, Clock& clock,
                      const DetectorConfig& config, int n);

}  // namespace milestone
