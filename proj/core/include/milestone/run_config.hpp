#pragma once

#include <string>

namespace milestone {

/// One JSON document driving the batch subcommands; CLI flags override
/// individual fields.
struct RunConfig {
    std::string puzzle_spec;       // path
    std::string transcripts_dir;
    std::string ground_truth_dir;
    std::string backend = "mock";  // "mock" or "http"
    std::string model = "gpt-4";
    std::string mock_script;       // path, mock backend only
    std::string merges;            // BPE merges path; empty = fallback counter
    std::string thresholds;        // path
    std::string embedder = "stub"; // "stub", "file", or "http"
    std::string embedding_cache;   // path, file embedder only
    std::string output_dir = "out";
    int token_budget = 3600;
    int trials = 1;
    int k = 5;
    int tpm = 10000;
    int jobs = 1;
    int max_response_tokens = 500;
    uint64_t seed = 0;

    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& config);

/// Invariant checks: referenced paths exist, budget > 0, trials >= 1.
void validate_run_config(const RunConfig& config);

}  // namespace milestone
