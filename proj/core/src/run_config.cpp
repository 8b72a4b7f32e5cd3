#include "milestone/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "milestone/errors.hpp"
#include "json.hpp"

namespace milestone {

RunConfig parse_run_config(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: invalid JSON: ") + e.what());
    }
    RunConfig c;
    try {
        c.puzzle_spec = doc.value("puzzle_spec", c.puzzle_spec);
        c.transcripts_dir = doc.value("transcripts_dir", c.transcripts_dir);
        c.ground_truth_dir = doc.value("ground_truth_dir", c.ground_truth_dir);
        c.backend = doc.value("backend", c.backend);
        c.model = doc.value("model", c.model);
        c.mock_script = doc.value("mock_script", c.mock_script);
        c.merges = doc.value("merges", c.merges);
        c.thresholds = doc.value("thresholds", c.thresholds);
        c.embedder = doc.value("embedder", c.embedder);
        c.embedding_cache = doc.value("embedding_cache", c.embedding_cache);
        c.output_dir = doc.value("output_dir", c.output_dir);
        c.token_budget = doc.value("token_budget", c.token_budget);
        c.trials = doc.value("trials", c.trials);
        c.k = doc.value("k", c.k);
        c.tpm = doc.value("tpm", c.tpm);
        c.jobs = doc.value("jobs", c.jobs);
        c.max_response_tokens = doc.value("max_response_tokens", c.max_response_tokens);
        c.seed = doc.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: bad field type: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& c) {
    nlohmann::ordered_json doc{
        {"puzzle_spec", c.puzzle_spec},
        {"transcripts_dir", c.transcripts_dir},
        {"ground_truth_dir", c.ground_truth_dir},
        {"backend", c.backend},
        {"model", c.model},
        {"mock_script", c.mock_script},
        {"merges", c.merges},
        {"thresholds", c.thresholds},
        {"embedder", c.embedder},
        {"embedding_cache", c.embedding_cache},
        {"output_dir", c.output_dir},
        {"token_budget", c.token_budget},
        {"trials", c.trials},
        {"k", c.k},
        {"tpm", c.tpm},
        {"jobs", c.jobs},
        {"max_response_tokens", c.max_response_tokens},
        {"seed", c.seed},
    };
    return doc.dump(2) + "\n";
}

void validate_run_config(const RunConfig& c) {
    if (c.token_budget <= 0) throw ConfigError("run config: token_budget must be positive");
    if (c.trials < 1) throw ConfigError("run config: trials must be >= 1");
    if (c.k < 1) throw ConfigError("run config: k must be >= 1");
    if (c.jobs < 1) throw ConfigError("run config: jobs must be >= 1");
    if (c.backend != "mock" && c.backend != "http")
        throw ConfigError("run config: backend must be 'mock' or 'http'");
    auto require_path = [](const std::string& path, const char* what) {
        if (!path.empty() && !std::filesystem::exists(path))
            throw ConfigError(std::string("run config: ") + what + " does not exist: " + path);
    };
    require_path(c.puzzle_spec, "puzzle_spec");
    require_path(c.transcripts_dir, "transcripts_dir");
    require_path(c.ground_truth_dir, "ground_truth_dir");
    require_path(c.mock_script, "mock_script");
    require_path(c.merges, "merges");
    require_path(c.thresholds, "thresholds");
    require_path(c.embedding_cache, "embedding_cache");
}

}  // namespace milestone
