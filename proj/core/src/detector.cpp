#include "milestone/detector.hpp"

#include <algorithm>

#include "milestone/errors.hpp"
#include "json.hpp"

namespace milestone {

std::string serialize_detection_result(const DetectionResult& r) {
    nlohmann::ordered_json milestones = nlohmann::ordered_json::object();
    for (const auto& [name, det] : r.milestones) {
        nlohmann::ordered_json entry{{"raw_sentence", det.raw_sentence},
                                     {"hallucinated", det.hallucinated}};
        if (det.resolved) {
            entry["resolved"] = {{"utterance_id", det.resolved->utterance_id},
                                 {"speaker", det.resolved->speaker},
                                 {"timestamp", det.resolved->timestamp}};
        } else {
            entry["resolved"] = nullptr;
        }
        milestones[name] = std::move(entry);
    }
    nlohmann::ordered_json doc{{"team_id", r.team_id},
                               {"trial_index", r.trial_index},
                               {"chunk_count", r.chunk_count},
                               {"milestones", milestones},
                               {"violation_counts", r.violation_counts},
                               {"blocked_downgrades", r.blocked_downgrades}};
    return doc.dump(2) + "\n";
}

DetectionResult parse_detection_result(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("detection result: invalid JSON: ") + e.what());
    }
    DetectionResult r;
    try {
        r.team_id = doc.at("team_id").get<std::string>();
        r.trial_index = doc.at("trial_index").get<int>();
        r.chunk_count = doc.at("chunk_count").get<int>();
        for (auto& [name, entry] : doc.at("milestones").items()) {
            MilestoneDetection det;
            det.raw_sentence = entry.at("raw_sentence").get<std::string>();
            det.hallucinated = entry.at("hallucinated").get<bool>();
            if (!entry.at("resolved").is_null()) {
                det.resolved = ResolvedUtterance{
                    entry["resolved"].at("utterance_id").get<int>(),
                    entry["resolved"].at("speaker").get<std::string>(),
                    entry["resolved"].at("timestamp").get<double>()};
            }
            r.milestones[name] = std::move(det);
        }
        // items() keeps a reference, so the container must outlive the loop
        nlohmann::json violations = doc.value("violation_counts", nlohmann::json::object());
        for (auto& [code, count] : violations.items())
            r.violation_counts[code] = count.get<int>();
        nlohmann::json blocked = doc.value("blocked_downgrades", nlohmann::json::array());
        for (const auto& key : blocked) r.blocked_downgrades.push_back(key.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("detection result: bad structure: ") + e.what());
    }
    return r;
}

DetectionResult detect(const Transcript& t, const PuzzleSpec& spec, Backend& backend,
                       const TokenCounter& counter, RateLimiter& limiter, Clock& clock,
                       const DetectorConfig& config, int trial_index) {
    auto chunks = chunk_transcript(t, counter, config.token_budget);

    DetectionResult result;
    result.team_id = t.team_id;
    result.trial_index = trial_index;
    result.chunk_count = static_cast<int>(chunks.size());

    std::set<std::string> names;
    for (const auto& m : spec.milestones) names.insert(m.name);

    SummaryState summary = SummaryState::initial(spec);
    for (const auto& chunk : chunks) {
        std::string prompt = render_prompt(spec, summary, chunk);

        CompletionRequest req;
        req.model_name = config.model_name;
        req.temperature = config.temperature;
        req.max_response_tokens = config.max_response_tokens;
        req.messages.push_back({"user", prompt});

        RequestContext ctx;
        ctx.team_id = t.team_id;
        ctx.chunk_index = chunk.index;
        ctx.trial_index = trial_index;
        ctx.fallback_payload = serialize_summary(summary, spec);

        limiter.acquire(counter.count(prompt) + config.max_response_tokens);
        CompletionResponse resp = complete_with_retry(backend, req, ctx, clock, config.retry);

        ParseOutcome outcome = extract_summary(resp.content, names);
        for (Violation v : outcome.violations) ++result.violation_counts[violation_name(v)];
        MergeResult merged = merge_summary(summary, outcome);
        summary = std::move(merged.state);
        result.blocked_downgrades.insert(result.blocked_downgrades.end(),
                                         merged.blocked_keys.begin(), merged.blocked_keys.end());
    }

    for (const auto& m : spec.milestones) {
        MilestoneDetection det;
        det.raw_sentence = summary.values.at(m.name);
        if (!det.raw_sentence.empty()) {
            if (auto match = resolve_text(t, det.raw_sentence, config.fuzzy_threshold)) {
                det.resolved = ResolvedUtterance{match->utterance->id, match->utterance->speaker,
                                                 match->utterance->start};
            } else {
                // unresolved: does it echo a prompt-supplied true answer?
                std::string norm = normalize_for_match(det.raw_sentence);
                double best = edit_ratio(norm, normalize_for_match(m.solution_statement));
                for (const auto& p : m.paraphrases)
                    best = std::max(best, edit_ratio(norm, normalize_for_match(p)));
                det.hallucinated = best >= config.fuzzy_threshold;
            }
        }
        result.milestones[m.name] = std::move(det);
    }
    return result;
}

TrialBatch run_trials(const Transcript& t, const PuzzleSpec& spec, Backend& backend,
                      const TokenCounter& counter, RateLimiter& limiter, Clock& clock,
                      const DetectorConfig& config, int n) {
    if (n < 1) throw ConfigError("trial count must be >= 1");
    TrialBatch batch;
    batch.team_id = t.team_id;
    for (int trial = 0; trial < n; ++trial) {
        try {
            batch.results.push_back(detect(t, spec, backend, counter, limiter, clock, config, trial));
        } catch (const std::exception& e) {
            batch.errors.push_back({trial, e.what()});
        }
    }
    return batch;
}

}  // namespace milestone
