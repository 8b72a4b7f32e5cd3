#include "milestone/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "milestone/errors.hpp"
#include "json.hpp"

namespace milestone {

namespace {

std::string normalize_key(const std::string& key) {
    size_t b = key.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = key.find_last_not_of(" \t\r\n");
    std::string out = key.substr(b, e - b + 1);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Spans of brace-balanced object candidates, skipping string literals.
struct ObjectSpan {
    size_t begin, end;  // [begin, end)
    nlohmann::json parsed;
    bool ok;
};

std::vector<ObjectSpan> find_object_spans(const std::string& raw) {
    std::vector<ObjectSpan> spans;
    size_t i = 0;
    const size_t n = raw.size();
    while (i < n) {
        if (raw[i] != '{') {
            ++i;
            continue;
        }
        int depth = 0;
        bool in_string = false;
        size_t j = i;
        size_t close = std::string::npos;
        for (; j < n; ++j) {
            char c = raw[j];
            if (in_string) {
                if (c == '\\')
                    ++j;
                else if (c == '"')
                    in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    close = j;
                    break;
                }
            }
        }
        if (close == std::string::npos) {
            ++i;
            continue;
        }
        ObjectSpan span{i, close + 1, {}, false};
        auto parsed = nlohmann::json::parse(raw.substr(i, close + 1 - i), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) {
            span.parsed = std::move(parsed);
            span.ok = true;
        }
        spans.push_back(std::move(span));
        i = close + 1;
    }
    return spans;
}

const std::string kRequestText =
    "Read the transcript chunk below and find, for each milestone, the exact sentence from the "
    "transcript in which the team correctly states that milestone. Compare each candidate against "
    "the true answers given above and update the milestone only if you find a better match to the "
    "true answers. Keep the current value otherwise. Use an empty string for milestones that have "
    "not been solved yet.";

}  // namespace

std::vector<std::string> PuzzleSpec::milestone_names() const {
    std::vector<std::string> names;
    names.reserve(milestones.size());
    for (const auto& m : milestones) names.push_back(m.name);
    return names;
}

const MilestoneSpec* PuzzleSpec::find(const std::string& name) const {
    for (const auto& m : milestones)
        if (m.name == name) return &m;
    return nullptr;
}

PuzzleSpec parse_puzzle_spec(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("puzzle spec: invalid JSON: ") + e.what());
    }
    PuzzleSpec spec;
    try {
        spec.task_description = doc.at("task_description").get<std::string>();
        spec.output_format_instructions = doc.at("output_format_instructions").get<std::string>();
        for (const auto& m : doc.at("milestones")) {
            MilestoneSpec ms;
            ms.name = m.at("name").get<std::string>();
            ms.solution_statement = m.at("solution_statement").get<std::string>();
            for (const auto& p : m.value("paraphrases", nlohmann::json::array()))
                ms.paraphrases.push_back(p.get<std::string>());
            if (ms.solution_statement.empty())
                throw ConfigError("puzzle spec: empty solution_statement for '" + ms.name + "'");
            if (spec.find(ms.name))
                throw ConfigError("puzzle spec: duplicate milestone name '" + ms.name + "'");
            spec.milestones.push_back(std::move(ms));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("puzzle spec: bad structure: ") + e.what());
    }
    if (spec.milestones.empty()) throw ConfigError("puzzle spec: no milestones");
    return spec;
}

PuzzleSpec load_puzzle_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open puzzle spec: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_puzzle_spec(buf.str());
}

SummaryState SummaryState::initial(const PuzzleSpec& spec) {
    SummaryState s;
    for (const auto& m : spec.milestones) s.values[m.name] = "";
    return s;
}

bool SummaryState::same_keys(const PuzzleSpec& spec) const {
    if (values.size() != spec.milestones.size()) return false;
    for (const auto& m : spec.milestones)
        if (!values.contains(m.name)) return false;
    return true;
}

std::string serialize_summary(const SummaryState& summary, const PuzzleSpec& spec) {
    nlohmann::ordered_json obj;
    for (const auto& m : spec.milestones) {
        auto it = summary.values.find(m.name);
        obj[m.name] = it != summary.values.end() ? it->second : std::string{};
    }
    return obj.dump();
}

std::string violation_name(Violation v) {
    switch (v) {
        case Violation::NonJsonWrapper: return "NON_JSON_WRAPPER";
        case Violation::MultipleObjects: return "MULTIPLE_OBJECTS";
        case Violation::UnknownKey: return "UNKNOWN_KEY";
        case Violation::MissingKey: return "MISSING_KEY";
        case Violation::NonStringValue: return "NON_STRING_VALUE";
        case Violation::Unparseable: return "UNPARSEABLE";
    }
    return "UNKNOWN";
}

bool ParseOutcome::has(Violation v) const {
    return std::find(violations.begin(), violations.end(), v) != violations.end();
}

std::string render_prompt(const PuzzleSpec& spec, const SummaryState& summary, const Chunk& chunk) {
    if (chunk.rendered_text.empty()) throw DataError("render_prompt: empty chunk");
    if (!summary.same_keys(spec))
        throw DataError("render_prompt: summary keys do not match the puzzle milestones");

    std::string prompt;
    prompt += spec.task_description;
    prompt += "\n\nTrue answers for each milestone:\n";
    for (const auto& m : spec.milestones)
        prompt += "- " + m.name + ": " + m.solution_statement + "\n";
    prompt += "\n" + kRequestText + "\n";
    prompt += "\nCurrent summary:\n" + serialize_summary(summary, spec) + "\n";
    prompt += "\nTranscript chunk:\n" + chunk.rendered_text;
    prompt += "\n" + spec.output_format_instructions + "\n";
    return prompt;
}

ParseOutcome extract_summary(const std::string& raw, const std::set<std::string>& milestone_names) {
    ParseOutcome outcome;
    auto spans = find_object_spans(raw);

    std::vector<const ObjectSpan*> candidates;
    for (const auto& span : spans) {
        if (!span.ok) continue;
        bool intersects = false;
        for (const auto& [key, value] : span.parsed.items()) {
            if (milestone_names.contains(normalize_key(key))) {
                intersects = true;
                break;
            }
        }
        if (intersects) candidates.push_back(&span);
    }

    if (candidates.empty()) {
        outcome.violations.push_back(Violation::Unparseable);
        return outcome;
    }
    if (candidates.size() >= 2) outcome.violations.push_back(Violation::MultipleObjects);

    // prose anywhere outside candidate object spans
    std::vector<bool> covered(raw.size(), false);
    for (const auto* c : candidates)
        for (size_t i = c->begin; i < c->end; ++i) covered[i] = true;
    for (size_t i = 0; i < raw.size(); ++i) {
        if (!covered[i] && !std::isspace(static_cast<unsigned char>(raw[i]))) {
            outcome.violations.push_back(Violation::NonJsonWrapper);
            break;
        }
    }

    const nlohmann::json& obj = candidates.back()->parsed;
    SummaryState summary;
    for (const auto& name : milestone_names) summary.values[name] = "";

    std::set<std::string> seen;
    bool unknown = false, non_string = false;
    for (const auto& [key, value] : obj.items()) {
        std::string canonical = normalize_key(key);
        if (!milestone_names.contains(canonical)) {
            unknown = true;
            continue;
        }
        seen.insert(canonical);
        if (value.is_string()) {
            summary.values[canonical] = value.get<std::string>();
        } else if (value.is_number() || value.is_boolean()) {
            summary.values[canonical] = value.dump();
        } else {
            non_string = true;
            summary.values[canonical] = "";
        }
    }
    if (unknown) outcome.violations.push_back(Violation::UnknownKey);
    if (non_string) outcome.violations.push_back(Violation::NonStringValue);
    if (seen.size() != milestone_names.size())
        outcome.violations.push_back(Violation::MissingKey);

    outcome.summary = std::move(summary);
    return outcome;
}

MergeResult merge_summary(const SummaryState& prev, const ParseOutcome& parsed) {
    MergeResult result;
    if (!parsed.summary) {
        result.state = prev;
        return result;
    }
    for (const auto& [key, prev_value] : prev.values) {
        std::string parsed_value;
        if (auto it = parsed.summary->values.find(key); it != parsed.summary->values.end())
            parsed_value = it->second;
        if (!parsed_value.empty()) {
            result.state.values[key] = parsed_value;
        } else if (!prev_value.empty()) {
            result.state.values[key] = prev_value;
            result.blocked_keys.push_back(key);
        } else {
            result.state.values[key] = "";
        }
    }
    return result;
}

}  // namespace milestone
