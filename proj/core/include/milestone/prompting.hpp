#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "milestone/segmentation.hpp"

namespace milestone {

struct MilestoneSpec {
    std::string name;
    std::string solution_statement;
    std::vector<std::string> paraphrases;
};

struct PuzzleSpec {
    std::string task_description;
    std::vector<MilestoneSpec> milestones;  // order drives prompt and summary rendering
    std::string output_format_instructions;

    std::vector<std::string> milestone_names() const;
    const MilestoneSpec* find(const std::string& name) const;
};

PuzzleSpec parse_puzzle_spec(const std::string& json_text);
PuzzleSpec load_puzzle_spec(const std::string& path);

/// Milestone-name -> best candidate sentence; "" means not yet found.
struct SummaryState {
    std::map<std::string, std::string> values;

    static SummaryState initial(const PuzzleSpec& spec);
    bool same_keys(const PuzzleSpec& spec) const;
};

/// Rendered in spec milestone order, as the JSON object the prompt carries.
std::string serialize_summary(const SummaryState& summary, const PuzzleSpec& spec);

enum class Violation {
    NonJsonWrapper,
    MultipleObjects,
    UnknownKey,
    MissingKey,
    NonStringValue,
    Unparseable,
};

std::string violation_name(Violation v);

struct ParseOutcome {
    std::optional<SummaryState> summary;  // present iff Unparseable absent
    std::vector<Violation> violations;

    bool has(Violation v) const;
};

/// Fixed five-section prompt: task description, milestone solutions,
/// request + update rule, current summary as JSON, then the chunk followed
/// by the output-format instructions.
std::string render_prompt(const PuzzleSpec& spec, const SummaryState& summary, const Chunk& chunk);

/// Scans raw output for brace-balanced JSON objects, keeps the LAST one
/// whose keys intersect the milestone names, and normalizes it into a
/// summary. Never throws: every input yields a ParseOutcome.
ParseOutcome extract_summary(const std::string& raw, const std::set<std::string>& milestone_names);

struct MergeResult {
    SummaryState state;
    std::vector<std::string> blocked_keys;  // EMPTY_DOWNGRADE_BLOCKED per key
};

/// Per key: a non-empty parsed value is adopted; an empty or missing value
/// never clears a previously found sentence.
MergeResult merge_summary(const SummaryState& prev, const ParseOutcome& parsed);

}  // namespace milestone
