#pragma once

#include <map>
#include <string>
#include <vector>

#include "milestone/transcript.hpp"

namespace milestone {

enum class Outcome { TP, TN, FN, FpTeam, FpSentence };

std::string outcome_name(Outcome o);

/// What a detector or the baseline proposes for one (team, milestone).
/// Each proposal either resolved to an utterance id or stayed free text
/// (unresolved or hallucinated). An empty proposal list predicts "not
/// achieved".
struct Prediction {
    std::vector<int> proposal_ids;          // resolved proposals, rank order
    int unresolved_count = 0;               // non-empty proposals with no id

    bool empty() const { return proposal_ids.empty() && unresolved_count == 0; }
};

/// The two-level decision: team-level TN/FN/FP-team first, then the
/// sentence check against the valid utterance ids.
Outcome classify(const Prediction& prediction, const MilestoneTruth& truth);

using OutcomeCounts = std::map<Outcome, int>;

/// (TN + TP) / (FP_t + FP_s + FN + TN + TP)
double accuracy(const OutcomeCounts& counts);

struct MilestoneReport {
    std::string milestone;
    OutcomeCounts counts;
    double accuracy = 0.0;
    int n_teams = 0;
};

struct AggregateEntry {
    std::string milestone;
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;  // sample std, n-1 denominator; 0 when n = 1
    double fp_sentence_mean = 0.0;
    double fp_team_mean = 0.0;
    double fn_mean = 0.0;
    int n_trials = 0;
};

struct AggregateReport {
    std::vector<AggregateEntry> entries;
};

/// One report per milestone from one trial's per-team outcomes.
MilestoneReport make_report(const std::string& milestone,
                            const std::vector<Outcome>& per_team_outcomes);

/// Mean/std accuracy and mean mistake counts across trials. Every trial
/// must cover the same milestone set.
AggregateReport aggregate(const std::vector<std::vector<MilestoneReport>>& trials);

std::string aggregate_to_csv(const AggregateReport& report);
std::string aggregate_to_json(const AggregateReport& report);

}  // namespace milestone
