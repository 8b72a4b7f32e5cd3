#include "milestone/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "milestone/errors.hpp"
#include "json.hpp"

namespace milestone {

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::TP: return "TP";
        case Outcome::TN: return "TN";
        case Outcome::FN: return "FN";
        case Outcome::FpTeam: return "FP_TEAM";
        case Outcome::FpSentence: return "FP_SENTENCE";
    }
    return "UNKNOWN";
}

Outcome classify(const Prediction& prediction, const MilestoneTruth& truth) {
    if (!truth.achieved) return prediction.empty() ? Outcome::TN : Outcome::FpTeam;
    if (prediction.empty()) return Outcome::FN;
    for (int id : prediction.proposal_ids)
        if (truth.valid_utterance_ids.contains(id)) return Outcome::TP;
    return Outcome::FpSentence;
}

double accuracy(const OutcomeCounts& counts) {
    int total = 0;
    for (const auto& [o, c] : counts) {
        if (c < 0) throw DataError("accuracy: negative outcome count");
        total += c;
    }
    if (total == 0) throw DataError("accuracy: zero total count");
    auto get = [&](Outcome o) {
        auto it = counts.find(o);
        return it == counts.end() ? 0 : it->second;
    };
    return static_cast<double>(get(Outcome::TN) + get(Outcome::TP)) / total;
}

MilestoneReport make_report(const std::string& milestone,
                            const std::vector<Outcome>& per_team_outcomes) {
    MilestoneReport report;
    report.milestone = milestone;
    report.n_teams = static_cast<int>(per_team_outcomes.size());
    for (Outcome o : per_team_outcomes) ++report.counts[o];
    report.accuracy = accuracy(report.counts);
    return report;
}

AggregateReport aggregate(const std::vector<std::vector<MilestoneReport>>& trials) {
    if (trials.empty()) throw DataError("aggregate: no trials");

    std::vector<std::string> names;
    for (const auto& r : trials.front()) names.push_back(r.milestone);
    for (const auto& trial : trials) {
        std::vector<std::string> these;
        for (const auto& r : trial) these.push_back(r.milestone);
        if (these != names) throw DataError("aggregate: inconsistent milestone sets across trials");
    }

    AggregateReport report;
    const int n = static_cast<int>(trials.size());
    for (size_t m = 0; m < names.size(); ++m) {
        AggregateEntry entry;
        entry.milestone = names[m];
        entry.n_trials = n;
        std::vector<double> accs;
        for (const auto& trial : trials) {
            const MilestoneReport& r = trial[m];
            accs.push_back(r.accuracy);
            auto get = [&](Outcome o) {
                auto it = r.counts.find(o);
                return it == r.counts.end() ? 0 : it->second;
            };
            entry.fp_sentence_mean += get(Outcome::FpSentence);
            entry.fp_team_mean += get(Outcome::FpTeam);
            entry.fn_mean += get(Outcome::FN);
        }
        entry.fp_sentence_mean /= n;
        entry.fp_team_mean /= n;
        entry.fn_mean /= n;
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= n;
        entry.accuracy_mean = mean;
        if (n > 1) {
            double ss = 0.0;
            for (double a : accs) ss += (a - mean) * (a - mean);
            entry.accuracy_std = std::sqrt(ss / (n - 1));
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

std::string aggregate_to_csv(const AggregateReport& report) {
    std::ostringstream out;
    out << "milestone,acc_mean,acc_std,fp_s_mean,fp_t_mean,fn_mean\n";
    for (const auto& e : report.entries) {
        out << e.milestone << "," << e.accuracy_mean << "," << e.accuracy_std << ","
            << e.fp_sentence_mean << "," << e.fp_team_mean << "," << e.fn_mean << "\n";
    }
    return out.str();
}

std::string aggregate_to_json(const AggregateReport& report) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"milestone", e.milestone},
                           {"acc_mean", e.accuracy_mean},
                           {"acc_std", e.accuracy_std},
                           {"fp_s_mean", e.fp_sentence_mean},
                           {"fp_t_mean", e.fp_team_mean},
                           {"fn_mean", e.fn_mean},
                           {"n_trials", e.n_trials}});
    }
    return nlohmann::ordered_json{{"milestones", entries}}.dump(2) + "\n";
}

}  // namespace milestone
