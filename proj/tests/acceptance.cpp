// Acceptance checks for the full pipeline. Each criterion prints one
// [PASS]/[FAIL] line; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "milestone/baseline.hpp"
#include "milestone/detector.hpp"
#include "milestone/evaluation.hpp"
#include "support/helpers.hpp"

using namespace milestone;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int index, const char* label, bool ok) {
    std::printf("[%s] %d: %s\n", ok ? "PASS" : "FAIL", index, label);
    if (!ok) ++failures;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// 1. accuracy on reference per-milestone count vectors
bool accuracy_formula() {
    bool ok = true;
    ok &= accuracy({{Outcome::TP, 10}, {Outcome::TN, 6}, {Outcome::FpTeam, 4}}) == 0.80;
    ok &= accuracy({{Outcome::TP, 9}, {Outcome::TN, 5}, {Outcome::FpSentence, 2},
                    {Outcome::FpTeam, 1}, {Outcome::FN, 3}}) == 0.70;
    ok &= accuracy({{Outcome::TP, 12}, {Outcome::TN, 3}, {Outcome::FpSentence, 1},
                    {Outcome::FN, 4}}) == 0.75;
    ok &= accuracy({{Outcome::TP, 3}, {Outcome::TN, 17}}) == 1.00;
    return ok;
}

// 2. classify against an independent decision tree on a 5-team micro-dataset
bool classification_oracle() {
    std::vector<MilestoneTruth> truths{
        {false, {}}, {true, {2}}, {true, {0, 4}}, {false, {}}, {true, {7}}};
    std::vector<Prediction> shapes;
    shapes.push_back({});                    // silent
    shapes.push_back({{2}, 0});              // single resolved
    shapes.push_back({{9}, 0});              // single resolved, wrong id
    shapes.push_back({{}, 1});               // unresolved claim
    shapes.push_back({{9, 4, 1}, 0});        // ranked list containing a valid id
    shapes.push_back({{9, 8}, 0});           // ranked list missing every valid id
    for (const auto& truth : truths) {
        for (const auto& p : shapes) {
            Outcome expected;
            if (!truth.achieved) {
                expected = p.empty() ? Outcome::TN : Outcome::FpTeam;
            } else if (p.empty()) {
                expected = Outcome::FN;
            } else {
                bool hit = false;
                for (int id : p.proposal_ids) hit |= truth.valid_utterance_ids.count(id) > 0;
                expected = hit ? Outcome::TP : Outcome::FpSentence;
            }
            if (classify(p, truth) != expected) return false;
        }
    }
    return true;
}

// 3. chunker partition and budget invariants on 1000 randomized transcripts
bool chunker_invariants() {
    auto started = std::chrono::steady_clock::now();
    FallbackCounter counter;
    std::mt19937 rng(4242);
    const int budget = 3600;
    for (int trial = 0; trial < 1000; ++trial) {
        Transcript t = test_support::random_transcript(rng, 80);
        auto chunks = chunk_transcript(t, counter, budget);
        int next_id = 0;
        for (const auto& c : chunks) {
            if (c.first_utterance_id != next_id) return false;
            if (c.last_utterance_id < c.first_utterance_id) return false;
            if (c.token_count > budget) return false;
            if (c.token_count != counter.count(c.rendered_text)) return false;
            next_id = c.last_utterance_id + 1;
        }
        if (next_id != static_cast<int>(t.size())) return false;
        if (t.empty() != chunks.empty()) return false;
    }
    auto elapsed = std::chrono::steady_clock::now() - started;
    return elapsed < std::chrono::seconds(30);
}

// 4. response parser survives the six observed malformation patterns
bool parser_robustness() {
    std::set<std::string> keys{"one", "dual", "quadruple", "octopus", "hex", "solution"};
    std::string full =
        R"({"one":"a","dual":"b","quadruple":"c","octopus":"d","hex":"e","solution":"f"})";

    auto clean = extract_summary(full, keys);
    if (!clean.summary || !clean.violations.empty()) return false;

    auto pair = extract_summary("previous: " + full + " updated: " +
                                    R"({"one":"z","dual":"b","quadruple":"c","octopus":"d",)"
                                    R"("hex":"e","solution":"f"})",
                                keys);
    if (!pair.summary || pair.summary->values.at("one") != "z") return false;
    if (!pair.has(Violation::MultipleObjects)) return false;

    auto prose = extract_summary("The summary stays the same: " + full, keys);
    if (!prose.summary || !prose.has(Violation::NonJsonWrapper)) return false;

    auto missing = extract_summary(R"({"one":"a"})", keys);
    if (!missing.summary || !missing.has(Violation::MissingKey)) return false;
    if (missing.summary->values.at("solution") != "") return false;

    auto unknown = extract_summary(
        R"({"one":"a","dual":"b","quadruple":"c","octopus":"d","hex":"e","solution":"f","x":"y"})",
        keys);
    if (!unknown.summary || !unknown.has(Violation::UnknownKey)) return false;

    auto refusal = extract_summary("I could not find any milestones in this chunk.", keys);
    if (refusal.summary || !refusal.has(Violation::Unparseable)) return false;
    return true;
}

// 5. end-to-end over the bundled 3-team fixture: byte-identical across 10
// runs, with the scripted hallucination flagged and scored FP
bool end_to_end_determinism() {
    PuzzleSpec spec = load_puzzle_spec(test_support::fixture_path("puzzle_spec.json"));
    auto backend = MockBackend::from_script_file(test_support::fixture_path("mock_script.json"));
    FallbackCounter counter;
    DetectorConfig config;
    config.token_budget = 55;

    std::map<std::string, Transcript> transcripts;
    for (const char* team : {"T1", "T2", "T3"}) {
        Transcript t = parse_canonical(
            slurp(test_support::fixture_path("transcripts/" + std::string(team) + ".jsonl")));
        t.team_id = team;
        transcripts[team] = std::move(t);
    }

    std::string reference;
    for (int run = 0; run < 10; ++run) {
        std::ostringstream all;
        for (const auto& [team, t] : transcripts) {
            auto clock = std::make_shared<SimulatedClock>();
            RateLimiter limiter(10000, clock);
            all << serialize_detection_result(
                detect(t, spec, *backend, counter, limiter, *clock, config, 0));
        }
        if (run == 0)
            reference = all.str();
        else if (all.str() != reference)
            return false;
    }

    auto clock = std::make_shared<SimulatedClock>();
    RateLimiter limiter(10000, clock);
    DetectionResult t2 =
        detect(transcripts.at("T2"), spec, *backend, counter, limiter, *clock, config, 0);
    const auto& octopus = t2.milestones.at("octopus");
    if (!octopus.hallucinated || octopus.resolved.has_value()) return false;

    GroundTruth gt =
        parse_ground_truth(slurp(test_support::fixture_path("ground_truth/T2.json")));
    Prediction p;
    p.unresolved_count = 1;
    Outcome outcome = classify(p, gt.milestones.at("octopus"));
    return outcome == Outcome::FpSentence;
}

// 6. no 60-second window ever exceeds the token budget across 10000 grants
bool rate_limiter_window() {
    auto clock = std::make_shared<SimulatedClock>();
    RateLimiter limiter(10000, clock);
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> size(1, 4000);
    std::vector<std::pair<double, int>> grants;
    for (int i = 0; i < 10000; ++i) {
        int tokens = size(rng);
        limiter.acquire(tokens);
        grants.emplace_back(clock->now(), tokens);
        if (rng() % 3 == 0) clock->advance(static_cast<double>(rng() % 20));
    }
    size_t lo = 0;
    long window = 0;
    for (size_t hi = 0; hi < grants.size(); ++hi) {
        window += grants[hi].second;
        while (grants[lo].first <= grants[hi].first - 60.0) window -= grants[lo++].second;
        if (window > 10000) return false;
    }
    return true;
}

// 7. baseline ranking equals pairwise brute force, and is invariant under a
// positive rescaling of all embeddings
bool baseline_oracle() {
    struct Scaled : EmbeddingProvider {
        const EmbeddingProvider& inner;
        explicit Scaled(const EmbeddingProvider& e) : inner(e) {}
        std::vector<double> embed(const std::string& text) const override {
            auto v = inner.embed(text);
            for (double& x : v) x *= 12.25;
            return v;
        }
        int dimension() const override { return inner.dimension(); }
        std::string name() const override { return "scaled"; }
    };

    StubEmbedder embedder;
    Scaled scaled(embedder);
    MilestoneSpec m;
    m.name = "octopus";
    m.solution_statement = "The octopus curse is present if and only if no gems are touching.";
    m.paraphrases = {"none of the gems touch", "every gem stands alone"};

    std::mt19937 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        Transcript t = test_support::random_transcript(rng, 20);
        if (t.empty()) continue;
        auto ranked = score_candidates(t, m, embedder);

        std::vector<std::vector<double>> refs{embedder.embed(m.solution_statement)};
        for (const auto& p : m.paraphrases) refs.push_back(embedder.embed(p));
        std::vector<std::pair<double, int>> expected;
        for (const auto& u : t.utterances) {
            double best = -2.0;
            for (const auto& r : refs) best = std::max(best, cosine(embedder.embed(u.text), r));
            expected.emplace_back(best, u.id);
        }
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (size_t i = 0; i < expected.size(); ++i) {
            if (ranked[i].utterance_id != expected[i].second) return false;
            if (std::abs(ranked[i].score - expected[i].first) > 1e-9) return false;
        }

        auto rescaled = score_candidates(t, m, scaled);
        for (size_t i = 0; i < ranked.size(); ++i)
            if (ranked[i].utterance_id != rescaled[i].utterance_id) return false;

        for (int k : {1, 5}) {
            auto hits = top_k_detect(ranked, 0.3, k);
            if (static_cast<int>(hits.size()) > k) return false;
            for (size_t i = 0; i < hits.size(); ++i) {
                if (hits[i].score < 0.3) return false;
                if (hits[i].utterance_id != ranked[i].utterance_id) return false;
            }
        }
    }
    return true;
}

// 8. the 20-team achievement fixture reproduces the expected per-milestone
// achievement counts, and evaluation counts always partition the team set
bool achievement_counts() {
    std::map<std::string, int> achieved;
    std::vector<GroundTruth> truths;
    for (const auto& entry :
         fs::directory_iterator(test_support::fixture_path("achievement_ground_truth"))) {
        GroundTruth gt = parse_ground_truth(slurp(entry.path().string()));
        for (const auto& [name, mt] : gt.milestones)
            if (mt.achieved) ++achieved[name];
        truths.push_back(std::move(gt));
    }
    if (truths.size() != 20) return false;
    std::map<std::string, int> expected{{"one", 11},  {"dual", 18}, {"quadruple", 18},
                                        {"octopus", 20}, {"hex", 14}, {"solution", 3}};
    if (achieved != expected) return false;

    // silent predictions for every team: counts per milestone must sum to 20
    for (const auto& [name, n] : expected) {
        std::vector<Outcome> outcomes;
        for (const auto& gt : truths) outcomes.push_back(classify({}, gt.milestones.at(name)));
        MilestoneReport r = make_report(name, outcomes);
        int total = 0;
        for (const auto& [o, c] : r.counts) total += c;
        if (total != 20) return false;
        if (r.counts[Outcome::FN] != n) return false;
        if (r.counts[Outcome::TN] != 20 - n) return false;
    }
    return true;
}

// 9. BPE counting on the toy merge table
bool bpe_oracle() {
    BpeCounter counter = BpeCounter::from_merges_text("a a\naa a\n");
    return counter.count("") == 0 && counter.count("aaab") == 2;
}

}  // namespace

int main() {
    report(1, "accuracy formula on reference count vectors", accuracy_formula());
    report(2, "five-way classification matches the decision tree", classification_oracle());
    report(3, "chunker partitions 1000 random transcripts within budget", chunker_invariants());
    report(4, "response parser survives six malformation patterns", parser_robustness());
    report(5, "end-to-end mock runs are byte-identical with FP-scored hallucination",
           end_to_end_determinism());
    report(6, "rate limiter never exceeds the budget in any 60s window", rate_limiter_window());
    report(7, "baseline ranking matches brute force and ignores rescaling", baseline_oracle());
    report(8, "achievement fixture counts and outcome partition", achievement_counts());
    report(9, "toy BPE merge table counts", bpe_oracle());
    return failures == 0 ? 0 : 1;
}
