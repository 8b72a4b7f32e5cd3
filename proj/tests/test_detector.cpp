#include "milestone/detector.hpp"

#include "doctest.h"
#include "json.hpp"
#include "milestone/errors.hpp"
#include "support/helpers.hpp"

using namespace milestone;

namespace {

struct Harness {
    PuzzleSpec spec = load_puzzle_spec(test_support::fixture_path("puzzle_spec.json"));
    FallbackCounter counter;
    std::shared_ptr<SimulatedClock> clock = std::make_shared<SimulatedClock>();
    RateLimiter limiter{10000, clock};
    DetectorConfig config;

    Harness() { config.token_budget = 20; }

    DetectionResult run(const Transcript& t, Backend& backend, int trial = 0) {
        return detect(t, spec, backend, counter, limiter, *clock, config, trial);
    }
};

Transcript three_chunk_transcript() {
    // budget 20 under the fallback counter: two rendered lines per chunk
    Transcript t;
    t.team_id = "T1";
    const char* texts[] = {
        "let us start looking at the chests",
        "maybe colors matter for the curses",
        "i wonder about the sword icon today",
        "look none of the gems touch here at all",
        "we still need the final phrase",
        "that was a fun puzzle to solve",
    };
    double clock = 0.0;
    for (int i = 0; i < 6; ++i) {
        t.utterances.push_back({i, i % 2 ? "Bob" : "Alice", clock, clock + 1.0, texts[i]});
        clock += 2.0;
    }
    return t;
}

std::string all_empty_json() {
    return R"({"one":"","dual":"","quadruple":"","octopus":"","hex":"","solution":""})";
}

std::string with(const std::string& key, const std::string& value) {
    nlohmann::json obj = nlohmann::json::parse(all_empty_json());
    obj[key] = value;
    return obj.dump();
}

}  // namespace

TEST_CASE("a scripted chunk-2 response resolves to the exact utterance") {
    Harness h;
    Transcript t = three_chunk_transcript();
    auto chunks = chunk_transcript(t, h.counter, h.config.token_budget);
    REQUIRE(chunks.size() == 3);

    nlohmann::json script;
    script["T1"]["2"]["0"] = with("octopus", "look none of the gems touch here at all");
    auto backend = MockBackend::from_script_text(script.dump());

    DetectionResult r = h.run(t, *backend);
    const auto& octopus = r.milestones.at("octopus");
    REQUIRE(octopus.resolved.has_value());
    CHECK(octopus.resolved->utterance_id == 3);
    CHECK(octopus.resolved->speaker == "Bob");
    CHECK(octopus.resolved->timestamp == doctest::Approx(6.0));
    CHECK_FALSE(octopus.hallucinated);
    CHECK(r.chunk_count == 3);
}

TEST_CASE("echoing the provided solution statement is flagged as hallucination") {
    Harness h;
    Transcript t = three_chunk_transcript();
    nlohmann::json script;
    script["T1"]["1"]["0"] = with("octopus", h.spec.find("octopus")->solution_statement);
    auto backend = MockBackend::from_script_text(script.dump());

    DetectionResult r = h.run(t, *backend);
    const auto& octopus = r.milestones.at("octopus");
    CHECK(octopus.hallucinated);
    CHECK_FALSE(octopus.resolved.has_value());
    CHECK_FALSE(octopus.raw_sentence.empty());
}

TEST_CASE("a verbatim transcript sentence is never flagged as hallucination") {
    Harness h;
    Transcript t = three_chunk_transcript();
    nlohmann::json script;
    // every utterance echoed back must resolve, so the flag can never fire
    for (const auto& u : t.utterances) {
        nlohmann::json s;
        script["T1"]["0"]["0"] = with("one", u.text);
        auto backend = MockBackend::from_script_text(script.dump());
        DetectionResult r = h.run(t, *backend);
        CHECK(r.milestones.at("one").resolved.has_value());
        CHECK_FALSE(r.milestones.at("one").hallucinated);
    }
}

TEST_CASE("all-empty scripted responses predict no achievements") {
    Harness h;
    Transcript t = three_chunk_transcript();
    nlohmann::json script;
    for (int c = 0; c < 3; ++c) script["T1"][std::to_string(c)]["0"] = all_empty_json();
    auto backend = MockBackend::from_script_text(script.dump());

    DetectionResult r = h.run(t, *backend);
    for (const auto& [name, det] : r.milestones) {
        CHECK(det.raw_sentence.empty());
        CHECK_FALSE(det.resolved.has_value());
        CHECK_FALSE(det.hallucinated);
    }
}

TEST_CASE("violations accumulate across chunks") {
    Harness h;
    Transcript t = three_chunk_transcript();
    nlohmann::json script;
    script["T1"]["0"]["0"] = "no structure at all";
    script["T1"]["1"]["0"] = "prose " + all_empty_json();
    script["T1"]["2"]["0"] = all_empty_json();
    auto backend = MockBackend::from_script_text(script.dump());

    DetectionResult r = h.run(t, *backend);
    CHECK(r.violation_counts.at("UNPARSEABLE") == 1);
    CHECK(r.violation_counts.at("NON_JSON_WRAPPER") == 1);
}

TEST_CASE("detect is a pure function of transcript, script, budget, and trial") {
    Harness h;
    Transcript t = three_chunk_transcript();
    nlohmann::json script;
    script["T1"]["0"]["0"] = with("hex", "we still need the final phrase");
    auto backend = MockBackend::from_script_text(script.dump());
    std::string a = serialize_detection_result(h.run(t, *backend));
    std::string b = serialize_detection_result(h.run(t, *backend));
    CHECK(a == b);
}

TEST_CASE("run_trials returns identical results for a trial-invariant script") {
    Harness h;
    Transcript t = three_chunk_transcript();
    nlohmann::json script;
    for (int trial = 0; trial < 10; ++trial)
        script["T1"]["0"][std::to_string(trial)] = with("one", t.utterances[0].text);
    auto backend = MockBackend::from_script_text(script.dump());

    TrialBatch batch = run_trials(t, h.spec, *backend, h.counter, h.limiter, *h.clock, h.config, 10);
    REQUIRE(batch.results.size() == 10);
    CHECK(batch.errors.empty());
    for (int trial = 0; trial < 10; ++trial) {
        CHECK(batch.results[trial].trial_index == trial);
        DetectionResult reference = batch.results[0];
        reference.trial_index = trial;
        CHECK(serialize_detection_result(batch.results[trial]) ==
              serialize_detection_result(reference));
    }
}

TEST_CASE("run_trials differs exactly at the scripted trial") {
    Harness h;
    Transcript t = three_chunk_transcript();
    nlohmann::json script;
    script["T1"]["0"]["0"] = with("one", t.utterances[0].text);
    script["T1"]["0"]["1"] = with("one", t.utterances[1].text);
    auto backend = MockBackend::from_script_text(script.dump());

    TrialBatch batch = run_trials(t, h.spec, *backend, h.counter, h.limiter, *h.clock, h.config, 2);
    REQUIRE(batch.results.size() == 2);
    CHECK(batch.results[0].milestones.at("one").resolved->utterance_id == 0);
    CHECK(batch.results[1].milestones.at("one").resolved->utterance_id == 1);
    for (const char* name : {"dual", "quadruple", "octopus", "hex", "solution"}) {
        CHECK(batch.results[0].milestones.at(name).raw_sentence ==
              batch.results[1].milestones.at(name).raw_sentence);
    }
}

TEST_CASE("detection results serialize and parse back") {
    Harness h;
    Transcript t = three_chunk_transcript();
    nlohmann::json script;
    script["T1"]["0"]["0"] = with("dual", t.utterances[2].text);
    auto backend = MockBackend::from_script_text(script.dump());
    DetectionResult r = h.run(t, *backend);
    DetectionResult back = parse_detection_result(serialize_detection_result(r));
    CHECK(serialize_detection_result(back) == serialize_detection_result(r));
}

TEST_CASE("one prompt per chunk is issued") {
    Harness h;
    Transcript t = three_chunk_transcript();

    class CountingBackend : public Backend {
    public:
        CompletionResponse complete(const CompletionRequest&, const RequestContext& ctx) override {
            chunk_indices.push_back(ctx.chunk_index);
            return {ctx.fallback_payload, 0, 0};
        }
        std::vector<int> chunk_indices;
    } backend;

    h.run(t, backend);
    CHECK(backend.chunk_indices == std::vector<int>{0, 1, 2});
}
