#include <random>

#include <benchmark/benchmark.h>

#include "milestone/baseline.hpp"
#include "milestone/segmentation.hpp"
#include "milestone/transcript.hpp"

using namespace milestone;

namespace {

Transcript synthetic_transcript(int n) {
    static const char* vocab[] = {"gems", "sword", "curse", "touching", "maybe",
                                  "look",  "red",   "chest", "phrase",   "symmetry"};
    std::mt19937 rng(1234);
    Transcript t;
    t.team_id = "bench";
    double clock = 0.0;
    for (int i = 0; i < n; ++i) {
        std::string text;
        int words = 4 + static_cast<int>(rng() % 12);
        for (int w = 0; w < words; ++w) {
            if (w) text += ' ';
            text += vocab[rng() % 10];
        }
        t.utterances.push_back({i, rng() % 2 ? "Alice" : "Bob", clock, clock + 2.0, text});
        clock += 3.0;
    }
    return t;
}

void BM_FallbackChunking(benchmark::State& state) {
    Transcript t = synthetic_transcript(static_cast<int>(state.range(0)));
    FallbackCounter counter;
    for (auto _ : state) benchmark::DoNotOptimize(chunk_transcript(t, counter, 3600));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FallbackChunking)->Arg(100)->Arg(1000);

void BM_BpeCount(benchmark::State& state) {
    BpeCounter counter = BpeCounter::from_merges_text(
        "t h\nth e\ne r\ner e\ng e\nge m\ngem s\ns w\nsw o\nswo r\nswor d\n");
    Transcript t = synthetic_transcript(200);
    std::string text;
    for (const auto& u : t.utterances) text += u.text + "\n";
    for (auto _ : state) benchmark::DoNotOptimize(counter.count(text));
    state.SetBytesProcessed(state.iterations() * text.size());
}
BENCHMARK(BM_BpeCount);

void BM_BaselineScoring(benchmark::State& state) {
    Transcript t = synthetic_transcript(static_cast<int>(state.range(0)));
    StubEmbedder embedder;
    MilestoneSpec m;
    m.name = "octopus";
    m.solution_statement = "the curse is present if and only if no gems are touching";
    m.paraphrases = {"none of the gems touch", "every gem stands alone"};
    for (auto _ : state) benchmark::DoNotOptimize(score_candidates(t, m, embedder));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BaselineScoring)->Arg(100)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
