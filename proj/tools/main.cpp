// Batch driver for transcript ingestion, milestone detection, the embedding
// baseline, and evaluation. Subcommands: align, detect, baseline, eval,
// report.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "milestone/baseline.hpp"
#include "milestone/detector.hpp"
#include "milestone/errors.hpp"
#include "milestone/evaluation.hpp"
#include "milestone/run_config.hpp"

namespace fs = std::filesystem;
using namespace milestone;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;
constexpr int kExitGate = 4;  // accuracy below the configured floor

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << content;
}

std::unique_ptr<TokenCounter> make_counter(const RunConfig& config, bool force_fallback) {
    if (!config.merges.empty() && !force_fallback)
        return std::make_unique<BpeCounter>(BpeCounter::from_merges_file(config.merges));
    return std::make_unique<FallbackCounter>();
}

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
    if (config.backend == "mock") {
        if (config.mock_script.empty())
            throw ConfigError("mock backend requires a mock_script path");
        return MockBackend::from_script_file(config.mock_script);
    }
    HttpBackendConfig http;
    return make_http_backend(http);
}

std::unique_ptr<EmbeddingProvider> make_embedder(const RunConfig& config) {
    if (config.embedder == "stub") return std::make_unique<StubEmbedder>(64, 3, config.seed);
    if (config.embedder == "file") {
        if (config.embedding_cache.empty())
            throw ConfigError("file embedder requires an embedding_cache path");
        return std::make_unique<FileEmbedder>(config.embedding_cache);
    }
    throw ConfigError("unknown embedder: " + config.embedder);
}

// team_id from the file stem, transcript content from canonical JSONL
std::map<std::string, Transcript> load_transcripts(const std::string& dir) {
    std::map<std::string, Transcript> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".jsonl") continue;
        Transcript t = parse_canonical(read_file(entry.path().string()));
        t.team_id = entry.path().stem().string();
        out[t.team_id] = std::move(t);
    }
    if (out.empty()) throw DataError("no .jsonl transcripts in " + dir);
    return out;
}

std::map<std::string, GroundTruth> load_ground_truths(const std::string& dir) {
    std::map<std::string, GroundTruth> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        GroundTruth gt = parse_ground_truth(read_file(entry.path().string()));
        out[gt.team_id] = std::move(gt);
    }
    if (out.empty()) throw DataError("no .json ground truth files in " + dir);
    return out;
}

std::vector<LongSegment> parse_long_segments(const std::string& jsonl_text) {
    std::vector<LongSegment> segments;
    std::istringstream in(jsonl_text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("long segments: invalid JSON at line " + std::to_string(lineno) + ": " +
                            e.what());
        }
        LongSegment seg;
        seg.speaker = obj.value("speaker", "");
        seg.start = obj.at("start").get<double>();
        seg.end = obj.at("end").get<double>();
        seg.text = obj.at("text").get<std::string>();
        segments.push_back(std::move(seg));
    }
    return segments;
}

int cmd_align(const std::string& long_path, const std::string& short_path,
              const std::string& out_path) {
    auto segments = parse_long_segments(read_file(long_path));
    Transcript short_side = short_path.ends_with(".vtt") ? parse_vtt(read_file(short_path))
                                                         : parse_canonical(read_file(short_path));
    AlignResult result = align(segments, short_side.utterances);
    result.transcript.team_id = short_side.team_id;
    write_file(out_path, serialize_canonical(result.transcript));
    std::cout << "aligned " << result.transcript.size() << " fragments, "
              << result.speaker_discrepancies << " speaker discrepancies";
    if (result.long_side_empty) std::cout << " (warning: long side empty, output unchanged)";
    std::cout << "\n";
    return 0;
}

int cmd_detect(const RunConfig& config) {
    validate_run_config(config);
    PuzzleSpec spec = load_puzzle_spec(config.puzzle_spec);
    auto counter = make_counter(config, false);
    auto transcripts = load_transcripts(config.transcripts_dir);

    // the mock backend runs offline; a simulated clock keeps rate-limit
    // waits and retry backoff instantaneous
    std::shared_ptr<Clock> clock;
    if (config.backend == "mock")
        clock = std::make_shared<SimulatedClock>();
    else
        clock = std::make_shared<SteadyClock>();
    RateLimiter limiter(config.tpm, clock);
    auto backend = make_backend(config);

    DetectorConfig det;
    det.model_name = config.model;
    det.token_budget = config.token_budget;
    det.max_response_tokens = config.max_response_tokens;

    std::vector<std::string> team_ids;
    for (const auto& [team, t] : transcripts) team_ids.push_back(team);

    std::mutex io_mutex;
    std::map<std::string, std::map<std::string, int>> violations_by_team;
    std::vector<std::string> failures;
    std::atomic<size_t> next{0};

    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= team_ids.size()) return;
            const std::string& team = team_ids[i];
            const Transcript& t = transcripts.at(team);
            for (int trial = 0; trial < config.trials; ++trial) {
                fs::path out = fs::path(config.output_dir) / (team + "_trial" + std::to_string(trial) + ".json");
                if (fs::exists(out)) continue;  // resumable: per-(team,trial) files
                try {
                    DetectionResult r =
                        detect(t, spec, *backend, *counter, limiter, *clock, det, trial);
                    write_file(out, serialize_detection_result(r));
                    std::lock_guard lock(io_mutex);
                    for (const auto& [code, count] : r.violation_counts)
                        violations_by_team[team][code] += count;
                } catch (const std::exception& e) {
                    std::lock_guard lock(io_mutex);
                    failures.push_back(team + " trial " + std::to_string(trial) + ": " + e.what());
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < std::min<int>(config.jobs, static_cast<int>(team_ids.size())); ++j)
        pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    nlohmann::ordered_json summary{{"violations_by_team", violations_by_team},
                                   {"failed_runs", failures}};
    write_file(fs::path(config.output_dir) / "violations_summary.json", summary.dump(2) + "\n");
    std::cout << "detect: " << team_ids.size() << " teams x " << config.trials << " trials, "
              << failures.size() << " failures\n";
    for (const auto& f : failures) std::cerr << "  failed: " << f << "\n";
    return failures.empty() ? 0 : kExitBackend;
}

int cmd_baseline(const RunConfig& config) {
    validate_run_config(config);
    PuzzleSpec spec = load_puzzle_spec(config.puzzle_spec);
    if (config.thresholds.empty()) throw ConfigError("baseline requires a thresholds path");
    ThresholdTable thresholds = load_threshold_table(config.thresholds, spec);
    auto embedder = make_embedder(config);
    auto transcripts = load_transcripts(config.transcripts_dir);

    std::vector<int> ks{1, config.k};
    if (config.k == 1) ks = {1};

    for (const auto& [team, t] : transcripts) {
        nlohmann::ordered_json milestones = nlohmann::ordered_json::object();
        for (const auto& m : spec.milestones) {
            auto ranked = score_candidates(t, m, *embedder);
            nlohmann::ordered_json ranked_json = nlohmann::ordered_json::array();
            for (size_t i = 0; i < ranked.size() && i < 20; ++i)
                ranked_json.push_back({{"utterance_id", ranked[i].utterance_id},
                                       {"score", ranked[i].score},
                                       {"best_paraphrase_index", ranked[i].best_paraphrase_index}});
            nlohmann::ordered_json top_k = nlohmann::ordered_json::object();
            for (int k : ks) {
                auto hits = top_k_detect(ranked, thresholds.at(m.name), k);
                std::vector<int> ids;
                for (const auto& h : hits) ids.push_back(h.utterance_id);
                top_k[std::to_string(k)] = ids;
            }
            milestones[m.name] = {{"ranked", ranked_json}, {"top_k", top_k}};
        }
        nlohmann::ordered_json doc{{"team_id", team}, {"k", config.k}, {"milestones", milestones}};
        write_file(fs::path(config.output_dir) / (team + "_baseline.json"), doc.dump(2) + "\n");
    }
    std::cout << "baseline: " << transcripts.size() << " teams, k in {1," << config.k << "}\n";
    return 0;
}

// trial index -> team -> milestone -> prediction
using PredictionSet = std::map<int, std::map<std::string, std::map<std::string, Prediction>>>;

PredictionSet load_predictions(const std::string& dir, int k) {
    PredictionSet predictions;
    bool any = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.path().extension() != ".json") continue;
        if (name.find("_trial") != std::string::npos) {
            DetectionResult r = parse_detection_result(read_file(entry.path().string()));
            for (const auto& [milestone, det] : r.milestones) {
                Prediction p;
                if (det.resolved)
                    p.proposal_ids.push_back(det.resolved->utterance_id);
                else if (!det.raw_sentence.empty())
                    p.unresolved_count = 1;  // hallucinated or unmatchable: still a positive claim
                predictions[r.trial_index][r.team_id][milestone] = std::move(p);
            }
            any = true;
        } else if (name.find("_baseline") != std::string::npos) {
            nlohmann::json doc = nlohmann::json::parse(read_file(entry.path().string()));
            std::string team = doc.at("team_id").get<std::string>();
            for (auto& [milestone, m] : doc.at("milestones").items()) {
                Prediction p;
                const auto& top_k = m.at("top_k");
                std::string key = std::to_string(k);
                if (!top_k.contains(key)) key = top_k.begin().key();
                for (const auto& id : top_k.at(key)) p.proposal_ids.push_back(id.get<int>());
                predictions[0][team][milestone] = std::move(p);
            }
            any = true;
        }
    }
    if (!any) throw DataError("no prediction files in " + dir);
    return predictions;
}

int cmd_eval(const std::string& predictions_dir, const std::string& ground_truth_dir,
             const std::string& output_dir, int k, double min_accuracy) {
    auto truths = load_ground_truths(ground_truth_dir);
    auto predictions = load_predictions(predictions_dir, k);

    std::vector<std::string> milestone_names;
    for (const auto& [name, mt] : truths.begin()->second.milestones)
        milestone_names.push_back(name);

    std::vector<std::vector<MilestoneReport>> trials;
    for (const auto& [trial, by_team] : predictions) {
        std::vector<MilestoneReport> reports;
        nlohmann::ordered_json counts_json = nlohmann::ordered_json::object();
        for (const auto& name : milestone_names) {
            std::vector<Outcome> outcomes;
            for (const auto& [team, gt] : truths) {
                auto truth_it = gt.milestones.find(name);
                if (truth_it == gt.milestones.end())
                    throw DataError("ground truth for " + team + " lacks milestone " + name);
                Prediction p;  // a team with no prediction file predicts nothing
                if (auto team_it = by_team.find(team); team_it != by_team.end())
                    if (auto m_it = team_it->second.find(name); m_it != team_it->second.end())
                        p = m_it->second;
                outcomes.push_back(classify(p, truth_it->second));
            }
            MilestoneReport report = make_report(name, outcomes);
            nlohmann::ordered_json counts = nlohmann::ordered_json::object();
            for (const auto& [o, c] : report.counts) counts[outcome_name(o)] = c;
            counts_json[name] = {{"counts", counts}, {"accuracy", report.accuracy}};
            reports.push_back(std::move(report));
        }
        write_file(fs::path(output_dir) / ("trial_" + std::to_string(trial) + "_counts.json"),
                   counts_json.dump(2) + "\n");
        trials.push_back(std::move(reports));
    }

    AggregateReport agg = aggregate(trials);
    write_file(fs::path(output_dir) / "aggregate.csv", aggregate_to_csv(agg));
    write_file(fs::path(output_dir) / "aggregate.json", aggregate_to_json(agg));

    bool below_floor = false;
    for (const auto& e : agg.entries) {
        std::cout << e.milestone << ": acc " << e.accuracy_mean << " +/- " << e.accuracy_std
                  << " (FP-s " << e.fp_sentence_mean << ", FP-t " << e.fp_team_mean << ", FN "
                  << e.fn_mean << ")\n";
        if (e.accuracy_mean < min_accuracy) below_floor = true;
    }
    if (below_floor) {
        std::cerr << "accuracy below floor " << min_accuracy << "\n";
        return kExitGate;
    }
    return 0;
}

int cmd_report(const std::string& aggregate_path, const std::string& csv_out,
               double min_accuracy) {
    nlohmann::json doc = nlohmann::json::parse(read_file(aggregate_path));
    AggregateReport agg;
    for (const auto& e : doc.at("milestones")) {
        AggregateEntry entry;
        entry.milestone = e.at("milestone").get<std::string>();
        entry.accuracy_mean = e.at("acc_mean").get<double>();
        entry.accuracy_std = e.at("acc_std").get<double>();
        entry.fp_sentence_mean = e.at("fp_s_mean").get<double>();
        entry.fp_team_mean = e.at("fp_t_mean").get<double>();
        entry.fn_mean = e.at("fn_mean").get<double>();
        entry.n_trials = e.value("n_trials", 1);
        agg.entries.push_back(std::move(entry));
    }
    if (!csv_out.empty()) write_file(csv_out, aggregate_to_csv(agg));
    std::cout << aggregate_to_csv(agg);
    for (const auto& e : agg.entries)
        if (e.accuracy_mean < min_accuracy) {
            std::cerr << e.milestone << " accuracy " << e.accuracy_mean << " below floor "
                      << min_accuracy << "\n";
            return kExitGate;
        }
    return 0;
}

void apply_overrides(RunConfig& config, const CLI::App* cmd) {
    auto set_if = [&](const char* flag, auto& field) {
        using T = std::decay_t<decltype(field)>;
        if (cmd->count(flag)) field = cmd->get_option(flag)->as<T>();
    };
    set_if("--backend", config.backend);
    set_if("--model", config.model);
    set_if("--mock-script", config.mock_script);
    set_if("--merges", config.merges);
    set_if("--thresholds", config.thresholds);
    set_if("--embedder", config.embedder);
    set_if("--embedding-cache", config.embedding_cache);
    set_if("--output-dir", config.output_dir);
    set_if("--token-budget", config.token_budget);
    set_if("--trials", config.trials);
    set_if("--k", config.k);
    set_if("--tpm", config.tpm);
    set_if("--jobs", config.jobs);
    set_if("--puzzle-spec", config.puzzle_spec);
    set_if("--transcripts", config.transcripts_dir);
    set_if("--ground-truth", config.ground_truth_dir);
    if (cmd->count("--fallback-counter")) config.merges.clear();
}

void add_config_flags(CLI::App* cmd) {
    cmd->add_option("--config", "run config JSON");
    cmd->add_option("--puzzle-spec", "puzzle spec JSON path");
    cmd->add_option("--transcripts", "canonical transcripts directory");
    cmd->add_option("--ground-truth", "ground truth directory");
    cmd->add_option("--backend", "mock or http");
    cmd->add_option("--model", "model name");
    cmd->add_option("--mock-script", "mock script JSON path");
    cmd->add_option("--merges", "BPE merge table path");
    cmd->add_flag("--fallback-counter", "use the whitespace fallback counter");
    cmd->add_option("--thresholds", "threshold table JSON path");
    cmd->add_option("--embedder", "stub or file");
    cmd->add_option("--embedding-cache", "embedding cache JSON path");
    cmd->add_option("--output-dir", "output directory");
    cmd->add_option("--token-budget", "tokens per chunk");
    cmd->add_option("--trials", "trial count");
    cmd->add_option("--k", "top-k cutoff");
    cmd->add_option("--tpm", "tokens-per-minute budget");
    cmd->add_option("--jobs", "parallel team pipelines");
}

RunConfig resolve_config(const CLI::App* cmd) {
    RunConfig config;
    if (cmd->count("--config"))
        config = load_run_config(cmd->get_option("--config")->as<std::string>());
    apply_overrides(config, cmd);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Milestone detection in participant-tagged meeting transcripts"};
    app.require_subcommand(1);

    auto* align_cmd = app.add_subcommand("align", "map long-form monologues onto short fragments");
    std::string long_path, short_path, align_out;
    align_cmd->add_option("--long", long_path, "long segments JSONL")->required();
    align_cmd->add_option("--short", short_path, "short fragments (.jsonl or .vtt)")->required();
    align_cmd->add_option("--out", align_out, "output canonical JSONL")->required();

    auto* detect_cmd = app.add_subcommand("detect", "iterative LLM milestone detection");
    add_config_flags(detect_cmd);

    auto* baseline_cmd = app.add_subcommand("baseline", "embedding-similarity milestone search");
    add_config_flags(baseline_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
    std::string pred_dir, gt_dir, eval_out = "eval_out";
    int eval_k = 5;
    double floor = 0.0;
    eval_cmd->add_option("--predictions", pred_dir, "predictions directory")->required();
    eval_cmd->add_option("--ground-truth", gt_dir, "ground truth directory")->required();
    eval_cmd->add_option("--out", eval_out, "output directory");
    eval_cmd->add_option("--k", eval_k, "top-k cutoff for baseline predictions");
    eval_cmd->add_option("--min-accuracy", floor, "fail if any milestone falls below");

    auto* report_cmd = app.add_subcommand("report", "render an aggregate report as CSV");
    std::string agg_path, csv_out;
    double report_floor = 0.0;
    report_cmd->add_option("--aggregate", agg_path, "aggregate.json from eval")->required();
    report_cmd->add_option("--csv", csv_out, "CSV output path");
    report_cmd->add_option("--min-accuracy", report_floor, "fail if any milestone falls below");

    try {
        app.parse(argc, argv);
        if (align_cmd->parsed()) return cmd_align(long_path, short_path, align_out);
        if (detect_cmd->parsed()) return cmd_detect(resolve_config(detect_cmd));
        if (baseline_cmd->parsed()) return cmd_baseline(resolve_config(baseline_cmd));
        if (eval_cmd->parsed()) return cmd_eval(pred_dir, gt_dir, eval_out, eval_k, floor);
        if (report_cmd->parsed()) return cmd_report(agg_path, csv_out, report_floor);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
