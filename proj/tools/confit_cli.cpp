// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

// confit: command-line front end for window construction, re-ranking,
// evaluation, distillation and the policy-gradient simulator.
//
// Exit codes: 0 success, 1 finished with degraded ranker calls, 2 configuration
// or data error.

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace confit;
using confit::cli::RunConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDegraded = 1;
constexpr int kExitConfig = 2;

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    bool trace = false;
    std::string out_dir;
};

struct CommandFlags {
    std::string corpus, labels, pools, windows, input, output;
    std::string ranker;
    std::optional<double> p_flip;
    std::string strategy;
    std::optional<int> k, s, t;
    std::optional<std::size_t> num_jobs, num_resumes, num_windows;
    std::string reward;
    std::optional<double> learning_rate;
    std::optional<int> epochs;
    bool noise_task = false;
};

RunConfig effective_config(const GlobalFlags& g) {
    RunConfig cfg = RunConfig::load(g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
    cfg.jobs = std::max<std::size_t>(1, g.jobs);
    cfg.trace = g.trace;
    return cfg;
}

/// Sidecar "<artifact>.meta.json" for line-oriented artifacts.
void write_meta(const std::string& artifact, const RunConfig& cfg, const std::string& command,
                const ordered_json& extra = ordered_json::object()) {
    ordered_json meta = cfg.provenance(command);
    for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    auto out = open_output(artifact + ".meta.json");
    out << meta.dump(2) << '\n';
}

void write_json_file(const std::string& path, const ordered_json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

void ensure_parent(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

json ranker_spec(const RunConfig& cfg, const CommandFlags& f, const char* section) {
    json spec = cfg.section(section);
    if (spec.empty() && std::string(section) != "ranker") spec = cfg.section("ranker");
    if (!f.ranker.empty()) spec["type"] = f.ranker;
    if (f.p_flip) spec["p_flip"] = *f.p_flip;
    return spec;
}

EngineConfig engine_config(const RunConfig& cfg, const CommandFlags& f) {
    json e = cfg.section("engine");
    if (f.k) e["k"] = *f.k;
    if (f.s) e["s"] = *f.s;
    if (f.t) e["t"] = *f.t;
    return EngineConfig::from_json(e);
}

struct LoadedData {
    Corpus corpus;
    std::vector<Label> labels;
    std::vector<RankedPool> pools;
};

LoadedData load_data(const RunConfig& cfg, const CommandFlags& f) {
    LoadedData data;
    const std::string corpus = cfg.existing_path(f.corpus, "corpus", "corpus.jsonl");
    const std::string labels = cfg.existing_path(f.labels, "labels", "labels.jsonl");
    const std::string pools = cfg.existing_path(f.pools, "pools", "pools.jsonl");
    data.corpus = load_corpus(corpus);
    data.labels = load_labels(labels);
    data.pools = load_pools(pools, data.labels, data.corpus);
    return data;
}

// ---------------------------------------------------------------------------

int cmd_gen_synthetic(const RunConfig& cfg, const CommandFlags& f) {
    auto gen = synthetic::GeneratorConfig::from_json(cfg.section("generator"));
    if (f.num_jobs) gen.jobs = *f.num_jobs;
    if (f.num_resumes) gen.resumes = *f.num_resumes;
    const auto data = synthetic::generate(gen, cfg.seed);
    fs::create_directories(cfg.output_dir);
    const std::string corpus = cfg.path("", "corpus", "corpus.jsonl");
    const std::string labels = cfg.path("", "labels", "labels.jsonl");
    const std::string pools = cfg.path("", "pools", "pools.jsonl");
    for (const auto* p : {&corpus, &labels, &pools}) ensure_parent(*p);
    write_corpus(corpus, data.corpus);
    {
        auto out = open_output(labels);
        write_labels(out, data.labels);
    }
    {
        auto out = open_output(pools);
        write_pools(out, data.pools);
    }
    const ordered_json extra = {{"generator", gen.to_json()}};
    for (const auto* p : {&corpus, &labels, &pools}) write_meta(*p, cfg, "gen-synthetic", extra);
    std::cout << "generated " << gen.jobs << " jobs, " << gen.resumes << " resumes, " << data.labels.size()
              << " labels -> " << cfg.output_dir.string() << '\n';
    return kExitOk;
}

int cmd_build_windows(const RunConfig& cfg, const CommandFlags& f) {
    const LoadedData data = load_data(cfg, f);
    const PipelineConfig pipeline = PipelineConfig::from_json(cfg.section("pipeline"));
    const WindowBuildReport report = build_all_windows(data.pools, pipeline, cfg.seed, cfg.jobs);

    const std::string out_path = cfg.path(f.output, "windows", "windows.jsonl");
    ensure_parent(out_path);
    write_windows(out_path, report.windows);

    ordered_json skip = ordered_json::object();
    for (const auto& [reason, count] : report.skip_counts()) skip[reason] = count;
    ordered_json summary = {{"jobs_total", data.pools.size()},
                            {"jobs_kept", report.jobs_kept},
                            {"jobs_skipped", report.skipped.size()},
                            {"skip_reasons", skip},
                            {"windows", report.windows.size()},
                            {"duplicates_discarded", report.duplicates_discarded},
                            {"pipeline", pipeline.to_json()}};
    ordered_json skipped = ordered_json::array();
    for (const auto& [job, reason] : report.skipped) skipped.push_back({{"job_id", job}, {"reason", to_string(reason)}});
    ordered_json skip_report = {{"provenance", cfg.provenance("build-windows")}, {"summary", summary},
                                {"skipped", skipped}};
    write_json_file((fs::path(out_path).parent_path() / "skip_report.json").string(), skip_report);
    write_meta(out_path, cfg, "build-windows", {{"summary", summary}});

    std::cout << "jobs: " << data.pools.size() << " total, " << report.jobs_kept << " kept, " << report.skipped.size()
              << " skipped";
    for (const auto& [reason, count] : report.skip_counts()) std::cout << " " << reason << "=" << count;
    std::cout << "\nwindows: " << report.windows.size() << " (" << report.duplicates_discarded
              << " duplicates discarded) -> " << out_path << '\n';
    return kExitOk;
}

int cmd_annotate(const RunConfig& cfg, const CommandFlags& f) {
    const std::string in_path = cfg.existing_path(f.windows, "windows", "windows.jsonl");
    const Corpus corpus = load_corpus(cfg.existing_path(f.corpus, "corpus", "corpus.jsonl"));
    const auto labels = load_labels(cfg.existing_path(f.labels, "labels", "labels.jsonl"));
    const PipelineConfig pipeline = PipelineConfig::from_json(cfg.section("pipeline"));
    const auto ranker = cli::make_ranker(ranker_spec(cfg, f, "annotator"), labels, cfg.seed);

    AnnotationReport report = annotate_difficulty(load_windows(in_path), corpus, *ranker, pipeline, cfg.jobs);
    const std::string out_path = cfg.path(f.output, "annotated", "windows_annotated.jsonl");
    ensure_parent(out_path);
    write_windows(out_path, report.windows);

    std::map<std::string, std::size_t> histogram;
    std::size_t hard = 0;
    for (const auto& w : report.windows) {
        if (!w.r_bar) continue;
        std::ostringstream key;
        key << std::fixed << std::setprecision(1) << *w.r_bar;
        ++histogram[key.str()];
        if (is_hard(w, pipeline)) ++hard;
    }
    write_meta(out_path, cfg, "annotate",
               {{"ranker", ranker->name()}, {"r_bar_histogram", histogram}, {"failed", report.failed}});
    std::cout << "annotated " << report.windows.size() - report.failed.size() << "/" << report.windows.size()
              << " windows with " << ranker->name() << " (" << hard << " hard)";
    for (const auto& [bucket, count] : histogram) std::cout << " r=" << bucket << ":" << count;
    std::cout << " -> " << out_path << '\n';
    if (!report.failed.empty()) {
        std::cerr << report.failed.size() << " window(s) left unannotated after ranker failures\n";
        return kExitDegraded;
    }
    return kExitOk;
}

int cmd_filter(const RunConfig& cfg, const CommandFlags& f) {
    const std::string in_path = cfg.existing_path(f.windows, "annotated", "windows_annotated.jsonl");
    const PipelineConfig pipeline = PipelineConfig::from_json(cfg.section("pipeline"));
    std::string name = f.strategy.empty() ? cfg.section("filter").value("strategy", std::string("remove_hard"))
                                          : f.strategy;
    const auto strategy = parse_strategy(name);
    if (!strategy) throw Error(ErrorCode::ConfigError, "unknown strategy '" + name + "'");

    const auto windows = load_windows(in_path);
    StrategyContext ctx;
    ctx.workers = cfg.jobs;
    std::optional<Corpus> corpus;
    std::unique_ptr<Ranker> judge_ranker;
    std::unique_ptr<Judge> judge;
    if (*strategy == Strategy::LlmFilter) {
        corpus = load_corpus(cfg.existing_path(f.corpus, "corpus", "corpus.jsonl"));
        json spec = ranker_spec(cfg, f, "judge");
        if (spec.value("type", std::string()) == "endpoint") {
            judge = std::make_unique<LlmJudge>(EndpointConfig::from_json(spec.value("endpoint", json::object())));
        } else {
            const auto labels = load_labels(cfg.existing_path(f.labels, "labels", "labels.jsonl"));
            judge_ranker = cli::make_ranker(spec, labels, cfg.seed);
            judge = std::make_unique<RankerJudge>(*judge_ranker);
        }
        ctx.judge = judge.get();
        ctx.corpus = &*corpus;
    }
    const auto kept = apply_strategy(windows, *strategy, pipeline, cfg.seed, ctx);
    const std::string out_path = cfg.path(f.output, "filtered", "windows_filtered.jsonl");
    ensure_parent(out_path);
    write_windows(out_path, kept);
    write_meta(out_path, cfg, "filter",
               {{"strategy", to_string(*strategy)}, {"input", windows.size()}, {"output", kept.size()}});
    std::cout << to_string(*strategy) << ": " << windows.size() << " -> " << kept.size() << " windows -> " << out_path
              << '\n';
    return kExitOk;
}

int cmd_rerank(const RunConfig& cfg, const CommandFlags& f) {
    const LoadedData data = load_data(cfg, f);
    const EngineConfig engine = engine_config(cfg, f);
    const auto ranker = cli::make_ranker(ranker_spec(cfg, f, "ranker"), data.labels, cfg.seed);
    const EvalReport report = evaluate_run(data.pools, data.corpus, *ranker, engine, cfg.jobs, true);

    const std::string results_path = cfg.path(f.output, "reranked", "reranked.jsonl");
    ensure_parent(results_path);
    {
        auto out = open_output(results_path);
        for (const auto& trace : report.traces) {
            ordered_json j;
            j["job_id"] = trace.job_id;
            j["initial"] = trace.initial;
            j["final"] = trace.final_ordering;
            j["degraded_calls"] = trace.degraded_calls();
            write_jsonl_line(out, j);
        }
    }
    write_meta(results_path, cfg, "rerank", {{"ranker", ranker->name()}, {"engine", engine.to_json()}});

    ordered_json report_json = report_to_json(report, engine);
    report_json["ranker"] = ranker->name();
    report_json["provenance"] = cfg.provenance("rerank");
    const std::string report_path = (fs::path(results_path).parent_path() / "rerank_report.json").string();
    write_json_file(report_path, report_json);

    if (cfg.trace) {
        const std::string trace_path = (fs::path(results_path).parent_path() / "trace.jsonl").string();
        auto out = open_output(trace_path);
        for (const auto& trace : report.traces) write_jsonl_line(out, trace_to_json(trace));
    }

    std::cout << std::fixed << std::setprecision(4) << "reranked " << report.per_job.size() << " jobs with "
              << ranker->name() << " (" << engine.label() << "), excluded " << report.excluded.size() << " without positives and " << report.wrong_size.size() << " short pools" << '\n'
              << "nDCG@10 " << report.macro.ndcg10_before << " -> " << report.macro.ndcg10_after << ", Recall@10 "
              << report.macro.recall10_before << " -> " << report.macro.recall10_after << '\n'
              << "degraded calls: " << report.degraded_calls << "/" << report.total_calls << '\n';
    return report.degraded_calls > 0 ? kExitDegraded : kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, const CommandFlags& f) {
    const LoadedData data = load_data(cfg, f);
    const std::string results_path = cfg.existing_path(f.input, "reranked", "reranked.jsonl");
    std::map<std::string, const RankedPool*> by_job;
    for (const auto& pool : data.pools) by_job[pool.job_id] = &pool;

    EvalReport report;
    auto in = open_input(results_path);
    read_jsonl(in, [&](std::size_t line_no, const json& record) {
        const std::string job = confit::detail::require_string(record, "job_id", line_no);
        const auto initial = confit::detail::require_string_list(record, "initial", line_no);
        const auto final_ordering = confit::detail::require_string_list(record, "final", line_no);
        auto it = by_job.find(job);
        if (it == by_job.end()) throw Error(ErrorCode::UnknownDocument, "results mention unknown job '" + job + "'");
        if (!is_permutation_of(final_ordering, it->second->candidates) ||
            !is_permutation_of(initial, it->second->candidates)) {
            throw MalformedRecord(line_no, "ordering for job '" + job + "' is not a permutation of its pool");
        }
        if (it->second->positive_count() == 0) {
            report.excluded.push_back(job);
            return;
        }
        JobMetrics row = score_orderings(*it->second, initial, final_ordering);
        row.degraded_calls = record.value("degraded_calls", std::size_t{0});
        report.degraded_calls += row.degraded_calls;
        report.per_job.push_back(std::move(row));
    });
    report.macro = macro_average(report.per_job);
    const EngineConfig engine = engine_config(cfg, f);
    ordered_json j = report_to_json(report, engine);
    j["provenance"] = cfg.provenance("evaluate");
    const std::string out_path = cfg.path(f.output, "evaluation", "evaluation.json");
    ensure_parent(out_path);
    write_json_file(out_path, j);
    std::cout << std::fixed << std::setprecision(4) << "evaluated " << report.per_job.size() << " jobs: nDCG@10 "
              << report.macro.ndcg10_after << " Recall@10 " << report.macro.recall10_after << " Average "
              << report.macro.average_after() << " (before: " << report.macro.ndcg10_before << " / "
              << report.macro.recall10_before << ") -> " << out_path << '\n';
    return kExitOk;
}

int cmd_ablate(const RunConfig& cfg, const CommandFlags& f) {
    const LoadedData data = load_data(cfg, f);
    const auto ranker = cli::make_ranker(ranker_spec(cfg, f, "ranker"), data.labels, cfg.seed);
    const EngineConfig base = engine_config(cfg, f);
    std::vector<EngineConfig> grid;
    const json ablation = cfg.section("ablation");
    if (ablation.contains("grid")) {
        for (const auto& point : ablation.at("grid")) {
            EngineConfig c = base;
            c.k = point.value("k", c.k);
            c.s = point.value("s", c.s);
            c.t = point.value("t", c.t);
            grid.push_back(c);
        }
    } else {
        grid = standard_ks_grid(base.t, base.pool_size);
    }
    const auto rows = ablate(data.pools, data.corpus, *ranker, grid, cfg.jobs);

    const std::string out_path = cfg.path(f.output, "ablation", "ablation.csv");
    ensure_parent(out_path);
    auto out = open_output(out_path);
    out << "setting,k,s,t,ndcg10,recall10,average,comparisons_per_iter,error\n";
    std::cout << "setting          nDCG@10  Recall@10  Average  Comp./iter.\n";
    std::size_t degraded = 0;
    for (const auto& row : rows) {
        char line[256];
        if (row.error) {
            std::cerr << "rejected " << row.cfg.label() << ": " << *row.error << '\n';
            std::string msg = *row.error;
            for (auto& c : msg) {
                if (c == ',' || c == '\n') c = ';';
            }
            out << '"' << row.cfg.label() << "\"," << row.cfg.k << ',' << row.cfg.s << ',' << row.cfg.t << ",,,,,"
                << msg << '\n';
            continue;
        }
        degraded += row.degraded_calls;
        std::snprintf(line, sizeof line, "\"%s\",%d,%d,%d,%.6f,%.6f,%.6f,%d,\n", row.cfg.label().c_str(), row.cfg.k,
                      row.cfg.s, row.cfg.t, row.ndcg10, row.recall10, row.average, row.comparisons_per_iter);
        out << line;
        std::snprintf(line, sizeof line, "%-16s %7.2f  %9.2f  %7.2f  %11d\n", row.cfg.label().c_str(),
                      100.0 * row.ndcg10, 100.0 * row.recall10, 100.0 * row.average, row.comparisons_per_iter);
        std::cout << line;
    }
    write_meta(out_path, cfg, "ablate", {{"ranker", ranker->name()}});
    return degraded > 0 ? kExitDegraded : kExitOk;
}

int cmd_distill(const RunConfig& cfg, const CommandFlags& f) {
    const std::string in_path = cfg.existing_path(f.windows, "filtered", "windows_filtered.jsonl");
    const Corpus corpus = load_corpus(cfg.existing_path(f.corpus, "corpus", "corpus.jsonl"));
    const auto labels = load_labels(cfg.existing_path(f.labels, "labels", "labels.jsonl"));
    const auto teacher = cli::make_ranker(ranker_spec(cfg, f, "teacher"), labels, cfg.seed);
    const auto windows = load_windows(in_path);
    const DistillReport report = distill_sft(windows, corpus, *teacher, cfg.jobs);

    const std::string out_path = cfg.path(f.output, "sft", "sft.jsonl");
    ensure_parent(out_path);
    {
        auto out = open_output(out_path);
        write_sft(out, report.records);
    }
    const double keep_rate =
        windows.empty() ? 0.0 : static_cast<double>(report.records.size()) / static_cast<double>(windows.size());
    write_meta(out_path, cfg, "distill",
               {{"teacher", teacher->name()},
                {"windows", windows.size()},
                {"kept", report.records.size()},
                {"dropped_misranked", report.dropped_misranked},
                {"dropped_malformed", report.dropped_malformed},
                {"keep_rate", keep_rate}});
    std::cout << "distilled " << report.records.size() << "/" << windows.size() << " windows (keep rate "
              << std::fixed << std::setprecision(4) << keep_rate << ", misranked " << report.dropped_misranked
              << ", malformed " << report.dropped_malformed << ") -> " << out_path << '\n';
    return kExitOk;
}

int cmd_simulate_grpo(const RunConfig& cfg, const CommandFlags& f) {
    json g = cfg.section("grpo");
    if (!f.reward.empty()) g["reward"] = f.reward;
    if (f.learning_rate) g["learning_rate"] = *f.learning_rate;
    if (f.epochs) g["epochs"] = *f.epochs;
    grpo::GrpoConfig gcfg = grpo::GrpoConfig::from_json(g);
    gcfg.seed = cfg.seed;

    const json task_cfg = cfg.section("grpo_task");
    const std::size_t n = f.num_windows.value_or(task_cfg.value("windows", std::size_t{500}));
    const bool informative = !f.noise_task && task_cfg.value("informative", true);
    const auto task = grpo::make_synthetic_task(n, informative, cfg.seed, task_cfg.value("signal", 1.0));

    grpo::PLPolicy initial;
    initial.feature_names = task.feature_names;
    initial.theta.assign(task.feature_names.size(), 0.0);
    const auto result = grpo::train(initial, task.windows, gcfg);

    fs::create_directories(cfg.output_dir);
    const std::string curve_path = cfg.path(f.output, "curve", "curve.csv");
    ensure_parent(curve_path);
    {
        auto out = open_output(curve_path);
        out << "step,mean_reward,kl,grad_norm,eval_ndcg4,batch_reward\n";
        char line[160];
        for (const auto& p : result.curve) {
            std::snprintf(line, sizeof line, "%d,%.9f,%.9g,%.9g,%.9f,%.9f\n", p.step, p.mean_reward, p.kl,
                          p.grad_norm, p.eval_ndcg4, p.batch_reward);
            out << line;
        }
    }
    const ordered_json summary = {{"grpo", gcfg.to_json()},
                                  {"task", {{"windows", n}, {"informative", informative}}},
                                  {"initial_expected_reward", result.initial_expected_reward},
                                  {"final_expected_reward", result.final_expected_reward}};
    write_meta(curve_path, cfg, "simulate-grpo", summary);
    ordered_json policy = grpo::policy_to_json(result.policy);
    policy["provenance"] = cfg.provenance("simulate-grpo");
    write_json_file((fs::path(curve_path).parent_path() / "policy.json").string(), policy);

    std::cout << std::fixed << std::setprecision(4) << "simulate-grpo (" << grpo::to_string(gcfg.reward) << ", "
              << (informative ? "informative" : "noise") << " task, " << n << " windows, " << result.curve.size()
              << " steps): expected reward " << result.initial_expected_reward << " -> "
              << result.final_expected_reward << " -> " << curve_path << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"confit: listwise re-ranking toolkit for person-job fit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    GlobalFlags g;
    app.add_option("--config", g.config, "JSON config file");
    app.add_option("--seed", g.seed, "RNG seed (overrides the config)");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--trace", g.trace, "Write per-window ranker traces");
    app.add_option("--out-dir", g.out_dir, "Directory for default input/output paths");

    CommandFlags f;
    std::string command;
    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->callback([&command, name] { command = name; });
        return sub;
    };
    auto data_flags = [&](CLI::App* sub) {
        sub->add_option("--corpus", f.corpus, "corpus.jsonl");
        sub->add_option("--labels", f.labels, "labels.jsonl");
        sub->add_option("--pools", f.pools, "pools.jsonl");
    };
    auto ranker_flags = [&](CLI::App* sub) {
        sub->add_option("--ranker", f.ranker, "identity | oracle | noisy | endpoint");
        sub->add_option("--p-flip", f.p_flip, "Swap probability for the noisy ranker");
    };
    auto engine_flags = [&](CLI::App* sub) {
        sub->add_option("-k,--window-size", f.k, "Window size");
        sub->add_option("-s,--stride", f.s, "Stride");
        sub->add_option("-t,--iterations", f.t, "Passes");
    };

    auto* gen = add("gen-synthetic", "Write a synthetic corpus, labels and retrieval pools");
    gen->add_option("--num-jobs", f.num_jobs, "Jobs to generate");
    gen->add_option("--num-resumes", f.num_resumes, "Resumes to generate");

    auto* build = add("build-windows", "Turn labeled pools into 4-candidate training windows");
    data_flags(build);
    build->add_option("-o,--out", f.output, "windows.jsonl");

    auto* annotate = add("annotate", "Estimate per-window difficulty with repeated ranker calls");
    annotate->add_option("--corpus", f.corpus, "corpus.jsonl");
    annotate->add_option("--labels", f.labels, "labels.jsonl");
    annotate->add_option("--windows", f.windows, "Input windows");
    annotate->add_option("-o,--out", f.output, "Annotated windows");
    ranker_flags(annotate);

    auto* filter = add("filter", "Apply a training-data strategy to annotated windows");
    filter->add_option("--windows", f.windows, "Annotated windows");
    filter->add_option("--strategy", f.strategy, "all | remove_hard | subsample_hard | hint_augment | llm_filter");
    filter->add_option("--corpus", f.corpus, "corpus.jsonl (llm_filter)");
    filter->add_option("--labels", f.labels, "labels.jsonl (llm_filter with a built-in judge)");
    filter->add_option("-o,--out", f.output, "Filtered windows");
    ranker_flags(filter);

    auto* rerank = add("rerank", "Sliding-window re-ranking of every pool");
    data_flags(rerank);
    ranker_flags(rerank);
    engine_flags(rerank);
    rerank->add_option("-o,--out", f.output, "reranked.jsonl");

    auto* evaluate = add("evaluate", "nDCG@10 / Recall@10 of re-ranked orderings");
    data_flags(evaluate);
    evaluate->add_option("--results", f.input, "reranked.jsonl");
    evaluate->add_option("-o,--out", f.output, "evaluation.json");

    auto* abl = add("ablate", "Sweep window size / stride / passes");
    data_flags(abl);
    ranker_flags(abl);
    engine_flags(abl);
    abl->add_option("-o,--out", f.output, "ablation.csv");

    auto* distill = add("distill", "Keep teacher outputs that rank the accepted candidate first");
    distill->add_option("--corpus", f.corpus, "corpus.jsonl");
    distill->add_option("--labels", f.labels, "labels.jsonl");
    distill->add_option("--windows", f.windows, "Windows to distill");
    distill->add_option("-o,--out", f.output, "sft.jsonl");
    ranker_flags(distill);

    auto* sim = add("simulate-grpo", "Train the Plackett-Luce policy simulator");
    sim->add_option("--reward", f.reward, "rearank | rankr1");
    sim->add_option("--num-windows", f.num_windows, "Synthetic training windows");
    sim->add_option("--lr", f.learning_rate, "Learning rate");
    sim->add_option("--epochs", f.epochs, "Epochs");
    sim->add_flag("--noise-task", f.noise_task, "Use uninformative features");
    sim->add_option("-o,--out", f.output, "curve.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const RunConfig cfg = effective_config(g);
        if (command == "gen-synthetic") return cmd_gen_synthetic(cfg, f);
        if (command == "build-windows") return cmd_build_windows(cfg, f);
        if (command == "annotate") return cmd_annotate(cfg, f);
        if (command == "filter") return cmd_filter(cfg, f);
        if (command == "rerank") return cmd_rerank(cfg, f);
        if (command == "evaluate") return cmd_evaluate(cfg, f);
        if (command == "ablate") return cmd_ablate(cfg, f);
        if (command == "distill") return cmd_distill(cfg, f);
        if (command == "simulate-grpo") return cmd_simulate_grpo(cfg, f);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "error: ConfigError: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: IoError: " << e.what() << '\n';
        return kExitConfig;
    }
    std::cerr << "error: no command\n";
    return kExitConfig;
}
