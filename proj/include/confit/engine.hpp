// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "confit/core.hpp"
#include "confit/error.hpp"
#include "confit/metrics.hpp"
#include "confit/parallel.hpp"
#include "confit/ranker.hpp"

namespace confit {

struct EngineConfig {
    int k = 4;           // window size
    int s = 2;           // stride
    int t = 2;           // passes
    int pool_size = 20;  // N

    void validate() const {
        if (!(1 <= s && s < k && k <= pool_size)) {
            throw Error(ErrorCode::InvalidConfig, "engine requires 1 <= s < k <= N (got k=" + std::to_string(k) +
                                                      ", s=" + std::to_string(s) + ", N=" + std::to_string(pool_size) +
                                                      ")");
        }
        if (t < 1) throw Error(ErrorCode::InvalidConfig, "engine requires t >= 1");
    }

    std::string label() const { return "k=" + std::to_string(k) + ",s=" + std::to_string(s) + ",t=" + std::to_string(t); }

    static EngineConfig from_json(const json& j) {
        EngineConfig c;
        c.k = j.value("k", c.k);
        c.s = j.value("s", c.s);
        c.t = j.value("t", c.t);
        c.pool_size = j.value("pool_size", c.pool_size);
        c.validate();
        return c;
    }

    ordered_json to_json() const { return {{"k", k}, {"s", s}, {"t", t}, {"pool_size", pool_size}}; }
};

/// 1-based window starts of one pass: N-k+1 down to 1 in steps of s, with the
/// last step clamped to 1. Depends only on (N, k, s).
inline std::vector<int> window_starts(int pool_size, int k, int s) {
    EngineConfig{k, s, 1, pool_size}.validate();
    std::vector<int> starts;
    int start = pool_size - k + 1;
    while (start >= 1) {
        starts.push_back(start);
        if (start == 1) break;
        start = std::max(1, start - s);
    }
    return starts;
}

/// Ranker calls per pass, 1 + ceil((N - k) / s).
inline int comparisons_per_iteration(int pool_size, int k, int s) {
    EngineConfig{k, s, 1, pool_size}.validate();
    return 1 + (pool_size - k + s - 1) / s;
}

struct WindowRecord {
    int pass = 0;   // 1-based
    int start = 0;  // 1-based
    std::vector<std::string> before;
    std::vector<std::string> after;
    std::string raw_text;
    bool repaired = false;
    bool degraded = false;
    std::string error;
};

struct RerankTrace {
    std::string job_id;
    Ordering initial;
    Ordering final_ordering;
    std::vector<WindowRecord> windows;
    int windows_per_pass = 0;

    std::size_t degraded_calls() const {
        return static_cast<std::size_t>(std::count_if(windows.begin(), windows.end(),
                                                      [](const WindowRecord& w) { return w.degraded; }));
    }
};

/// Multi-pass sliding-window re-ranking. Windows are visited bottom-up and each
/// ranker answer rewrites its k slots in place before the next window is read.
/// A ranker answer that is not a permutation of 1..k is treated as degraded and
/// leaves the window unchanged.
inline RerankTrace rerank_pool(const RankedPool& pool, const Corpus& corpus, const Ranker& ranker,
                               const EngineConfig& cfg, const SamplingParams& sampling = {}) {
    cfg.validate();
    if (pool.candidates.size() != static_cast<std::size_t>(cfg.pool_size)) {
        throw Error(ErrorCode::InvalidConfig, "pool for job '" + pool.job_id + "' has " +
                                                  std::to_string(pool.candidates.size()) + " candidates, engine expects " +
                                                  std::to_string(cfg.pool_size));
    }
    const Document& job = corpus.at(pool.job_id);
    const std::vector<int> starts = window_starts(cfg.pool_size, cfg.k, cfg.s);
    const auto k = static_cast<std::size_t>(cfg.k);

    RerankTrace trace;
    trace.job_id = pool.job_id;
    trace.initial = pool.candidates;
    trace.windows_per_pass = static_cast<int>(starts.size());
    Ordering current = pool.candidates;

    for (int pass = 1; pass <= cfg.t; ++pass) {
        for (int start : starts) {
            const auto offset = static_cast<std::size_t>(start - 1);
            WindowRecord record;
            record.pass = pass;
            record.start = start;
            record.before.assign(current.begin() + static_cast<std::ptrdiff_t>(offset),
                                 current.begin() + static_cast<std::ptrdiff_t>(offset + k));

            RankRequest request;
            request.request_id = pool.job_id + "/pass" + std::to_string(pass) + "/start" + std::to_string(start);
            request.job = job;
            for (const auto& id : record.before) request.candidates.push_back(corpus.at(id));
            request.instructions = default_instructions();
            request.sampling = sampling;

            RankResponse response = ranker.rank(request);
            record.raw_text = std::move(response.raw_text);
            record.repaired = response.repaired;
            record.degraded = response.degraded;
            record.error = std::move(response.error);
            std::vector<int> ordering = std::move(response.ordering);
            if (!is_slot_permutation(ordering, k)) {
                ordering = identity_ordering(k);
                record.degraded = true;
                record.repaired = true;
                if (record.error.empty()) record.error = "ranker returned a non-permutation";
            }
            for (std::size_t i = 0; i < k; ++i) {
                current[offset + i] = record.before[static_cast<std::size_t>(ordering[i] - 1)];
            }
            record.after.assign(current.begin() + static_cast<std::ptrdiff_t>(offset),
                                current.begin() + static_cast<std::ptrdiff_t>(offset + k));
            trace.windows.push_back(std::move(record));
        }
    }
    trace.final_ordering = std::move(current);
    return trace;
}

// ---------------------------------------------------------------------------
// Evaluation

struct JobMetrics {
    std::string job_id;
    double ndcg10_before = 0.0;
    double ndcg10_after = 0.0;
    double recall10_before = 0.0;
    double recall10_after = 0.0;
    std::size_t degraded_calls = 0;
};

struct MacroMetrics {
    double ndcg10_before = 0.0;
    double ndcg10_after = 0.0;
    double recall10_before = 0.0;
    double recall10_after = 0.0;

    double average_before() const { return 0.5 * (ndcg10_before + recall10_before); }
    double average_after() const { return 0.5 * (ndcg10_after + recall10_after); }
};

struct EvalReport {
    std::vector<JobMetrics> per_job;
    std::vector<std::string> excluded;     // pools without a positive
    std::vector<std::string> wrong_size;   // pools whose length differs from the engine's N
    MacroMetrics macro;
    std::size_t degraded_calls = 0;
    std::size_t total_calls = 0;
    std::vector<RerankTrace> traces;
};

inline constexpr std::size_t kEvalDepth = 10;

inline JobMetrics score_orderings(const RankedPool& pool, const Ordering& before, const Ordering& after) {
    JobMetrics m;
    m.job_id = pool.job_id;
    const auto rb = pool.relevance(before);
    const auto ra = pool.relevance(after);
    m.ndcg10_before = metrics::ndcg(rb, kEvalDepth);
    m.ndcg10_after = metrics::ndcg(ra, kEvalDepth);
    m.recall10_before = metrics::recall_at_k(rb, kEvalDepth);
    m.recall10_after = metrics::recall_at_k(ra, kEvalDepth);
    return m;
}

inline MacroMetrics macro_average(const std::vector<JobMetrics>& rows) {
    MacroMetrics macro;
    if (rows.empty()) return macro;
    for (const auto& r : rows) {
        macro.ndcg10_before += r.ndcg10_before;
        macro.ndcg10_after += r.ndcg10_after;
        macro.recall10_before += r.recall10_before;
        macro.recall10_after += r.recall10_after;
    }
    const double n = static_cast<double>(rows.size());
    macro.ndcg10_before /= n;
    macro.ndcg10_after /= n;
    macro.recall10_before /= n;
    macro.recall10_after /= n;
    return macro;
}

/// Re-ranks every pool that has a positive and reports nDCG@10 / Recall@10 before
/// and after, macro-averaged over jobs. Jobs run concurrently; rows keep pool order.
inline EvalReport evaluate_run(const std::vector<RankedPool>& pools, const Corpus& corpus, const Ranker& ranker,
                               const EngineConfig& cfg, std::size_t workers = 1, bool keep_traces = false) {
    cfg.validate();
    std::vector<std::size_t> eligible;
    EvalReport report;
    for (std::size_t i = 0; i < pools.size(); ++i) {
        if (pools[i].positive_count() == 0) {
            report.excluded.push_back(pools[i].job_id);
        } else if (pools[i].candidates.size() != static_cast<std::size_t>(cfg.pool_size)) {
            report.wrong_size.push_back(pools[i].job_id);
        } else {
            eligible.push_back(i);
        }
    }
    std::vector<RerankTrace> traces(eligible.size());
    parallel_for(eligible.size(), workers,
                 [&](std::size_t j) { traces[j] = rerank_pool(pools[eligible[j]], corpus, ranker, cfg); });

    for (std::size_t j = 0; j < eligible.size(); ++j) {
        const RankedPool& pool = pools[eligible[j]];
        JobMetrics row = score_orderings(pool, traces[j].initial, traces[j].final_ordering);
        row.degraded_calls = traces[j].degraded_calls();
        report.degraded_calls += row.degraded_calls;
        report.total_calls += traces[j].windows.size();
        report.per_job.push_back(std::move(row));
    }
    report.macro = macro_average(report.per_job);
    if (keep_traces) report.traces = std::move(traces);
    return report;
}

inline ordered_json report_to_json(const EvalReport& report, const EngineConfig& cfg) {
    ordered_json j;
    j["config"] = cfg.to_json();
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.per_job) {
        rows.push_back({{"job_id", r.job_id},
                        {"ndcg10_before", r.ndcg10_before},
                        {"ndcg10_after", r.ndcg10_after},
                        {"recall10_before", r.recall10_before},
                        {"recall10_after", r.recall10_after},
                        {"degraded_calls", r.degraded_calls}});
    }
    j["per_job"] = std::move(rows);
    j["macro"] = {{"jobs", report.per_job.size()},
                  {"ndcg10_before", report.macro.ndcg10_before},
                  {"ndcg10_after", report.macro.ndcg10_after},
                  {"recall10_before", report.macro.recall10_before},
                  {"recall10_after", report.macro.recall10_after},
                  {"average_before", report.macro.average_before()},
                  {"average_after", report.macro.average_after()},
                  {"degraded_calls", report.degraded_calls},
                  {"total_calls", report.total_calls}};
    j["excluded"] = report.excluded;
    j["wrong_size"] = report.wrong_size;
    return j;
}

inline ordered_json trace_to_json(const RerankTrace& trace) {
    ordered_json j;
    j["job_id"] = trace.job_id;
    j["initial"] = trace.initial;
    j["final"] = trace.final_ordering;
    j["windows_per_pass"] = trace.windows_per_pass;
    ordered_json windows = ordered_json::array();
    for (const auto& w : trace.windows) {
        windows.push_back({{"pass", w.pass},
                           {"start", w.start},
                           {"before", w.before},
                           {"after", w.after},
                           {"raw_text", w.raw_text},
                           {"repaired", w.repaired},
                           {"degraded", w.degraded},
                           {"error", w.error}});
    }
    j["windows"] = std::move(windows);
    return j;
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationRow {
    EngineConfig cfg;
    std::optional<std::string> error;  // set for rejected grid points
    double ndcg10 = 0.0;
    double recall10 = 0.0;
    double average = 0.0;
    int comparisons_per_iter = 0;
    std::size_t degraded_calls = 0;
};

/// One evaluation per grid point. Invalid points are reported and skipped.
inline std::vector<AblationRow> ablate(const std::vector<RankedPool>& pools, const Corpus& corpus, const Ranker& ranker,
                                       const std::vector<EngineConfig>& grid, std::size_t workers = 1) {
    std::vector<AblationRow> rows;
    for (const auto& cfg : grid) {
        AblationRow row;
        row.cfg = cfg;
        try {
            cfg.validate();
        } catch (const Error& e) {
            row.error = e.what();
            rows.push_back(std::move(row));
            continue;
        }
        row.comparisons_per_iter = comparisons_per_iteration(cfg.pool_size, cfg.k, cfg.s);
        const EvalReport report = evaluate_run(pools, corpus, ranker, cfg, workers);
        row.ndcg10 = report.macro.ndcg10_after;
        row.recall10 = report.macro.recall10_after;
        row.average = report.macro.average_after();
        row.degraded_calls = report.degraded_calls;
        rows.push_back(std::move(row));
    }
    return rows;
}

/// The six (k, s) settings of the window/stride ablation at N = 20.
inline std::vector<EngineConfig> standard_ks_grid(int t = 2, int pool_size = 20) {
    std::vector<EngineConfig> grid;
    for (auto [k, s] : std::vector<std::pair<int, int>>{{2, 1}, {3, 1}, {3, 2}, {4, 1}, {4, 2}, {4, 3}}) {
        grid.push_back(EngineConfig{k, s, t, pool_size});
    }
    return grid;
}

}  // namespace confit
