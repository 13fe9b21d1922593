// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confit/core.hpp"
#include "confit/error.hpp"
#include "confit/parallel.hpp"
#include "confit/random.hpp"
#include "confit/ranker.hpp"

namespace confit {

/// One job with a single accepted candidate and sampled negatives.
///
/// `candidate_ids` holds the gold id first, then the negatives in draw order.
/// `presented_order[j]` is the 1-based index into `candidate_ids` shown in slot j+1.
struct Window {
    std::string window_id;
    std::string job_id;
    std::vector<std::string> candidate_ids;
    std::string gold_id;
    std::vector<int> presented_order;
    std::optional<double> r_bar;
    std::optional<std::string> hint;

    std::size_t size() const { return candidate_ids.size(); }

    /// Candidate ids in presentation (slot) order.
    std::vector<std::string> presented_ids() const {
        std::vector<std::string> ids;
        ids.reserve(presented_order.size());
        for (int idx : presented_order) ids.push_back(candidate_ids[static_cast<std::size_t>(idx - 1)]);
        return ids;
    }

    /// 1-based slot at which the gold candidate is presented.
    int gold_slot() const {
        const auto ids = presented_ids();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] == gold_id) return static_cast<int>(i + 1);
        }
        throw Error(ErrorCode::UnknownCandidate, "gold '" + gold_id + "' missing from window " + window_id);
    }

    void validate() const {
        auto fail = [&](const std::string& why) {
            throw Error(ErrorCode::MalformedRecord, "window " + window_id + ": " + why);
        };
        if (candidate_ids.size() < 2) fail("needs at least two candidates");
        if (std::count(candidate_ids.begin(), candidate_ids.end(), gold_id) != 1) fail("gold must appear exactly once");
        std::set<std::string> unique(candidate_ids.begin(), candidate_ids.end());
        if (unique.size() != candidate_ids.size()) fail("candidate ids repeat");
        if (!is_slot_permutation(presented_order, candidate_ids.size())) fail("presented_order is not a permutation");
        if (r_bar && !(*r_bar >= 0.0 && *r_bar <= 1.0)) fail("r_bar outside [0, 1]");
    }

    friend bool operator==(const Window&, const Window&) = default;
};

struct PipelineConfig {
    int window_size = 4;
    int neg_per_window = 3;
    int n_rep = 3;
    int m_max = 11;
    int min_pool = 20;
    int annotate_trials = 5;
    double hard_threshold = 0.4;
    double subsample_ratio = 0.5;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (window_size < 2 || neg_per_window < 1 || n_rep < 1 || m_max < 1 || min_pool < 1 || annotate_trials < 1) {
            throw Error(ErrorCode::InvalidConfig, "pipeline counts must be positive (window_size >= 2)");
        }
        if (neg_per_window != window_size - 1) {
            throw Error(ErrorCode::InvalidConfig, "neg_per_window must equal window_size - 1");
        }
        if (!(subsample_ratio >= 0.0 && subsample_ratio <= 1.0)) {
            throw Error(ErrorCode::InvalidConfig, "subsample_ratio must lie in [0, 1]");
        }
    }

    static PipelineConfig from_json(const json& j) {
        PipelineConfig c;
        c.window_size = j.value("window_size", c.window_size);
        c.neg_per_window = j.value("neg_per_window", c.window_size - 1);
        c.n_rep = j.value("n_rep", c.n_rep);
        c.m_max = j.value("m_max", c.m_max);
        c.min_pool = j.value("min_pool", c.min_pool);
        c.annotate_trials = j.value("annotate_trials", c.annotate_trials);
        c.hard_threshold = j.value("hard_threshold", c.hard_threshold);
        c.subsample_ratio = j.value("subsample_ratio", c.subsample_ratio);
        c.validate();
        return c;
    }

    ordered_json to_json() const {
        return {{"window_size", window_size},         {"neg_per_window", neg_per_window},
                {"n_rep", n_rep},                     {"m_max", m_max},
                {"min_pool", min_pool},               {"annotate_trials", annotate_trials},
                {"hard_threshold", hard_threshold},   {"subsample_ratio", subsample_ratio}};
    }
};

// ---------------------------------------------------------------------------
// Partition and window construction

enum class SkipReason { TooFewCandidates, NoPositive, TooManyPositives, TooFewNegatives };

inline std::string_view to_string(SkipReason reason) {
    switch (reason) {
        case SkipReason::TooFewCandidates: return "too_few_candidates";
        case SkipReason::NoPositive: return "no_positive";
        case SkipReason::TooManyPositives: return "too_many_positives";
        case SkipReason::TooFewNegatives: return "too_few_negatives";
    }
    return "unknown";
}

struct Partition {
    std::optional<SkipReason> skip;
    std::vector<std::string> positives;  // pool order
    std::vector<std::string> negatives;  // pool order, unlabeled included
};

inline Partition partition_pool(const RankedPool& pool, const PipelineConfig& cfg) {
    Partition part;
    for (const auto& id : pool.candidates) {
        (pool.is_positive(id) ? part.positives : part.negatives).push_back(id);
    }
    if (pool.candidates.size() < static_cast<std::size_t>(cfg.min_pool)) {
        part.skip = SkipReason::TooFewCandidates;
    } else if (part.positives.empty()) {
        part.skip = SkipReason::NoPositive;
    } else if (part.positives.size() >= static_cast<std::size_t>(cfg.m_max)) {
        part.skip = SkipReason::TooManyPositives;
    } else if (part.negatives.size() < static_cast<std::size_t>(cfg.neg_per_window)) {
        part.skip = SkipReason::TooFewNegatives;
    }
    return part;
}

/// Windows for one job: per positive, `n_rep` draws of distinct negatives, with
/// repeated id sets (unordered) discarded and the presentation order shuffled.
/// Deterministic in (pool, cfg, seed). Returns nothing for skipped pools.
inline std::vector<Window> build_windows(const RankedPool& pool, const PipelineConfig& cfg, std::uint64_t seed,
                                         std::size_t* duplicates_out = nullptr) {
    cfg.validate();
    const Partition part = partition_pool(pool, cfg);
    std::vector<Window> windows;
    if (part.skip) return windows;

    Rng rng(child_seed(seed, "windows/" + pool.job_id));
    std::set<std::vector<std::string>> seen;
    std::size_t duplicates = 0;
    for (const auto& positive : part.positives) {
        for (int rep = 0; rep < cfg.n_rep; ++rep) {
            Window w;
            w.job_id = pool.job_id;
            w.gold_id = positive;
            w.candidate_ids.push_back(positive);
            for (std::size_t idx : rng.sample_without_replacement(part.negatives.size(),
                                                                  static_cast<std::size_t>(cfg.neg_per_window))) {
                w.candidate_ids.push_back(part.negatives[idx]);
            }
            w.presented_order = identity_ordering(w.candidate_ids.size());
            rng.shuffle(w.presented_order);

            std::vector<std::string> key = w.candidate_ids;
            std::sort(key.begin(), key.end());
            if (!seen.insert(std::move(key)).second) {
                ++duplicates;
                continue;
            }
            w.window_id = pool.job_id + "#" + std::to_string(windows.size());
            windows.push_back(std::move(w));
        }
    }
    if (duplicates_out != nullptr) *duplicates_out = duplicates;
    return windows;
}

struct WindowBuildReport {
    std::vector<Window> windows;
    std::vector<std::pair<std::string, SkipReason>> skipped;
    std::size_t jobs_kept = 0;
    std::size_t duplicates_discarded = 0;

    std::map<std::string, std::size_t> skip_counts() const {
        std::map<std::string, std::size_t> counts;
        for (auto reason : {SkipReason::TooFewCandidates, SkipReason::NoPositive, SkipReason::TooManyPositives,
                            SkipReason::TooFewNegatives}) {
            counts[std::string(to_string(reason))] = 0;
        }
        for (const auto& [job, reason] : skipped) ++counts[std::string(to_string(reason))];
        return counts;
    }
};

/// Builds windows for every pool (parallel across jobs, merged in pool order).
inline WindowBuildReport build_all_windows(const std::vector<RankedPool>& pools, const PipelineConfig& cfg,
                                           std::uint64_t seed, std::size_t workers = 1) {
    cfg.validate();
    std::vector<std::vector<Window>> per_job(pools.size());
    std::vector<std::size_t> dups(pools.size(), 0);
    parallel_for(pools.size(), workers, [&](std::size_t i) { per_job[i] = build_windows(pools[i], cfg, seed, &dups[i]); });

    WindowBuildReport report;
    for (std::size_t i = 0; i < pools.size(); ++i) {
        const Partition part = partition_pool(pools[i], cfg);
        if (part.skip) {
            report.skipped.emplace_back(pools[i].job_id, *part.skip);
            continue;
        }
        ++report.jobs_kept;
        report.duplicates_discarded += dups[i];
        for (auto& w : per_job[i]) report.windows.push_back(std::move(w));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Requests for a window

/// Ranking request for `window` in presentation order.
inline RankRequest make_window_request(const Window& window, const Corpus& corpus, std::string request_id,
                                       const SamplingParams& sampling, bool with_hint = false) {
    RankRequest request;
    request.request_id = std::move(request_id);
    request.job = corpus.at(window.job_id);
    for (const auto& id : window.presented_ids()) request.candidates.push_back(corpus.at(id));
    request.instructions = default_instructions();
    if (with_hint) request.hint = window.hint;
    request.sampling = sampling;
    return request;
}

// ---------------------------------------------------------------------------
// Difficulty annotation

struct AnnotationReport {
    std::vector<Window> windows;
    std::vector<std::string> failed;  // r_bar left unset
};

/// Sets r_bar to the fraction of `annotate_trials` independent ranker calls that
/// put the gold candidate first. A window with any degraded trial stays unset.
inline AnnotationReport annotate_difficulty(std::vector<Window> windows, const Corpus& corpus, const Ranker& ranker,
                                            const PipelineConfig& cfg, std::size_t workers = 1) {
    cfg.validate();
    std::vector<char> failed(windows.size(), 0);
    parallel_for(windows.size(), workers, [&](std::size_t i) {
        Window& w = windows[i];
        const int gold_slot = w.gold_slot();
        int hits = 0;
        for (int trial = 0; trial < cfg.annotate_trials; ++trial) {
            const RankRequest request = make_window_request(w, corpus, w.window_id + "/annotate/" + std::to_string(trial),
                                                            SamplingParams::annotation());
            const RankResponse response = ranker.rank(request);
            if (response.degraded) {
                failed[i] = 1;
                break;
            }
            if (!response.ordering.empty() && response.ordering.front() == gold_slot) ++hits;
        }
        if (failed[i]) {
            w.r_bar.reset();
        } else {
            w.r_bar = static_cast<double>(hits) / static_cast<double>(cfg.annotate_trials);
        }
    });
    AnnotationReport report;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (failed[i]) report.failed.push_back(windows[i].window_id);
    }
    report.windows = std::move(windows);
    return report;
}

// ---------------------------------------------------------------------------
// Data strategies

enum class Strategy { All, RemoveHard, SubsampleHard, HintAugment, LlmFilter };

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::All: return "all";
        case Strategy::RemoveHard: return "remove_hard";
        case Strategy::SubsampleHard: return "subsample_hard";
        case Strategy::HintAugment: return "hint_augment";
        case Strategy::LlmFilter: return "llm_filter";
    }
    return "all";
}

inline std::optional<Strategy> parse_strategy(std::string_view text) {
    for (auto s : {Strategy::All, Strategy::RemoveHard, Strategy::SubsampleHard, Strategy::HintAugment,
                   Strategy::LlmFilter}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

inline bool is_hard(const Window& w, const PipelineConfig& cfg) {
    if (!w.r_bar) throw Error(ErrorCode::MissingDifficulty, "window " + w.window_id + " has no difficulty annotation");
    // r_bar is a multiple of 1/trials; the slack absorbs representation error.
    return *w.r_bar < cfg.hard_threshold - 1e-9;
}

inline std::string gold_hint(const Window& w) {
    return "The accepted candidate is [" + std::to_string(w.gold_slot()) + "]";
}

struct StrategyContext {
    const Judge* judge = nullptr;
    const Corpus* corpus = nullptr;
    std::size_t workers = 1;
};

inline std::vector<Window> apply_strategy(const std::vector<Window>& windows, Strategy strategy,
                                          const PipelineConfig& cfg, std::uint64_t seed,
                                          const StrategyContext& ctx = {}) {
    switch (strategy) {
        case Strategy::All:
            return windows;

        case Strategy::RemoveHard: {
            std::vector<Window> out;
            for (const auto& w : windows) {
                if (!is_hard(w, cfg)) out.push_back(w);
            }
            return out;
        }

        case Strategy::SubsampleHard: {
            std::vector<std::size_t> hard;
            for (std::size_t i = 0; i < windows.size(); ++i) {
                if (is_hard(windows[i], cfg)) hard.push_back(i);
            }
            const auto keep = static_cast<std::size_t>(std::lround(cfg.subsample_ratio * static_cast<double>(hard.size())));
            Rng rng(child_seed(seed, "subsample_hard"));
            std::set<std::size_t> kept;
            for (std::size_t pick : rng.sample_without_replacement(hard.size(), keep)) kept.insert(hard[pick]);
            std::vector<Window> out;
            for (std::size_t i = 0; i < windows.size(); ++i) {
                if (!is_hard(windows[i], cfg) || kept.count(i) != 0) out.push_back(windows[i]);
            }
            return out;
        }

        case Strategy::HintAugment: {
            std::vector<Window> out = windows;
            for (auto& w : out) {
                if (is_hard(w, cfg)) w.hint = gold_hint(w);
            }
            return out;
        }

        case Strategy::LlmFilter: {
            if (ctx.judge == nullptr || ctx.corpus == nullptr) {
                throw Error(ErrorCode::ConfigError, "llm_filter needs a judge and the corpus");
            }
            std::vector<char> approved(windows.size(), 0);
            parallel_for(windows.size(), ctx.workers, [&](std::size_t i) {
                const auto& w = windows[i];
                const RankRequest request = make_window_request(w, *ctx.corpus, w.window_id + "/judge", SamplingParams{});
                approved[i] = ctx.judge->approve(request, w.gold_slot()) ? 1 : 0;
            });
            std::vector<Window> out;
            for (std::size_t i = 0; i < windows.size(); ++i) {
                if (approved[i]) out.push_back(windows[i]);
            }
            return out;
        }
    }
    return windows;
}

// ---------------------------------------------------------------------------
// SFT distillation

struct SftRecord {
    std::string window_id;
    std::string system;
    std::string prompt;
    std::string completion;
};

struct DistillReport {
    std::vector<SftRecord> records;
    std::size_t dropped_misranked = 0;
    std::size_t dropped_malformed = 0;
};

/// Keeps the teacher's verbatim output for windows whose parsed answer puts the
/// gold candidate first.
inline DistillReport distill_sft(const std::vector<Window>& windows, const Corpus& corpus, const Ranker& teacher,
                                 std::size_t workers = 1) {
    enum class Outcome { Kept, Misranked, Malformed };
    std::vector<Outcome> outcomes(windows.size(), Outcome::Malformed);
    std::vector<SftRecord> records(windows.size());
    parallel_for(windows.size(), workers, [&](std::size_t i) {
        const auto& w = windows[i];
        const RankRequest request = make_window_request(w, corpus, w.window_id + "/distill", SamplingParams{});
        const RankResponse response = teacher.rank(request);
        if (response.degraded) return;
        ParsedAnswer parsed;
        try {
            parsed = parse_answer(response.raw_text, w.size());
        } catch (const Error&) {
            return;
        }
        if (parsed.ordering.front() != w.gold_slot()) {
            outcomes[i] = Outcome::Misranked;
            return;
        }
        const Prompt prompt = build_prompt(request);
        records[i] = {w.window_id, prompt.system, prompt.user, response.raw_text};
        outcomes[i] = Outcome::Kept;
    });
    DistillReport report;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        switch (outcomes[i]) {
            case Outcome::Kept: report.records.push_back(std::move(records[i])); break;
            case Outcome::Misranked: ++report.dropped_misranked; break;
            case Outcome::Malformed: ++report.dropped_malformed; break;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Persistence

inline ordered_json window_to_json(const Window& w) {
    ordered_json j;
    j["window_id"] = w.window_id;
    j["job_id"] = w.job_id;
    j["candidates"] = w.candidate_ids;
    j["gold"] = w.gold_id;
    j["presented_order"] = w.presented_order;
    j["r_bar"] = w.r_bar ? ordered_json(*w.r_bar) : ordered_json(nullptr);
    j["hint"] = w.hint ? ordered_json(*w.hint) : ordered_json(nullptr);
    return j;
}

inline void write_windows(std::ostream& out, const std::vector<Window>& windows) {
    for (const auto& w : windows) write_jsonl_line(out, window_to_json(w));
}

inline void write_windows(const std::string& path, const std::vector<Window>& windows) {
    auto out = open_output(path);
    write_windows(out, windows);
}

inline std::vector<Window> read_windows(std::istream& in) {
    std::vector<Window> windows;
    read_jsonl(in, [&](std::size_t line_no, const json& record) {
        Window w;
        w.window_id = confit::detail::require_string(record, "window_id", line_no);
        w.job_id = confit::detail::require_string(record, "job_id", line_no);
        w.candidate_ids = confit::detail::require_string_list(record, "candidates", line_no);
        w.gold_id = confit::detail::require_string(record, "gold", line_no);
        const json& order = confit::detail::require(record, "presented_order", line_no);
        if (!order.is_array()) throw MalformedRecord(line_no, "\"presented_order\" must be an array");
        for (const auto& v : order) {
            if (!v.is_number_integer()) throw MalformedRecord(line_no, "\"presented_order\" must hold integers");
            w.presented_order.push_back(v.get<int>());
        }
        if (auto it = record.find("r_bar"); it != record.end() && !it->is_null()) {
            if (!it->is_number()) throw MalformedRecord(line_no, "\"r_bar\" must be a number or null");
            w.r_bar = it->get<double>();
        }
        if (auto it = record.find("hint"); it != record.end() && !it->is_null()) {
            if (!it->is_string()) throw MalformedRecord(line_no, "\"hint\" must be a string or null");
            w.hint = it->get<std::string>();
        }
        try {
            w.validate();
        } catch (const Error& e) {
            throw MalformedRecord(line_no, e.what());
        }
        windows.push_back(std::move(w));
    });
    return windows;
}

inline std::vector<Window> load_windows(const std::string& path) {
    auto in = open_input(path);
    return read_windows(in);
}

inline void write_sft(std::ostream& out, const std::vector<SftRecord>& records) {
    for (const auto& r : records) {
        ordered_json j;
        j["window_id"] = r.window_id;
        j["system"] = r.system;
        j["prompt"] = r.prompt;
        j["completion"] = r.completion;
        write_jsonl_line(out, j);
    }
}

}  // namespace confit
