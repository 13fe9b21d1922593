// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <set>

#include "confit/engine.hpp"
#include "confit/synthetic.hpp"
#include "test_support.hpp"

namespace confit {
namespace {

using testing::make_fixture;

TEST(Schedule, TableCounts) {
    const std::vector<std::tuple<int, int, int>> rows = {{2, 1, 19}, {3, 1, 18}, {3, 2, 10},
                                                         {4, 1, 17}, {4, 2, 9},  {4, 3, 7}};
    for (auto [k, s, comps] : rows) {
        EXPECT_EQ(comparisons_per_iteration(20, k, s), comps) << k << "," << s;
        EXPECT_EQ(static_cast<int>(window_starts(20, k, s).size()), comps) << k << "," << s;
    }
    EXPECT_EQ(window_starts(20, 4, 2), (std::vector<int>{17, 15, 13, 11, 9, 7, 5, 3, 1}));
    EXPECT_EQ(window_starts(20, 4, 3), (std::vector<int>{17, 14, 11, 8, 5, 2, 1}));
    EXPECT_EQ(window_starts(20, 3, 2), (std::vector<int>{18, 16, 14, 12, 10, 8, 6, 4, 2, 1}));
}

TEST(Schedule, ClosedFormMatchesLoop) {
    for (int n = 2; n <= 40; ++n) {
        for (int k = 2; k <= n; ++k) {
            for (int s = 1; s < k; ++s) {
                const auto starts = window_starts(n, k, s);
                ASSERT_EQ(static_cast<int>(starts.size()), 1 + (n - k + s - 1) / s);
                ASSERT_EQ(starts.front(), n - k + 1);
                ASSERT_EQ(starts.back(), 1);
            }
        }
    }
}

TEST(Config, Invariants) {
    EXPECT_NO_THROW((EngineConfig{4, 2, 2, 20}.validate()));
    for (auto c : {EngineConfig{4, 4, 1, 20}, EngineConfig{4, 0, 1, 20}, EngineConfig{21, 2, 1, 20},
                   EngineConfig{4, 2, 0, 20}, EngineConfig{1, 0, 1, 20}}) {
        try {
            c.validate();
            FAIL() << c.label();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
        }
    }
    const auto parsed = EngineConfig::from_json(json::parse(R"({"k":3,"s":1})"));
    EXPECT_EQ(parsed.k, 3);
    EXPECT_EQ(parsed.t, 2);
}

TEST(Rerank, IdentityKeepsOrder) {
    const auto f = make_fixture(20, {4, 17});
    const IdentityRanker identity;
    for (auto cfg : standard_ks_grid(3)) {
        const auto trace = rerank_pool(f.pool, f.corpus, identity, cfg);
        EXPECT_EQ(trace.final_ordering, f.pool.candidates);
        EXPECT_EQ(static_cast<int>(trace.windows.size()), 3 * comparisons_per_iteration(20, cfg.k, cfg.s));
    }
}

TEST(Rerank, OracleLastToFirst) {
    const auto f = make_fixture(20, {19});
    const OracleRanker oracle{LabelIndex(f.labels)};
    const auto trace = rerank_pool(f.pool, f.corpus, oracle, EngineConfig{4, 2, 1, 20});
    EXPECT_EQ(trace.final_ordering.front(), f.pool.candidates[19]);
    EXPECT_EQ(trace.windows_per_pass, 9);
    EXPECT_EQ(trace.windows.front().start, 17);
    EXPECT_EQ(trace.windows.back().start, 1);
}

TEST(Rerank, BubbleUpExhaustive) {
    for (int k = 2; k <= 4; ++k) {
        for (int s = 1; s < k; ++s) {
            for (std::size_t pos = 0; pos < 20; ++pos) {
                const auto f = make_fixture(20, {pos});
                const OracleRanker oracle{LabelIndex(f.labels)};
                const auto trace = rerank_pool(f.pool, f.corpus, oracle, EngineConfig{k, s, 1, 20});
                ASSERT_EQ(trace.final_ordering.front(), f.pool.candidates[pos]) << k << s << pos;
            }
        }
    }
}

TEST(Rerank, OracleSinglePositiveConvergesInOnePass) {
    for (std::size_t pos = 0; pos < 20; ++pos) {
        const auto f = make_fixture(20, {pos});
        const OracleRanker oracle{LabelIndex(f.labels)};
        const auto one = rerank_pool(f.pool, f.corpus, oracle, EngineConfig{4, 2, 1, 20});
        const auto two = rerank_pool(f.pool, f.corpus, oracle, EngineConfig{4, 2, 2, 20});
        EXPECT_EQ(two.final_ordering, one.final_ordering) << pos;
    }
}

TEST(Rerank, FixedPointIsStable) {
    // Several positives may need more than one pass; once a pass changes nothing, the next does not either.
    const auto f = make_fixture(20, {3, 8, 15});
    const OracleRanker oracle{LabelIndex(f.labels)};
    RankedPool pool = f.pool;
    int passes = 0;
    for (;; ++passes) {
        ASSERT_LT(passes, 20);
        const auto next = rerank_pool(pool, f.corpus, oracle, EngineConfig{4, 2, 1, 20}).final_ordering;
        if (next == pool.candidates) break;
        pool.candidates = next;
    }
    EXPECT_GT(passes, 1);
    EXPECT_EQ(rerank_pool(pool, f.corpus, oracle, EngineConfig{4, 2, 1, 20}).final_ordering, pool.candidates);
    const std::vector<std::string> top(pool.candidates.begin(), pool.candidates.begin() + 3);
    EXPECT_EQ(std::set<std::string>(top.begin(), top.end()),
              (std::set<std::string>{"job-c3", "job-c8", "job-c15"}));
}

TEST(Rerank, AdversarialRankerPreservesPermutation) {
    const auto f = make_fixture(20, {0, 10});
    std::atomic<int> counter{0};
    const CallbackRanker chaos([&](const RankRequest& req) {
        RankResponse r;
        Rng rng(static_cast<std::uint64_t>(++counter));
        switch (rng.uniform_index(5)) {
            case 0: r.ordering = {}; break;
            case 1: r.ordering = std::vector<int>(req.k(), 1); break;
            case 2: r.ordering = {0, -3, 99}; break;
            case 3:
                r.ordering = identity_ordering(req.k());
                rng.shuffle(r.ordering);
                break;
            default: r.ordering = identity_ordering(req.k() + 1); break;
        }
        return r;
    });
    for (auto cfg : standard_ks_grid(2)) {
        const auto trace = rerank_pool(f.pool, f.corpus, chaos, cfg);
        ASSERT_TRUE(is_permutation_of(trace.final_ordering, f.pool.candidates));
        for (const auto& w : trace.windows) ASSERT_TRUE(is_permutation_of(w.after, w.before));
    }
}

TEST(Rerank, DegradedIsFlagged) {
    const auto f = make_fixture(20, {5});
    const CallbackRanker broken([](const RankRequest&) { return RankResponse{}; });
    const auto trace = rerank_pool(f.pool, f.corpus, broken, EngineConfig{});
    EXPECT_EQ(trace.final_ordering, f.pool.candidates);
    EXPECT_EQ(trace.degraded_calls(), trace.windows.size());
}

TEST(Rerank, ConfigErrorPropagates) {
    const auto f = make_fixture(20, {5});
    const CallbackRanker fatal([](const RankRequest&) -> RankResponse {
        throw Error(ErrorCode::ConfigError, "bad key");
    });
    EXPECT_THROW(rerank_pool(f.pool, f.corpus, fatal, EngineConfig{}), Error);
}

TEST(Rerank, WrongPoolSize) {
    const auto f = make_fixture(12, {5});
    EXPECT_THROW(rerank_pool(f.pool, f.corpus, IdentityRanker{}, EngineConfig{}), Error);
}

TEST(Rerank, WindowsSeeFreshSlots) {
    const auto f = make_fixture(20, {});
    const CallbackRanker check([](const RankRequest& req) {
        RankResponse r;
        r.ordering = identity_ordering(req.k());
        r.ordering = {r.ordering.rbegin(), r.ordering.rend()};
        return r;
    });
    const auto trace = rerank_pool(f.pool, f.corpus, check, EngineConfig{4, 2, 1, 20});
    const auto& first = trace.windows.front();
    EXPECT_EQ(first.after, (std::vector<std::string>{first.before.rbegin(), first.before.rend()}));
}

synthetic::Dataset synthetic_pools(std::size_t jobs, std::uint64_t seed) {
    synthetic::GeneratorConfig gen;
    gen.jobs = jobs;
    gen.resumes = 600;
    gen.short_pool_rate = 0.0;
    gen.no_positive_rate = 0.0;
    gen.many_positive_rate = 0.0;
    return synthetic::generate(gen, seed);
}

TEST(Evaluate, OracleIsPerfectIdentityIsBaseline) {
    auto data = synthetic_pools(40, 1);
    const OracleRanker oracle{LabelIndex(data.labels)};
    const auto report = evaluate_run(data.pools, data.corpus, oracle, EngineConfig{}, 2);
    EXPECT_DOUBLE_EQ(report.macro.ndcg10_after, 1.0);
    EXPECT_DOUBLE_EQ(report.macro.recall10_after, 1.0);

    const auto base = evaluate_run(data.pools, data.corpus, IdentityRanker{}, EngineConfig{}, 2);
    double ndcg = 0.0, recall = 0.0;
    for (const auto& pool : data.pools) {
        const auto rels = pool.relevance(pool.candidates);
        ndcg += metrics::ndcg(rels, 10);
        recall += metrics::recall_at_k(rels, 10);
    }
    EXPECT_NEAR(base.macro.ndcg10_after, ndcg / 40.0, 1e-12);
    EXPECT_NEAR(base.macro.recall10_after, recall / 40.0, 1e-12);
    EXPECT_DOUBLE_EQ(base.macro.ndcg10_after, base.macro.ndcg10_before);
}

TEST(Evaluate, ExcludesPoolsWithoutPositives) {
    auto a = make_fixture(20, {3}, "a");
    auto b = make_fixture(20, {}, "b");
    Corpus corpus = a.corpus;
    for (const auto& d : b.corpus) corpus.add(d);
    const auto report = evaluate_run({a.pool, b.pool}, corpus, IdentityRanker{}, EngineConfig{});
    EXPECT_EQ(report.per_job.size(), 1u);
    EXPECT_EQ(report.excluded, (std::vector<std::string>{"b"}));
}

TEST(Evaluate, NoisierRankerIsWorse) {
    auto data = synthetic_pools(200, 2);
    const LabelIndex labels(data.labels);
    const NoisyRanker clean(labels, 0.0, 5), noisy(labels, 0.5, 5);
    const auto a = evaluate_run(data.pools, data.corpus, clean, EngineConfig{}, 2);
    const auto b = evaluate_run(data.pools, data.corpus, noisy, EngineConfig{}, 2);
    EXPECT_LT(b.macro.average_after(), a.macro.average_after());
}

TEST(Evaluate, SecondPassHelpsNoisyRanker) {
    auto data = synthetic_pools(300, 3);
    const NoisyRanker noisy(LabelIndex(data.labels), 0.3, 11);
    const auto one = evaluate_run(data.pools, data.corpus, noisy, EngineConfig{4, 2, 1, 20}, 2);
    const auto two = evaluate_run(data.pools, data.corpus, noisy, EngineConfig{4, 2, 2, 20}, 2);
    ASSERT_EQ(one.per_job.size(), two.per_job.size());
    const double n = static_cast<double>(one.per_job.size());
    double mean = 0.0;
    std::vector<double> d;
    for (std::size_t i = 0; i < one.per_job.size(); ++i) d.push_back(two.per_job[i].ndcg10_after - one.per_job[i].ndcg10_after);
    for (double x : d) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    var /= n - 1.0;
    const double t = mean / std::sqrt(var / n);
    const double p = boost::math::cdf(boost::math::complement(boost::math::students_t(n - 1.0), t));
    EXPECT_GT(mean, 0.0);
    EXPECT_LT(p, 0.05) << "t=" << t;
}

TEST(Evaluate, ParallelMatchesSerial) {
    auto data = synthetic_pools(30, 4);
    const NoisyRanker noisy(LabelIndex(data.labels), 0.3, 11);
    const auto a = evaluate_run(data.pools, data.corpus, noisy, EngineConfig{}, 1, true);
    const auto b = evaluate_run(data.pools, data.corpus, noisy, EngineConfig{}, 4, true);
    EXPECT_EQ(report_to_json(a, EngineConfig{}).dump(), report_to_json(b, EngineConfig{}).dump());
    for (std::size_t i = 0; i < a.traces.size(); ++i) EXPECT_EQ(a.traces[i].final_ordering, b.traces[i].final_ordering);
}

TEST(Ablate, RowsAndRejectedPoints) {
    auto data = synthetic_pools(10, 5);
    const OracleRanker oracle{LabelIndex(data.labels)};
    auto grid = standard_ks_grid(1);
    grid.push_back(EngineConfig{4, 4, 1, 20});
    const auto rows = ablate(data.pools, data.corpus, oracle, grid, 1);
    const double baseline = evaluate_run(data.pools, data.corpus, IdentityRanker{}, EngineConfig{}).macro.ndcg10_after;
    ASSERT_EQ(rows.size(), 7u);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_FALSE(rows[i].error);
        EXPECT_GT(rows[i].ndcg10, baseline);
        EXPECT_EQ(rows[i].degraded_calls, 0u);
    }
    EXPECT_EQ(rows[0].comparisons_per_iter, 19);
    EXPECT_EQ(rows[1].comparisons_per_iter, 18);
    EXPECT_EQ(rows[5].comparisons_per_iter, 7);
    EXPECT_TRUE(rows[6].error);
}

}  // namespace
}  // namespace confit
