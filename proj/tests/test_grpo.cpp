// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "confit/grpo.hpp"

namespace confit::grpo {
namespace {

SimWindow random_window(Rng& rng, std::size_t d = 4, std::size_t k = 4) {
    SimWindow w;
    w.id = "w" + std::to_string(rng.uniform_index(1000000));
    w.gold = static_cast<int>(rng.uniform_index(k));
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> x(d);
        for (auto& v : x) v = rng.normal();
        w.features.push_back(std::move(x));
    }
    return w;
}

PLPolicy random_policy(Rng& rng, double scale = 1.0, std::size_t d = 4) {
    PLPolicy p;
    for (std::size_t f = 0; f < d; ++f) {
        p.theta.push_back(scale * rng.normal());
        p.feature_names.push_back("f" + std::to_string(f));
    }
    return p;
}

PLPolicy zero_policy(std::size_t d = 4) {
    PLPolicy p;
    p.theta.assign(d, 0.0);
    for (std::size_t f = 0; f < d; ++f) p.feature_names.push_back("f" + std::to_string(f));
    return p;
}

TEST(PlackettLuce, UniformAndPeakedValues) {
    Rng rng(1);
    const SimWindow w = random_window(rng);
    EXPECT_NEAR(pl_log_prob(zero_policy(), w, {2, 0, 3, 1}), std::log(1.0 / 24.0), 1e-12);
    EXPECT_NEAR(pl_log_prob(zero_policy(), w, {2, 0, 3, 1}), -3.17805383034795, 1e-12);
    const auto lp = step_log_probs({10.0, 0.0, 0.0, 0.0}, {0, 1, 2, 3});
    EXPECT_NEAR(lp[0], -1.36190514938254e-4, 1e-15);
}

TEST(PlackettLuce, Normalizes) {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng.uniform_index(4);
        const SimWindow w = random_window(rng, 4, k);
        const PLPolicy p = random_policy(rng, 3.0);
        double total = 0.0;
        for (const auto& o : all_orderings(k)) total += std::exp(pl_log_prob(p, w, o));
        ASSERT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(PlackettLuce, InvalidOrdering) {
    Rng rng(3);
    const SimWindow w = random_window(rng);
    for (const std::vector<int>& bad : {std::vector<int>{0, 1, 2}, std::vector<int>{0, 0, 1, 2},
                                        std::vector<int>{0, 1, 2, 4}}) {
        try {
            pl_log_prob(zero_policy(), w, bad);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidOrdering);
        }
    }
}

TEST(PlackettLuce, SamplingMatchesLikelihood) {
    const std::vector<double> scores = {1.0, 0.0, -0.5, 0.3};
    Rng rng(4);
    std::map<std::vector<int>, int> counts;
    const int n = 48000;
    for (int i = 0; i < n; ++i) ++counts[sample_ordering(scores, rng)];
    for (const auto& o : all_orderings(4)) {
        const auto lp = step_log_probs(scores, o);
        const double p = std::exp(std::accumulate(lp.begin(), lp.end(), 0.0));
        EXPECT_NEAR(counts[o] / static_cast<double>(n), p, 5.0 * std::sqrt(p * (1 - p) / n) + 1e-4);
    }
}

TEST(Group, UniformPolicyAdvantagesCentered) {
    Rng rng(5);
    const SimWindow w = random_window(rng);
    GrpoConfig cfg = GrpoConfig::simulator_defaults();
    Rng sampler(6);
    const auto g = sample_group(zero_policy(), w, cfg, sampler);
    ASSERT_EQ(g.size(), 32u);
    EXPECT_NEAR(std::accumulate(g.advantages.begin(), g.advantages.end(), 0.0), 0.0, 1e-9);
}

TEST(Group, OraclePolicyHasNoSignal) {
    // One feature marks the gold candidate; a huge weight makes the policy deterministic at the top.
    SimWindow w;
    w.id = "oracle";
    w.gold = 2;
    for (int j = 0; j < 4; ++j) w.features.push_back({j == 2 ? 1.0 : 0.0});
    PLPolicy p{{200.0}, {"gold"}};
    GrpoConfig cfg = GrpoConfig::simulator_defaults();
    cfg.reward = RewardMode::RankR1;
    Rng rng(7);
    const auto g = sample_group(p, w, cfg, rng);
    for (double r : g.rewards) EXPECT_EQ(r, 1.0);
    for (double a : g.advantages) EXPECT_EQ(a, 0.0);
}

TEST(Group, DeterministicForSeed) {
    Rng rng(8);
    const SimWindow w = random_window(rng);
    const PLPolicy p = random_policy(rng);
    const auto cfg = GrpoConfig::simulator_defaults();
    Rng a(99), b(99);
    const auto ga = sample_group(p, w, cfg, a);
    const auto gb = sample_group(p, w, cfg, b);
    EXPECT_EQ(ga.orderings, gb.orderings);
    EXPECT_EQ(ga.rewards, gb.rewards);
}

TEST(Step, NoKlMovesTowardGoldFeature) {
    SimWindow w;
    w.id = "one";
    w.gold = 1;
    for (int j = 0; j < 4; ++j) w.features.push_back({j == 1 ? 1.0 : 0.0, 0.0});
    const PLPolicy start{{0.0, 0.0}, {"gold", "other"}};
    GrpoConfig cfg = GrpoConfig::simulator_defaults();
    cfg.beta = 0.0;
    for (auto mode : {RewardMode::ReaRank, RewardMode::RankR1}) {
        cfg.reward = mode;
        const auto [next, stats] = grpo_step(start, start, std::span<const SimWindow>(&w, 1), cfg, 0);
        EXPECT_GT(next.theta[0], 0.0);
        EXPECT_EQ(next.theta[1], 0.0);
        EXPECT_GT(stats.grad_norm, 0.0);
        EXPECT_EQ(stats.kl, 0.0);
    }
}

TEST(Step, ZeroAdvantageLeavesOnlyKlPull) {
    Rng rng(10);
    const SimWindow w = random_window(rng);
    const PLPolicy ref = random_policy(rng);
    PLPolicy moved = ref;
    moved.theta[0] += 0.7;
    GrpoConfig cfg = GrpoConfig::simulator_defaults();
    cfg.beta = 0.5;
    metrics::RewardGroup g;
    g.window_id = w.id;
    Rng sampler(11);
    for (int i = 0; i < 8; ++i) {
        g.orderings.push_back(sample_ordering(moved.scores(w), sampler));
        g.rewards.push_back(0.25);
    }
    g.advantages = metrics::group_advantages(g.rewards);

    // At the reference, the KL term is stationary.
    for (double v : surrogate_gradient(ref, ref, w, g, cfg)) EXPECT_NEAR(v, 0.0, 1e-14);

    // Away from it, a small step along the gradient lowers the KL.
    const auto grad = surrogate_gradient(moved, ref, w, g, cfg);
    PLPolicy stepped = moved;
    for (std::size_t f = 0; f < grad.size(); ++f) stepped.theta[f] += 1e-3 * grad[f];
    EXPECT_LT(group_step_kl(stepped, ref, w, g, cfg), group_step_kl(moved, ref, w, g, cfg));
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

TEST(Gradient, MatchesFiniteDifferences) {
    Rng rng(12);
    const double h = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const SimWindow w = random_window(rng);
        const PLPolicy ref = random_policy(rng);
        PLPolicy p = ref;
        for (auto& t : p.theta) t += 0.5 * rng.normal();
        GrpoConfig cfg = GrpoConfig::simulator_defaults();
        cfg.group_size = 8;
        cfg.beta = 0.1;
        cfg.reward = trial % 2 ? RewardMode::RankR1 : RewardMode::ReaRank;
        Rng sampler(static_cast<std::uint64_t>(1000 + trial));
        const auto g = sample_group(p, w, cfg, sampler);
        const auto analytic = surrogate_gradient(p, ref, w, g, cfg);
        for (std::size_t f = 0; f < p.theta.size(); ++f) {
            PLPolicy up = p, down = p;
            up.theta[f] += h;
            down.theta[f] -= h;
            const double numeric = (surrogate_value(up, p, ref, w, g, cfg) - surrogate_value(down, p, ref, w, g, cfg)) / (2 * h);
            if (std::abs(analytic[f]) < 1e-7 && std::abs(numeric) < 1e-7) continue;
            worst = std::max(worst, relative_error(analytic[f], numeric));
        }
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Kl, NonNegativeAndZeroAtReference) {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const SimWindow w = random_window(rng);
        const PLPolicy a = random_policy(rng), b = random_policy(rng);
        EXPECT_GE(exact_sequence_kl(a, b, w), -1e-12);
        EXPECT_NEAR(exact_sequence_kl(a, a, w), 0.0, 1e-12);
        const auto s = step_kl(a.scores(w), b.scores(w), {0, 1, 2, 3});
        EXPECT_GE(s.value, -1e-12);
    }
}

TEST(Kl, SampledEstimatorIsUnbiased) {
    Rng rng(14);
    const SimWindow w = random_window(rng);
    const PLPolicy a = random_policy(rng), b = random_policy(rng);
    GrpoConfig cfg = GrpoConfig::simulator_defaults();
    cfg.group_size = 20000;
    Rng sampler(15);
    const auto g = sample_group(a, w, cfg, sampler);
    EXPECT_NEAR(sampled_kl(a, b, w, g), exact_sequence_kl(a, b, w), 0.05);
}

TEST(Kl, StrongerBetaStaysCloser) {
    const auto task = make_synthetic_task(64, true, 3);
    const PLPolicy init = zero_policy();
    double previous = -1.0;
    for (double beta : {0.0, 1.0, 1e3}) {
        GrpoConfig cfg = GrpoConfig::simulator_defaults();
        cfg.learning_rate = 1e-3;
        cfg.beta = beta;
        cfg.epochs = 1;
        PLPolicy init_named = init;
        init_named.feature_names = task.feature_names;
        const auto result = train(init_named, task.windows, cfg);
        double dist = 0.0;
        for (double t : result.policy.theta) dist += t * t;
        dist = std::sqrt(dist);
        if (previous >= 0.0) EXPECT_LT(dist, previous) << beta;
        previous = dist;
    }
}

TEST(Training, InformativeTaskImproves) {
    const auto task = make_synthetic_task(500, true, 0);
    PLPolicy init{std::vector<double>(4, 0.0), task.feature_names};
    const auto cfg = GrpoConfig::simulator_defaults();
    const auto result = train(init, task.windows, cfg);
    EXPECT_EQ(result.curve.size(), 64u);
    EXPECT_GE(result.final_expected_reward - result.initial_expected_reward, 0.2);
    EXPECT_GT(result.curve.back().eval_ndcg4, result.curve.front().eval_ndcg4);
    EXPECT_NEAR(result.curve.back().mean_reward, result.final_expected_reward, 1e-12);
    EXPECT_LT(std::abs(result.policy.theta[3]), std::abs(result.policy.theta[0]));
}

TEST(Training, RankR1AlsoImproves) {
    const auto task = make_synthetic_task(500, true, 0);
    PLPolicy init{std::vector<double>(4, 0.0), task.feature_names};
    auto cfg = GrpoConfig::simulator_defaults();
    cfg.reward = RewardMode::RankR1;
    const auto result = train(init, task.windows, cfg);
    EXPECT_GT(result.final_expected_reward, result.initial_expected_reward + 0.05);
}

TEST(Training, NoiseTaskStaysFlat) {
    const auto task = make_synthetic_task(500, false, 0);
    PLPolicy init{std::vector<double>(4, 0.0), task.feature_names};
    const auto result = train(init, task.windows, GrpoConfig::simulator_defaults());
    EXPECT_LT(std::abs(result.final_expected_reward - result.initial_expected_reward), 0.05);
}

TEST(Training, CurveTrendsUp) {
    // Spearman correlation between step and mean reward.
    const auto task = make_synthetic_task(500, true, 0);
    PLPolicy init{std::vector<double>(4, 0.0), task.feature_names};
    const auto result = train(init, task.windows, GrpoConfig::simulator_defaults());
    const std::size_t n = result.curve.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return result.curve[a].mean_reward < result.curve[b].mean_reward; });
    std::vector<double> rank(n);
    for (std::size_t r = 0; r < n; ++r) rank[idx[r]] = static_cast<double>(r);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) d2 += (rank[i] - static_cast<double>(i)) * (rank[i] - static_cast<double>(i));
    const double nn = static_cast<double>(n);
    const double rho = 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
    EXPECT_GT(rho, 0.8);
}

TEST(Training, Deterministic) {
    const auto task = make_synthetic_task(64, true, 4);
    PLPolicy init{std::vector<double>(4, 0.0), task.feature_names};
    auto cfg = GrpoConfig::simulator_defaults();
    cfg.seed = 21;
    EXPECT_EQ(train(init, task.windows, cfg).policy.theta, train(init, task.windows, cfg).policy.theta);
}

TEST(Evaluation, UniformPolicyExpectedNdcg) {
    Rng rng(17);
    EXPECT_NEAR(expected_ndcg(zero_policy(), random_window(rng)), 0.640401577911213, 1e-12);
}

TEST(Policy, JsonRoundTrip) {
    const PLPolicy p{{0.5, -1.25, 3.0}, {"a", "b", "c"}};
    const PLPolicy q = policy_from_json(json::parse(policy_to_json(p).dump()));
    EXPECT_EQ(q.theta, p.theta);
    EXPECT_EQ(q.feature_names, p.feature_names);
    EXPECT_THROW(policy_from_json(json::parse(R"({"theta":[1],"feature_names":[]})")), Error);
}

TEST(Policy, NonFiniteScoresAreReported) {
    Rng rng(16);
    const SimWindow w = random_window(rng);
    PLPolicy p = zero_policy();
    p.theta[0] = std::numeric_limits<double>::infinity();
    try {
        p.scores(w);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NumericalError);
    }
}

TEST(Config, RejectsBadValues) {
    EXPECT_THROW(GrpoConfig::from_json(json::parse(R"({"reward":"bleu"})")), Error);
    EXPECT_THROW(GrpoConfig::from_json(json::parse(R"({"learning_rate":0})")), Error);
    EXPECT_THROW(GrpoConfig::from_json(json::parse(R"({"beta":-1})")), Error);
    EXPECT_EQ(GrpoConfig::from_json(json::object()).learning_rate, GrpoConfig::kSimulatorLearningRate);
}

}  // namespace
}  // namespace confit::grpo
