// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Small-parameter stand-in for LLM policy training on ranking windows.
//
// The policy is Plackett-Luce over a window: candidate j gets score
// theta . x_j and an ordering is built by repeated softmax selection among the
// remaining candidates. Each non-forced selection plays the role of one output
// token in the group-relative objective:
//
//   J = 1/|G| sum_i 1/L_i sum_t [ A_i * p_t(theta) / [p_t]_nograd - beta * KL_t ]
//
// with KL_t the exact KL between policy and reference softmaxes at step t.
// ReaRank responses have L = k - 1 selections; Rank-R1 responses are the top
// pick only (L = 1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confit/core.hpp"
#include "confit/error.hpp"
#include "confit/metrics.hpp"
#include "confit/random.hpp"

namespace confit::grpo {

/// A training window with per-slot feature vectors. Slots are in presentation order.
struct SimWindow {
    std::string id;
    std::vector<std::vector<double>> features;  // k rows of d features
    int gold = 0;                               // 0-based presented slot of the accepted candidate

    std::size_t k() const { return features.size(); }
};

struct PLPolicy {
    std::vector<double> theta;
    std::vector<std::string> feature_names;

    std::vector<double> scores(const SimWindow& window) const {
        std::vector<double> out(window.k(), 0.0);
        for (std::size_t j = 0; j < window.k(); ++j) {
            const auto& x = window.features[j];
            if (x.size() != theta.size()) {
                throw Error(ErrorCode::InvalidConfig, "window " + window.id + " feature width " +
                                                          std::to_string(x.size()) + " != policy width " +
                                                          std::to_string(theta.size()));
            }
            out[j] = std::inner_product(x.begin(), x.end(), theta.begin(), 0.0);
            if (!std::isfinite(out[j])) throw Error(ErrorCode::NumericalError, "non-finite score in window " + window.id);
        }
        return out;
    }
};

enum class RewardMode { ReaRank, RankR1 };

inline std::string_view to_string(RewardMode mode) { return mode == RewardMode::RankR1 ? "rankr1" : "rearank"; }

inline std::optional<RewardMode> parse_reward_mode(std::string_view text) {
    if (text == "rearank") return RewardMode::ReaRank;
    if (text == "rankr1") return RewardMode::RankR1;
    return std::nullopt;
}

struct GrpoConfig {
    int group_size = 32;
    double beta = 0.01;
    double learning_rate = 1e-6;  // LLM-scale value; the simulator overrides it
    int epochs = 2;
    int batch_size = 16;
    RewardMode reward = RewardMode::ReaRank;
    std::uint64_t seed = 0;

    /// Learning rate suited to a handful of linear weights.
    static constexpr double kSimulatorLearningRate = 0.5;

    static GrpoConfig simulator_defaults() {
        GrpoConfig cfg;
        cfg.learning_rate = kSimulatorLearningRate;
        return cfg;
    }

    void validate() const {
        if (group_size < 1 || epochs < 1 || batch_size < 1) {
            throw Error(ErrorCode::InvalidConfig, "group_size, epochs and batch_size must be positive");
        }
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidConfig, "beta must be >= 0");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive");
        }
    }

    static GrpoConfig from_json(const json& j) {
        GrpoConfig c = simulator_defaults();
        c.group_size = j.value("group_size", c.group_size);
        c.beta = j.value("beta", c.beta);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        if (j.contains("reward")) {
            auto mode = parse_reward_mode(j.at("reward").get<std::string>());
            if (!mode) throw Error(ErrorCode::InvalidConfig, "reward must be rearank or rankr1");
            c.reward = *mode;
        }
        c.validate();
        return c;
    }

    ordered_json to_json() const {
        return {{"group_size", group_size}, {"beta", beta},           {"learning_rate", learning_rate},
                {"epochs", epochs},         {"batch_size", batch_size}, {"reward", std::string(to_string(reward))}};
    }
};

// ---------------------------------------------------------------------------
// Plackett-Luce likelihood

namespace detail {

inline double log_sum_exp(std::span<const double> values) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : values) hi = std::max(hi, v);
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - hi);
    return hi + std::log(sum);
}

inline void check_ordering(const std::vector<int>& ordering, std::size_t k) {
    if (ordering.size() != k) throw Error(ErrorCode::InvalidOrdering, "ordering length differs from window size");
    std::vector<bool> seen(k, false);
    for (int slot : ordering) {
        if (slot < 0 || static_cast<std::size_t>(slot) >= k || seen[static_cast<std::size_t>(slot)]) {
            throw Error(ErrorCode::InvalidOrdering, "ordering is not a permutation of the window");
        }
        seen[static_cast<std::size_t>(slot)] = true;
    }
}

/// Softmax of `scores` restricted to `remaining`.
inline std::vector<double> softmax_over(const std::vector<double>& scores, const std::vector<int>& remaining) {
    std::vector<double> sub;
    sub.reserve(remaining.size());
    for (int j : remaining) sub.push_back(scores[static_cast<std::size_t>(j)]);
    const double lse = log_sum_exp(sub);
    for (auto& v : sub) v = std::exp(v - lse);
    return sub;
}

}  // namespace detail

/// Log-probability of each selection step of `ordering` (0-based slots).
inline std::vector<double> step_log_probs(const std::vector<double>& scores, const std::vector<int>& ordering) {
    detail::check_ordering(ordering, scores.size());
    std::vector<double> out;
    out.reserve(ordering.size());
    for (std::size_t t = 0; t < ordering.size(); ++t) {
        std::vector<double> sub;
        for (std::size_t r = t; r < ordering.size(); ++r) sub.push_back(scores[static_cast<std::size_t>(ordering[r])]);
        out.push_back(scores[static_cast<std::size_t>(ordering[t])] - detail::log_sum_exp(sub));
    }
    return out;
}

/// Sum of sequential log-softmax selections; <= 0.
inline double pl_log_prob(const PLPolicy& policy, const SimWindow& window, const std::vector<int>& ordering) {
    const auto steps = step_log_probs(policy.scores(window), ordering);
    return std::accumulate(steps.begin(), steps.end(), 0.0);
}

inline std::vector<int> sample_ordering(const std::vector<double>& scores, Rng& rng) {
    std::vector<int> remaining(scores.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<int> ordering;
    ordering.reserve(scores.size());
    while (!remaining.empty()) {
        const auto probs = detail::softmax_over(scores, remaining);
        const double u = rng.uniform01();
        double acc = 0.0;
        std::size_t pick = remaining.size() - 1;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        ordering.push_back(remaining[pick]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return ordering;
}

/// Every permutation of 0..k-1 in lexicographic order.
inline std::vector<std::vector<int>> all_orderings(std::size_t k) {
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<int>> out;
    do {
        out.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

// ---------------------------------------------------------------------------
// Rewards

inline double window_ndcg(const SimWindow& window, const std::vector<int>& ordering) {
    std::vector<int> rels(ordering.size(), 0);
    for (std::size_t i = 0; i < ordering.size(); ++i) rels[i] = ordering[i] == window.gold ? 1 : 0;
    return metrics::ndcg(rels, ordering.size());
}

/// ReaRank: relative nDCG improvement over the presented order (nDCG_max = 1 with
/// a single positive). Rank-R1: 1 when the top pick is the gold candidate.
inline double reward(const SimWindow& window, const std::vector<int>& ordering, RewardMode mode) {
    if (mode == RewardMode::RankR1) return ordering.front() == window.gold ? 1.0 : 0.0;
    std::vector<int> presented(window.k());
    std::iota(presented.begin(), presented.end(), 0);
    return metrics::rearank_reward(window_ndcg(window, presented), window_ndcg(window, ordering), 1.0);
}

/// Number of selection steps that make up one response.
inline std::size_t response_length(std::size_t k, RewardMode mode) {
    if (mode == RewardMode::RankR1) return 1;
    return k > 1 ? k - 1 : 1;
}

inline metrics::RewardGroup sample_group(const PLPolicy& policy, const SimWindow& window, const GrpoConfig& cfg,
                                         Rng& rng) {
    const auto scores = policy.scores(window);
    metrics::RewardGroup group;
    group.window_id = window.id;
    for (int i = 0; i < cfg.group_size; ++i) {
        group.orderings.push_back(sample_ordering(scores, rng));
        group.rewards.push_back(reward(window, group.orderings.back(), cfg.reward));
    }
    group.advantages = metrics::group_advantages(group.rewards);
    return group;
}

// ---------------------------------------------------------------------------
// KL terms

/// Exact KL(softmax(policy) || softmax(reference)) over `remaining`, and its
/// derivative with respect to each remaining policy score.
struct StepKl {
    double value = 0.0;
    std::vector<double> d_scores;  // aligned with `remaining`
};

inline StepKl step_kl(const std::vector<double>& scores, const std::vector<double>& ref_scores,
                      const std::vector<int>& remaining) {
    const auto p = detail::softmax_over(scores, remaining);
    std::vector<double> sub_p, sub_q;
    for (int j : remaining) {
        sub_p.push_back(scores[static_cast<std::size_t>(j)]);
        sub_q.push_back(ref_scores[static_cast<std::size_t>(j)]);
    }
    const double lse_p = detail::log_sum_exp(sub_p);
    const double lse_q = detail::log_sum_exp(sub_q);
    StepKl out;
    std::vector<double> log_ratio(remaining.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) {
        log_ratio[i] = (sub_p[i] - lse_p) - (sub_q[i] - lse_q);
        out.value += p[i] * log_ratio[i];
    }
    out.d_scores.resize(remaining.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) out.d_scores[i] = p[i] * (log_ratio[i] - out.value);
    return out;
}

/// Exact KL between the full ordering distributions, by enumeration.
inline double exact_sequence_kl(const PLPolicy& policy, const PLPolicy& reference, const SimWindow& window) {
    const auto s = policy.scores(window);
    const auto r = reference.scores(window);
    double kl = 0.0;
    for (const auto& ordering : all_orderings(window.k())) {
        const auto lp = step_log_probs(s, ordering);
        const auto lq = step_log_probs(r, ordering);
        const double log_p = std::accumulate(lp.begin(), lp.end(), 0.0);
        const double log_q = std::accumulate(lq.begin(), lq.end(), 0.0);
        kl += std::exp(log_p) * (log_p - log_q);
    }
    return kl;
}

/// Sampled estimator: mean over the group of log pi(o) - log pi_ref(o).
inline double sampled_kl(const PLPolicy& policy, const PLPolicy& reference, const SimWindow& window,
                         const metrics::RewardGroup& group) {
    if (group.orderings.empty()) return 0.0;
    double total = 0.0;
    for (const auto& o : group.orderings) total += pl_log_prob(policy, window, o) - pl_log_prob(reference, window, o);
    return total / static_cast<double>(group.orderings.size());
}

// ---------------------------------------------------------------------------
// Objective and gradient

/// Value of the surrogate at `policy`, with the no-grad ratio denominators taken
/// at `anchor` (the policy the group was sampled from). Used to check gradients.
inline double surrogate_value(const PLPolicy& policy, const PLPolicy& anchor, const PLPolicy& reference,
                              const SimWindow& window, const metrics::RewardGroup& group, const GrpoConfig& cfg) {
    const auto s = policy.scores(window);
    const auto a = anchor.scores(window);
    const auto r = reference.scores(window);
    const std::size_t length = response_length(window.k(), cfg.reward);
    double total = 0.0;
    for (std::size_t i = 0; i < group.size(); ++i) {
        const auto& o = group.orderings[i];
        const auto lp = step_log_probs(s, o);
        const auto la = step_log_probs(a, o);
        double inner = 0.0;
        for (std::size_t t = 0; t < length; ++t) {
            const std::vector<int> remaining(o.begin() + static_cast<std::ptrdiff_t>(t), o.end());
            inner += group.advantages[i] * std::exp(lp[t] - la[t]) - cfg.beta * step_kl(s, r, remaining).value;
        }
        total += inner / static_cast<double>(length);
    }
    return total / static_cast<double>(group.size());
}

/// Analytic gradient of the surrogate at the sampling policy (ratio == 1).
inline std::vector<double> surrogate_gradient(const PLPolicy& policy, const PLPolicy& reference,
                                              const SimWindow& window, const metrics::RewardGroup& group,
                                              const GrpoConfig& cfg) {
    const auto s = policy.scores(window);
    const auto r = reference.scores(window);
    const std::size_t d = policy.theta.size();
    const std::size_t length = response_length(window.k(), cfg.reward);
    std::vector<double> grad(d, 0.0);
    // d(objective)/d(score_j), accumulated over the group, then mapped through features.
    std::vector<double> d_scores(window.k(), 0.0);
    const double scale = 1.0 / (static_cast<double>(group.size()) * static_cast<double>(length));
    for (std::size_t i = 0; i < group.size(); ++i) {
        const auto& o = group.orderings[i];
        for (std::size_t t = 0; t < length; ++t) {
            const std::vector<int> remaining(o.begin() + static_cast<std::ptrdiff_t>(t), o.end());
            const auto p = detail::softmax_over(s, remaining);
            // grad log p(chosen) wrt remaining scores: e_chosen - p
            d_scores[static_cast<std::size_t>(o[t])] += scale * group.advantages[i];
            for (std::size_t m = 0; m < remaining.size(); ++m) {
                d_scores[static_cast<std::size_t>(remaining[m])] -= scale * group.advantages[i] * p[m];
            }
            if (cfg.beta != 0.0) {
                const StepKl kl = step_kl(s, r, remaining);
                for (std::size_t m = 0; m < remaining.size(); ++m) {
                    d_scores[static_cast<std::size_t>(remaining[m])] -= scale * cfg.beta * kl.d_scores[m];
                }
            }
        }
    }
    for (std::size_t j = 0; j < window.k(); ++j) {
        for (std::size_t f = 0; f < d; ++f) grad[f] += d_scores[j] * window.features[j][f];
    }
    for (double g : grad) {
        if (!std::isfinite(g)) throw Error(ErrorCode::NumericalError, "non-finite gradient in window " + window.id);
    }
    return grad;
}

/// Mean per-step exact KL over the sampled contexts of a group.
inline double group_step_kl(const PLPolicy& policy, const PLPolicy& reference, const SimWindow& window,
                            const metrics::RewardGroup& group, const GrpoConfig& cfg) {
    const auto s = policy.scores(window);
    const auto r = reference.scores(window);
    const std::size_t length = response_length(window.k(), cfg.reward);
    double total = 0.0;
    for (const auto& o : group.orderings) {
        for (std::size_t t = 0; t < length; ++t) {
            total += step_kl(s, r, std::vector<int>(o.begin() + static_cast<std::ptrdiff_t>(t), o.end())).value;
        }
    }
    return group.orderings.empty() ? 0.0 : total / static_cast<double>(group.orderings.size() * length);
}

struct StepStats {
    double mean_reward = 0.0;
    double kl = 0.0;
    double grad_norm = 0.0;
};

/// One on-policy update: sample a group per window, average the surrogate
/// gradients over the batch and take an ascent step. `step` keys the sampling
/// streams so results do not depend on evaluation order.
inline std::pair<PLPolicy, StepStats> grpo_step(const PLPolicy& policy, const PLPolicy& reference,
                                                std::span<const SimWindow> batch, const GrpoConfig& cfg,
                                                std::uint64_t step) {
    if (batch.empty()) throw Error(ErrorCode::InvalidConfig, "grpo_step needs a non-empty batch");
    cfg.validate();
    const std::size_t d = policy.theta.size();
    std::vector<double> grad(d, 0.0);
    StepStats stats;
    for (const auto& window : batch) {
        Rng rng(child_seed(cfg.seed, "grpo/" + std::to_string(step) + "/" + window.id));
        const auto group = sample_group(policy, window, cfg, rng);
        const auto g = surrogate_gradient(policy, reference, window, group, cfg);
        for (std::size_t f = 0; f < d; ++f) grad[f] += g[f];
        for (double rwd : group.rewards) stats.mean_reward += rwd;
        stats.kl += group_step_kl(policy, reference, window, group, cfg);
    }
    const double n = static_cast<double>(batch.size());
    stats.mean_reward /= n * static_cast<double>(cfg.group_size);
    stats.kl /= n;
    PLPolicy next = policy;
    double norm2 = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
        grad[f] /= n;
        norm2 += grad[f] * grad[f];
        next.theta[f] += cfg.learning_rate * grad[f];
    }
    stats.grad_norm = std::sqrt(norm2);
    return {std::move(next), stats};
}

// ---------------------------------------------------------------------------
// Evaluation

/// Exact expected reward of the policy on one window (enumerates all orderings).
inline double expected_reward(const PLPolicy& policy, const SimWindow& window, RewardMode mode) {
    const auto s = policy.scores(window);
    double total = 0.0;
    for (const auto& ordering : all_orderings(window.k())) {
        const auto lp = step_log_probs(s, ordering);
        total += std::exp(std::accumulate(lp.begin(), lp.end(), 0.0)) * reward(window, ordering, mode);
    }
    return total;
}

inline double mean_expected_reward(const PLPolicy& policy, std::span<const SimWindow> windows, RewardMode mode) {
    if (windows.empty()) return 0.0;
    double total = 0.0;
    for (const auto& w : windows) total += expected_reward(policy, w, mode);
    return total / static_cast<double>(windows.size());
}

/// Expected nDCG@k of a sampled ordering (enumerates all orderings).
inline double expected_ndcg(const PLPolicy& policy, const SimWindow& window) {
    const auto s = policy.scores(window);
    double total = 0.0;
    for (const auto& ordering : all_orderings(window.k())) {
        const auto lp = step_log_probs(s, ordering);
        total += std::exp(std::accumulate(lp.begin(), lp.end(), 0.0)) * window_ndcg(window, ordering);
    }
    return total;
}

/// nDCG@k of the highest-scoring ordering (ties keep slot order).
inline double greedy_ndcg(const PLPolicy& policy, const SimWindow& window) {
    const auto s = policy.scores(window);
    std::vector<int> ordering(window.k());
    std::iota(ordering.begin(), ordering.end(), 0);
    std::stable_sort(ordering.begin(), ordering.end(),
                     [&](int a, int b) { return s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(b)]; });
    return window_ndcg(window, ordering);
}

/// One row per update. mean_reward and eval_ndcg4 are exact expectations of the
/// updated policy over all training windows; batch_reward is the sampled group mean.
struct CurvePoint {
    int step = 0;
    double mean_reward = 0.0;
    double kl = 0.0;
    double grad_norm = 0.0;
    double eval_ndcg4 = 0.0;
    double batch_reward = 0.0;
};

struct TrainResult {
    PLPolicy policy;
    std::vector<CurvePoint> curve;
    double initial_expected_reward = 0.0;
    double final_expected_reward = 0.0;
};

/// `epochs` passes over shuffled windows in batches; the reference policy is the
/// initial one. Deterministic given cfg.seed.
inline TrainResult train(const PLPolicy& initial, const std::vector<SimWindow>& windows, const GrpoConfig& cfg) {
    cfg.validate();
    if (windows.empty()) throw Error(ErrorCode::InvalidConfig, "no training windows");
    const PLPolicy reference = initial;
    auto eval_ndcg = [&](const PLPolicy& p) {
        double total = 0.0;
        for (const auto& w : windows) total += expected_ndcg(p, w);
        return total / static_cast<double>(windows.size());
    };

    TrainResult result;
    result.policy = initial;
    result.initial_expected_reward = mean_expected_reward(initial, windows, cfg.reward);
    Rng order_rng(child_seed(cfg.seed, "grpo/order"));
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), 0);
    int step = 0;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            std::vector<SimWindow> minibatch;
            for (std::size_t i = begin; i < std::min(order.size(), begin + batch); ++i) minibatch.push_back(windows[order[i]]);
            auto [next, stats] = grpo_step(result.policy, reference, minibatch, cfg, static_cast<std::uint64_t>(step));
            result.policy = std::move(next);
            ++step;
            result.curve.push_back({step, mean_expected_reward(result.policy, windows, cfg.reward), stats.kl,
                                    stats.grad_norm, eval_ndcg(result.policy), stats.mean_reward});
        }
    }
    result.final_expected_reward = mean_expected_reward(result.policy, windows, cfg.reward);
    return result;
}

// ---------------------------------------------------------------------------
// Synthetic task

struct SyntheticTask {
    std::vector<SimWindow> windows;
    std::vector<std::string> feature_names;
};

/// Four-candidate windows with Gaussian features. When `informative`, the
/// accepted candidate's match features are shifted up by `signal`; the last
/// feature is always pure noise. The gold slot is uniform.
inline SyntheticTask make_synthetic_task(std::size_t n_windows, bool informative, std::uint64_t seed,
                                         double signal = 1.0, std::size_t k = 4) {
    SyntheticTask task;
    task.feature_names = {"skill_match", "experience_match", "location_match", "noise"};
    const std::size_t d = task.feature_names.size();
    Rng rng(child_seed(seed, informative ? "grpo-task/informative" : "grpo-task/noise"));
    for (std::size_t n = 0; n < n_windows; ++n) {
        SimWindow w;
        w.id = "sim" + std::to_string(n);
        w.gold = static_cast<int>(rng.uniform_index(k));
        for (std::size_t j = 0; j < k; ++j) {
            std::vector<double> x(d);
            for (std::size_t f = 0; f < d; ++f) {
                const bool shifted = informative && static_cast<int>(j) == w.gold && f + 1 < d;
                x[f] = rng.normal() + (shifted ? signal : 0.0);
            }
            w.features.push_back(std::move(x));
        }
        task.windows.push_back(std::move(w));
    }
    return task;
}

inline ordered_json policy_to_json(const PLPolicy& policy) {
    return {{"theta", policy.theta}, {"feature_names", policy.feature_names}};
}

inline PLPolicy policy_from_json(const json& j) {
    PLPolicy p;
    p.theta = j.at("theta").get<std::vector<double>>();
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (p.theta.size() != p.feature_names.size()) {
        throw Error(ErrorCode::MalformedRecord, "policy theta and feature_names differ in length");
    }
    return p;
}

}  // namespace confit::grpo
