// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "confit/core.hpp"
#include "confit/error.hpp"

namespace confit::metrics {

namespace detail {

inline void check_k(std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidK, "k must be at least 1");
}

inline void check_binary(std::span<const int> rels) {
    for (int r : rels) {
        if (r != 0 && r != 1) throw Error(ErrorCode::InvalidNdcg, "relevance entries must be 0 or 1");
    }
}

inline std::size_t count_positives(std::span<const int> rels) {
    return static_cast<std::size_t>(std::count(rels.begin(), rels.end(), 1));
}

}  // namespace detail

/// Binary-gain DCG with discount 1/log2(rank + 1), ranks starting at 1.
inline double dcg(std::span<const int> rels, std::size_t k) {
    detail::check_k(k);
    detail::check_binary(rels);
    double total = 0.0;
    const std::size_t depth = std::min(k, rels.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (rels[i] != 0) total += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return total;
}

/// DCG of the ideal ordering for `positives` relevant items.
inline double ideal_dcg(std::size_t positives, std::size_t k) {
    detail::check_k(k);
    double total = 0.0;
    for (std::size_t i = 0; i < std::min(k, positives); ++i) total += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return total;
}

inline double ndcg(std::span<const int> rels, std::size_t k) {
    detail::check_k(k);
    detail::check_binary(rels);
    const std::size_t positives = detail::count_positives(rels);
    if (positives == 0) throw Error(ErrorCode::NoPositives, "nDCG undefined without a positive");
    return dcg(rels, k) / ideal_dcg(positives, k);
}

/// Positives inside the first k over positives in the whole vector.
inline double recall_at_k(std::span<const int> rels, std::size_t k) {
    detail::check_k(k);
    detail::check_binary(rels);
    const std::size_t positives = detail::count_positives(rels);
    if (positives == 0) throw Error(ErrorCode::NoPositives, "Recall undefined without a positive");
    const auto head = rels.first(std::min(k, rels.size()));
    return static_cast<double>(detail::count_positives(head)) / static_cast<double>(positives);
}

/// Relative nDCG improvement (new - old) / (max - old).
/// An already-optimal window (old == max) has nothing to improve and scores 0.
inline double rearank_reward(double ndcg_old, double ndcg_new, double ndcg_max) {
    auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!in_unit(ndcg_old) || !in_unit(ndcg_new) || !in_unit(ndcg_max)) {
        throw Error(ErrorCode::InvalidNdcg, "nDCG values must lie in [0, 1]");
    }
    if (ndcg_old > ndcg_max || ndcg_new > ndcg_max) {
        throw Error(ErrorCode::InvalidNdcg, "nDCG_old and nDCG_new cannot exceed nDCG_max");
    }
    const double headroom = ndcg_max - ndcg_old;
    if (headroom == 0.0) return 0.0;
    return (ndcg_new - ndcg_old) / headroom;
}

/// 1 when the predicted top candidate is the gold one, 0 otherwise.
inline double rankr1_reward(const std::string& predicted_top, const std::string& gold,
                            std::span<const std::string> window) {
    auto in_window = [&](const std::string& id) { return std::find(window.begin(), window.end(), id) != window.end(); };
    if (!in_window(predicted_top)) throw Error(ErrorCode::UnknownCandidate, "'" + predicted_top + "' not in window");
    if (!in_window(gold)) throw Error(ErrorCode::UnknownCandidate, "'" + gold + "' not in window");
    return predicted_top == gold ? 1.0 : 0.0;
}

/// Standardizes rewards within a group using the population standard deviation.
/// Zero-variance groups (including singletons) map to all zeros.
inline std::vector<double> group_advantages(std::span<const double> rewards) {
    if (rewards.empty()) throw Error(ErrorCode::EmptyGroup, "advantage group is empty");
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;
    std::vector<double> out(rewards.size(), 0.0);
    const bool all_equal = std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
    if (all_equal || var <= 0.0) return out;
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
    return out;
}

/// Sampled orderings for one window with their rewards and advantages.
struct RewardGroup {
    std::string window_id;
    std::vector<std::vector<int>> orderings;  // slot indices, 0-based
    std::vector<double> rewards;
    std::vector<double> advantages;

    std::size_t size() const { return rewards.size(); }
};

}  // namespace confit::metrics
