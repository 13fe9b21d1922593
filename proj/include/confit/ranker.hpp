// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "confit/core.hpp"
#include "confit/error.hpp"
#include "confit/random.hpp"

namespace confit {

struct SamplingParams {
    double temperature = 0.0;
    double top_p = 1.0;
    int top_k = 0;  // 0 leaves it to the server
    int max_tokens = 4096;

    /// Settings used when estimating window difficulty.
    static SamplingParams annotation() { return {0.6, 0.95, 20, 4096}; }
};

/// One listwise ranking call. Candidates occupy slots 1..k in vector order.
struct RankRequest {
    std::string request_id;
    Document job;
    std::vector<Document> candidates;
    std::optional<std::string> instructions;
    std::optional<std::string> hint;
    SamplingParams sampling;

    std::size_t k() const { return candidates.size(); }
};

struct RankResponse {
    std::string raw_text;
    std::vector<int> ordering;  // slot indices 1..k, best first
    bool repaired = false;
    bool degraded = false;
    int retry_count = 0;
    double latency_ms = 0.0;
    std::string error;
};

/// Anything that can order a window. Implementations must be safe to call
/// concurrently and must always return a full permutation of 1..k.
class Ranker {
public:
    virtual ~Ranker() = default;
    virtual RankResponse rank(const RankRequest& request) const = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Prompt

struct Prompt {
    std::string system;
    std::string user;
};

inline const std::string& default_instructions() {
    static const std::string text =
        "Carefully verify that each candidate meets ALL of the following mandatory criteria when explicitly "
        "stated in the job description:\n"
        "- Education: Required degree level and relevant major.\n"
        "- Certifications & Licenses: Mandatory professional qualifications (e.g., physician's license, CPA).\n"
        "- Technical Skills: Required tools, programming languages, and domain skills.\n"
        "- Age Restrictions: Explicit age ranges, where legally stated.\n"
        "- Legal & Identity Requirements: Work authorization, nationality, or security clearance.\n"
        "- Physical Fitness: Explicit physical requirements of the role.\n"
        "- Work Conditions: Location, shift, travel, or relocation constraints.\n"
        "Critical Rule: The more explicitly stated mandatory criteria a candidate fails to meet, the less matching "
        "they are to the job.";
    return text;
}

namespace detail {

/// "[X] > [Y] > [Z] > [T]" for k = 4; further slots continue through the alphabet.
inline std::string format_placeholder(std::size_t k, bool empty_slots) {
    static constexpr std::string_view letters = "XYZTUVWSRQPONMLKJIHGFEDCBA";
    std::string out;
    for (std::size_t i = 0; i < k; ++i) {
        if (i > 0) out += " > ";
        out += '[';
        if (!empty_slots) out += letters[i % letters.size()];
        out += ']';
    }
    return out;
}

}  // namespace detail

/// Builds the system and user messages for a listwise request. Deterministic.
inline Prompt build_prompt(const RankRequest& request) {
    const std::size_t k = request.k();
    Prompt prompt;
    prompt.system =
        "You are an expert technical recruiter that can rank resumes based on their matching degree to the job "
        "description. You first analyze each resume individually, then compare them systematically, and finally "
        "provide the ranking. The most relevant resumes should be listed first. The output format should be "
        "<answer> " + detail::format_placeholder(k, true) + " </answer>, e.g., <answer> " +
        detail::format_placeholder(k, false) + " </answer>.";

    std::string user;
    if (request.instructions && !request.instructions->empty()) user += *request.instructions + "\n";
    if (request.hint && !request.hint->empty()) user += "Hint: " + *request.hint + "\n";
    if (!user.empty()) user += "\n";
    user += "Resumes:\n";
    for (std::size_t i = 0; i < k; ++i) {
        if (i > 0) user += "\n\n";
        user += "Resume [" + std::to_string(i + 1) + "]:\n" + render_document(request.candidates[i]);
    }
    user += "\n\nPlease rank these resumes according to their matching degree to the JOB DESCRIPTION: [" +
            render_document(request.job) + "].\n\n";
    user +=
        "Follow these steps exactly:\n"
        "1. First, think to summarize the job description and analyze EACH resume briefly: Evaluate how well it "
        "matches the job description and mandatory criteria.\n"
        "2. Then, think to COMPARE the resumes and determine which candidates are better fits and why.\n"
        "3. Finally, within <answer> tags, provide ONLY the final ranking of the resumes from best to worst fit "
        "using their numerical identifiers in the format: " +
        detail::format_placeholder(k, false) + ".";
    prompt.user = std::move(user);
    return prompt;
}

// ---------------------------------------------------------------------------
// Answer protocol

/// "<answer> [2] > [3] > [1] > [4] </answer>"
inline std::string format_answer(const std::vector<int>& ordering) {
    std::string out = "<answer> ";
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        if (i > 0) out += " > ";
        out += "[" + std::to_string(ordering[i]) + "]";
    }
    out += " </answer>";
    return out;
}

struct ParsedAnswer {
    std::vector<int> ordering;
    bool repaired = false;
};

/// Reads the last <answer>...</answer> block. Out-of-range and repeated ids are
/// dropped, missing ids are appended in ascending order, and `repaired` records
/// whether any of that happened.
inline ParsedAnswer parse_answer(std::string_view raw, std::size_t k) {
    static constexpr std::string_view open_tag = "<answer>";
    static constexpr std::string_view close_tag = "</answer>";
    if (k == 0) throw Error(ErrorCode::InvalidK, "answer length k must be positive");

    const auto open = raw.rfind(open_tag);
    if (open == std::string_view::npos) throw Error(ErrorCode::MalformedAnswer, "no <answer> block");
    const auto body_begin = open + open_tag.size();
    const auto close = raw.find(close_tag, body_begin);
    if (close == std::string_view::npos) throw Error(ErrorCode::MalformedAnswer, "unterminated <answer> block");
    const std::string body(raw.substr(body_begin, close - body_begin));

    // Each token is the digit run of one ranked entry; "too long" marks values
    // that cannot be valid slot numbers anyway.
    std::vector<std::string> tokens;
    static const std::regex bracketed(R"(\[\s*(\d+)\s*\])");
    for (auto it = std::sregex_iterator(body.begin(), body.end(), bracketed); it != std::sregex_iterator(); ++it) {
        tokens.push_back((*it)[1].str());
    }
    bool lenient = false;
    if (tokens.empty()) {
        // Bare "2 > 3 > 1" without brackets.
        static const std::regex bare(R"((?:^|>)\s*(\d+)\s*(?=>|$))");
        for (auto it = std::sregex_iterator(body.begin(), body.end(), bare); it != std::sregex_iterator(); ++it) {
            tokens.push_back((*it)[1].str());
        }
        lenient = !tokens.empty();
    }
    if (tokens.empty()) throw Error(ErrorCode::MalformedAnswer, "answer block holds no candidate ids");

    ParsedAnswer parsed;
    parsed.repaired = lenient;
    std::vector<bool> seen(k + 1, false);
    for (const auto& token : tokens) {
        const std::size_t digits = token.find_first_not_of('0') == std::string::npos
                                       ? 1
                                       : token.size() - token.find_first_not_of('0');
        if (digits > 9) {
            parsed.repaired = true;
            continue;
        }
        const long value = std::stol(token);
        if (value < 1 || static_cast<std::size_t>(value) > k || seen[static_cast<std::size_t>(value)]) {
            parsed.repaired = true;
            continue;
        }
        seen[static_cast<std::size_t>(value)] = true;
        parsed.ordering.push_back(static_cast<int>(value));
    }
    if (parsed.ordering.empty()) throw Error(ErrorCode::MalformedAnswer, "no usable candidate id in answer block");
    for (std::size_t slot = 1; slot <= k; ++slot) {
        if (!seen[slot]) {
            parsed.ordering.push_back(static_cast<int>(slot));
            parsed.repaired = true;
        }
    }
    return parsed;
}

inline std::vector<int> identity_ordering(std::size_t k) {
    std::vector<int> ordering(k);
    for (std::size_t i = 0; i < k; ++i) ordering[i] = static_cast<int>(i + 1);
    return ordering;
}

inline bool is_slot_permutation(const std::vector<int>& ordering, std::size_t k) {
    if (ordering.size() != k) return false;
    std::vector<bool> seen(k + 1, false);
    for (int slot : ordering) {
        if (slot < 1 || static_cast<std::size_t>(slot) > k || seen[static_cast<std::size_t>(slot)]) return false;
        seen[static_cast<std::size_t>(slot)] = true;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Built-in rankers

/// Keeps the presented order.
class IdentityRanker final : public Ranker {
public:
    RankResponse rank(const RankRequest& request) const override {
        RankResponse response;
        response.ordering = identity_ordering(request.k());
        response.raw_text = format_answer(response.ordering);
        return response;
    }
    std::string name() const override { return "identity"; }
};

/// Accepted candidates first, stable by slot within each class.
inline std::vector<int> oracle_ordering(const RankRequest& request, const LabelIndex& labels) {
    std::vector<int> ordering = identity_ordering(request.k());
    std::stable_partition(ordering.begin(), ordering.end(), [&](int slot) {
        return labels.accepted(request.job.id, request.candidates[static_cast<std::size_t>(slot - 1)].id);
    });
    return ordering;
}

class OracleRanker final : public Ranker {
public:
    explicit OracleRanker(LabelIndex labels) : labels_(std::move(labels)) {}

    RankResponse rank(const RankRequest& request) const override {
        RankResponse response;
        response.ordering = oracle_ordering(request, labels_);
        response.raw_text = format_answer(response.ordering);
        return response;
    }
    std::string name() const override { return "oracle"; }

private:
    LabelIndex labels_;
};

/// The oracle ordering, except that with probability `p_flip` the top (gold)
/// entry is swapped with a uniformly chosen other position. Randomness is keyed
/// by request id, so results do not depend on call order.
class NoisyRanker final : public Ranker {
public:
    NoisyRanker(LabelIndex labels, double p_flip, std::uint64_t seed)
        : labels_(std::move(labels)), p_flip_(p_flip), seed_(seed) {
        if (!(p_flip >= 0.0 && p_flip <= 1.0)) throw Error(ErrorCode::InvalidConfig, "p_flip must lie in [0, 1]");
    }

    RankResponse rank(const RankRequest& request) const override {
        RankResponse response;
        response.ordering = oracle_ordering(request, labels_);
        Rng rng(child_seed(seed_, request.request_id));
        const bool flip = rng.bernoulli(p_flip_);
        const std::size_t k = response.ordering.size();
        const bool has_gold =
            k > 1 && labels_.accepted(request.job.id,
                                      request.candidates[static_cast<std::size_t>(response.ordering[0] - 1)].id);
        if (flip && has_gold) {
            const std::size_t other = 1 + rng.uniform_index(k - 1);
            std::swap(response.ordering[0], response.ordering[other]);
        }
        response.raw_text = format_answer(response.ordering);
        return response;
    }
    std::string name() const override { return "noisy"; }

private:
    LabelIndex labels_;
    double p_flip_;
    std::uint64_t seed_;
};

/// Adapts a callable; handy for scripted or adversarial rankers in tests.
class CallbackRanker final : public Ranker {
public:
    using Fn = std::function<RankResponse(const RankRequest&)>;
    explicit CallbackRanker(Fn fn, std::string name = "callback") : fn_(std::move(fn)), name_(std::move(name)) {}

    RankResponse rank(const RankRequest& request) const override { return fn_(request); }
    std::string name() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Judges (window approval for the LLM-filter strategy)

/// Decides whether a window is suitable for training. `gold_slot` is 1-based.
class Judge {
public:
    virtual ~Judge() = default;
    virtual bool approve(const RankRequest& request, int gold_slot) const = 0;
};

/// Approves a window when the wrapped ranker puts the gold candidate first.
class RankerJudge final : public Judge {
public:
    explicit RankerJudge(const Ranker& ranker) : ranker_(&ranker) {}

    bool approve(const RankRequest& request, int gold_slot) const override {
        const RankResponse response = ranker_->rank(request);
        return !response.degraded && !response.ordering.empty() && response.ordering.front() == gold_slot;
    }

private:
    const Ranker* ranker_;
};

}  // namespace confit
