// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Chat-completion transport for the LLM-backed ranker and judge. Kept out of the
// umbrella header because it pulls in cpp-httplib.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>

#include "confit/core.hpp"
#include "confit/error.hpp"
#include "confit/ranker.hpp"
#include "httplib.h"

namespace confit {

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8000";
    std::string model;
    std::string api_key_env;  // empty: no Authorization header
    int max_retries = 3;      // total attempts per request
    double timeout_s = 120.0;
    int max_concurrency = 4;
    int backoff_ms = 500;     // doubled after each failed attempt

    static EndpointConfig from_json(const json& j) {
        EndpointConfig cfg;
        cfg.base_url = j.value("base_url", cfg.base_url);
        cfg.model = j.value("model", cfg.model);
        cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
        cfg.max_retries = j.value("max_retries", cfg.max_retries);
        cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
        cfg.max_concurrency = j.value("max_concurrency", cfg.max_concurrency);
        cfg.backoff_ms = j.value("backoff_ms", cfg.backoff_ms);
        if (cfg.max_retries < 1) throw Error(ErrorCode::ConfigError, "endpoint.max_retries must be >= 1");
        if (cfg.max_concurrency < 1) throw Error(ErrorCode::ConfigError, "endpoint.max_concurrency must be >= 1");
        if (!(cfg.timeout_s > 0.0)) throw Error(ErrorCode::ConfigError, "endpoint.timeout_s must be positive");
        return cfg;
    }
};

struct ChatResult {
    std::optional<std::string> content;  // empty when every attempt failed
    int attempts = 0;
    std::string error;
};

/// POSTs {model, messages, temperature, top_p, max_tokens} to
/// <base>/v1/chat/completions and returns choices[0].message.content.
/// Transport errors and non-auth HTTP errors are retried; 401/403 throw ConfigError.
class ChatClient {
public:
    explicit ChatClient(EndpointConfig config)
        : config_(std::move(config)),
          slots_(std::make_shared<std::counting_semaphore<>>(config_.max_concurrency)) {
        split_url();
        if (!config_.api_key_env.empty()) {
            const char* key = std::getenv(config_.api_key_env.c_str());
            if (key == nullptr || *key == '\0') {
                throw Error(ErrorCode::ConfigError, "environment variable " + config_.api_key_env + " is not set");
            }
            api_key_ = key;
        }
    }

    const EndpointConfig& config() const { return config_; }

    /// `accept` validates the content; a rejected reply is retried like a transport error.
    template <typename Accept>
    ChatResult complete(const Prompt& prompt, const SamplingParams& sampling, Accept&& accept) const {
        ordered_json body;
        body["model"] = config_.model;
        body["messages"] = ordered_json::array({{{"role", "system"}, {"content", prompt.system}},
                                                {{"role", "user"}, {"content", prompt.user}}});
        body["temperature"] = sampling.temperature;
        body["top_p"] = sampling.top_p;
        if (sampling.top_k > 0) body["top_k"] = sampling.top_k;
        body["max_tokens"] = sampling.max_tokens;
        const std::string payload = body.dump();

        ChatResult result;
        int backoff = config_.backoff_ms;
        for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
            result.attempts = attempt;
            result.error = post_once(payload, result.content);
            if (result.error.empty()) {
                std::string reason = accept(*result.content);
                if (reason.empty()) return result;
                result.error = reason;
            }
            result.content.reset();
            if (attempt < config_.max_retries && backoff > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
                backoff *= 2;
            }
        }
        return result;
    }

private:
    std::string post_once(const std::string& payload, std::optional<std::string>& content) const {
        slots_->acquire();
        struct Release {
            std::counting_semaphore<>* s;
            ~Release() { s->release(); }
        } release{slots_.get()};

        httplib::Client client(origin_);
        const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::duration<double>(config_.timeout_s));
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto response = client.Post(path_, headers, payload, "application/json");
        if (!response) return "transport error: " + httplib::to_string(response.error());
        if (response->status == 401 || response->status == 403) {
            throw Error(ErrorCode::ConfigError, "endpoint rejected credentials (HTTP " +
                                                    std::to_string(response->status) + ")");
        }
        if (response->status != 200) return "HTTP " + std::to_string(response->status);
        try {
            const json reply = json::parse(response->body);
            content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            return std::string("unexpected response body: ") + e.what();
        }
        return {};
    }

    void split_url() {
        const std::string& url = config_.base_url;
        const auto scheme_end = url.find("://");
        const auto host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const auto path_begin = url.find('/', host_begin);
        origin_ = url.substr(0, path_begin);
        std::string prefix = path_begin == std::string::npos ? "" : url.substr(path_begin);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        if (prefix.size() >= 3 && prefix.compare(prefix.size() - 3, 3, "/v1") == 0) {
            path_ = prefix + "/chat/completions";
        } else {
            path_ = prefix + "/v1/chat/completions";
        }
    }

    EndpointConfig config_;
    std::shared_ptr<std::counting_semaphore<>> slots_;
    std::string origin_;
    std::string path_;
    std::string api_key_;
};

/// Ranker backed by a chat-completion endpoint. Malformed answers are retried;
/// when every attempt fails the presented order is returned with `degraded` set,
/// so a caller never loses candidates.
class LlmRanker final : public Ranker {
public:
    explicit LlmRanker(EndpointConfig config) : client_(std::move(config)) {}

    RankResponse rank(const RankRequest& request) const override {
        const auto started = std::chrono::steady_clock::now();
        const Prompt prompt = build_prompt(request);
        const std::size_t k = request.k();
        RankResponse response;
        ChatResult result = client_.complete(prompt, request.sampling, [&](const std::string& text) -> std::string {
            try {
                ParsedAnswer parsed = parse_answer(text, k);
                response.ordering = std::move(parsed.ordering);
                response.repaired = parsed.repaired;
                return {};
            } catch (const Error& e) {
                return e.what();
            }
        });
        response.retry_count = result.attempts - 1;
        response.latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        if (result.content) {
            response.raw_text = std::move(*result.content);
            return response;
        }
        response.ordering = identity_ordering(k);
        response.repaired = true;
        response.degraded = true;
        response.error = result.error;
        std::clog << "[confit] request " << request.request_id << " degraded after " << result.attempts
                  << " attempt(s): " << result.error << '\n';
        return response;
    }

    std::string name() const override { return "llm:" + client_.config().model; }

private:
    ChatClient client_;
};

/// Yes/no approval prompt used by the LLM-filter data strategy.
inline Prompt build_judge_prompt(const RankRequest& request, int gold_slot) {
    Prompt prompt;
    prompt.system =
        "You are an expert technical recruiter auditing training data for a resume ranking model. Reply with "
        "<answer> yes </answer> or <answer> no </answer>.";
    std::string user = "Resumes:\n";
    for (std::size_t i = 0; i < request.k(); ++i) {
        if (i > 0) user += "\n\n";
        user += "Resume [" + std::to_string(i + 1) + "]:\n" + render_document(request.candidates[i]);
    }
    user += "\n\nJOB DESCRIPTION: [" + render_document(request.job) + "].\n\n";
    user += "The accepted candidate is Resume [" + std::to_string(gold_slot) +
            "]. Is this window's accepted candidate clearly the best fit? Answer within <answer> tags with yes or no.";
    prompt.user = std::move(user);
    return prompt;
}

/// Returns the yes/no verdict in the last answer block, if any.
inline std::optional<bool> parse_judgement(std::string_view raw) {
    const auto open = raw.rfind("<answer>");
    if (open == std::string_view::npos) return std::nullopt;
    const auto close = raw.find("</answer>", open);
    if (close == std::string_view::npos) return std::nullopt;
    std::string body(raw.substr(open + 8, close - open - 8));
    for (auto& c : body) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    const bool yes = body.find("yes") != std::string::npos;
    const bool no = body.find("no") != std::string::npos;
    if (yes == no) return std::nullopt;
    return yes;
}

/// Judge backed by a chat-completion endpoint; unusable replies count as rejection.
class LlmJudge final : public Judge {
public:
    explicit LlmJudge(EndpointConfig config) : client_(std::move(config)) {}

    bool approve(const RankRequest& request, int gold_slot) const override {
        std::optional<bool> verdict;
        client_.complete(build_judge_prompt(request, gold_slot), request.sampling,
                         [&](const std::string& text) -> std::string {
                             verdict = parse_judgement(text);
                             return verdict ? std::string{} : std::string("no yes/no verdict");
                         });
        return verdict.value_or(false);
    }

private:
    ChatClient client_;
};

}  // namespace confit
