// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "confit/confit.hpp"
#include "confit/llm_client.hpp"

namespace confit::cli {

/// Effective configuration for one command: the config file merged with flags.
struct RunConfig {
    json raw = json::object();  // config file contents, after overrides
    std::uint64_t seed = 42;
    std::size_t jobs = 1;
    bool trace = false;
    std::filesystem::path output_dir = ".";

    static RunConfig load(const std::string& path) {
        RunConfig cfg;
        if (path.empty()) return cfg;
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file '" + path + "'");
        try {
            cfg.raw = json::parse(in);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ConfigError, "config file '" + path + "' is not valid JSON: " + e.what());
        }
        if (!cfg.raw.is_object()) throw Error(ErrorCode::ConfigError, "config file must hold a JSON object");
        if (cfg.raw.contains("seed")) cfg.seed = cfg.raw.at("seed").get<std::uint64_t>();
        if (cfg.raw.contains("paths") && cfg.raw["paths"].contains("output_dir")) {
            cfg.output_dir = cfg.raw["paths"]["output_dir"].get<std::string>();
        }
        return cfg;
    }

    json section(const char* key) const {
        auto it = raw.find(key);
        return it == raw.end() ? json::object() : *it;
    }

    /// Explicit flag, else paths.<key> from the config, else <output_dir>/<fallback>.
    std::string path(const std::string& flag_value, const char* key, const char* fallback) const {
        if (!flag_value.empty()) return flag_value;
        const json paths = section("paths");
        if (paths.contains(key)) return paths.at(key).get<std::string>();
        return (output_dir / fallback).string();
    }

    /// Same as path() but the file must exist.
    std::string existing_path(const std::string& flag_value, const char* key, const char* fallback) const {
        std::string p = path(flag_value, key, fallback);
        if (!std::filesystem::exists(p)) {
            throw Error(ErrorCode::ConfigError, std::string(key) + " path '" + p + "' does not exist");
        }
        return p;
    }

    /// Hash of everything except file locations, so relocated runs compare equal.
    std::string config_hash() const {
        json hashed = raw;
        hashed.erase("paths");
        hashed["seed"] = seed;
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(hashed.dump())));
        return buf;
    }

    ordered_json provenance(const std::string& command) const {
        return {{"tool", "confit"}, {"version", kVersion}, {"command", command},
                {"config_hash", config_hash()}, {"seed", seed}};
    }
};

/// Ranker described by a JSON block: {"type": "identity" | "oracle" | "noisy" |
/// "endpoint", "p_flip": ..., "endpoint": {...}}.
inline std::unique_ptr<Ranker> make_ranker(const json& spec, const std::vector<Label>& labels, std::uint64_t seed) {
    const std::string type = spec.value("type", std::string("oracle"));
    if (type == "identity") return std::make_unique<IdentityRanker>();
    if (type == "oracle") return std::make_unique<OracleRanker>(LabelIndex(labels));
    if (type == "noisy") {
        return std::make_unique<NoisyRanker>(LabelIndex(labels), spec.value("p_flip", 0.3),
                                             child_seed(seed, "noisy-ranker"));
    }
    if (type == "endpoint") {
        return std::make_unique<LlmRanker>(EndpointConfig::from_json(spec.value("endpoint", json::object())));
    }
    throw Error(ErrorCode::ConfigError, "unknown ranker type '" + type + "'");
}

}  // namespace confit::cli
