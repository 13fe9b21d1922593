// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "confit/core.hpp"
#include "confit/random.hpp"

namespace confit::synthetic {

/// Knobs for the generated person-job corpus. Jobs and resumes carry latent
/// skill vectors; a noisy retriever picks each job's pool and labels favour
/// candidates with a high latent match.
struct GeneratorConfig {
    std::size_t jobs = 50;
    std::size_t resumes = 400;
    std::size_t pool_size = 20;
    std::size_t latent_dims = 6;
    double retrieval_noise = 1.0;  // std of the retriever's error on the latent match
    double label_sharpness = 2.0;  // how strongly acceptance follows the latent match
    double short_pool_rate = 0.04;
    double no_positive_rate = 0.06;
    double many_positive_rate = 0.04;
    std::size_t min_positives = 1;
    std::size_t max_positives = 4;
    std::size_t rejected_per_job = 2;

    static GeneratorConfig from_json(const json& j) {
        GeneratorConfig c;
        c.jobs = j.value("jobs", c.jobs);
        c.resumes = j.value("resumes", c.resumes);
        c.pool_size = j.value("pool_size", c.pool_size);
        c.latent_dims = j.value("latent_dims", c.latent_dims);
        c.retrieval_noise = j.value("retrieval_noise", c.retrieval_noise);
        c.label_sharpness = j.value("label_sharpness", c.label_sharpness);
        c.short_pool_rate = j.value("short_pool_rate", c.short_pool_rate);
        c.no_positive_rate = j.value("no_positive_rate", c.no_positive_rate);
        c.many_positive_rate = j.value("many_positive_rate", c.many_positive_rate);
        c.min_positives = j.value("min_positives", c.min_positives);
        c.max_positives = j.value("max_positives", c.max_positives);
        c.rejected_per_job = j.value("rejected_per_job", c.rejected_per_job);
        return c;
    }

    ordered_json to_json() const {
        return {{"jobs", jobs},
                {"resumes", resumes},
                {"pool_size", pool_size},
                {"latent_dims", latent_dims},
                {"retrieval_noise", retrieval_noise},
                {"label_sharpness", label_sharpness},
                {"short_pool_rate", short_pool_rate},
                {"no_positive_rate", no_positive_rate},
                {"many_positive_rate", many_positive_rate},
                {"min_positives", min_positives},
                {"max_positives", max_positives},
                {"rejected_per_job", rejected_per_job}};
    }
};

struct Dataset {
    Corpus corpus;
    std::vector<Label> labels;
    std::vector<RankedPool> pools;  // labels already joined
};

namespace detail {

inline const std::vector<std::string>& skill_vocabulary() {
    static const std::vector<std::string> words = {
        "C++",        "Python",     "SQL",          "Kubernetes", "sales",      "negotiation",
        "accounting", "CPA",        "nursing",      "logistics",  "Mandarin",   "English",
        "RTOS",       "DSP",        "marketing",    "Excel",      "Java",       "customer success",
        "welding",    "forklift",   "tax law",      "pediatrics", "Go",         "networking"};
    return words;
}

inline const std::vector<std::string>& cities() {
    static const std::vector<std::string> names = {"San Jose", "London", "Shanghai", "Berlin", "Austin", "Singapore"};
    return names;
}

inline const std::vector<std::string>& degrees() {
    static const std::vector<std::string> names = {"HIGH SCHOOL", "ASSOCIATE", "BACHELOR", "MASTER", "PHD"};
    return names;
}

/// Skill words whose latent coordinate is largest.
inline std::string top_skills(const std::vector<double>& latent, std::size_t count) {
    const auto& vocab = skill_vocabulary();
    std::vector<std::size_t> idx(vocab.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto weight = [&](std::size_t w) { return latent[w % latent.size()] + 0.01 * static_cast<double>(w % 7); };
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return weight(a) > weight(b); });
    std::string out;
    for (std::size_t i = 0; i < count && i < idx.size(); ++i) {
        if (i > 0) out += ", ";
        out += vocab[idx[i]];
    }
    return out;
}

}  // namespace detail

/// Deterministic in (config, seed).
inline Dataset generate(const GeneratorConfig& cfg, std::uint64_t seed) {
    Rng rng(child_seed(seed, "synthetic"));
    Dataset data;
    auto latent = [&] {
        std::vector<double> v(cfg.latent_dims);
        for (auto& x : v) x = rng.normal();
        return v;
    };

    std::vector<std::vector<double>> resume_latent;
    for (std::size_t r = 0; r < cfg.resumes; ++r) {
        auto z = latent();
        const auto years = 1 + rng.uniform_index(20);
        Document doc;
        doc.id = "r" + std::to_string(r);
        doc.kind = DocKind::Resume;
        doc.fields = {
            {"current location", detail::cities()[rng.uniform_index(detail::cities().size())]},
            {"highest degree", detail::degrees()[rng.uniform_index(detail::degrees().size())]},
            {"skills", detail::top_skills(z, 4)},
            {"most recent experience", "I have worked for " + std::to_string(years) + " years using " +
                                           detail::top_skills(z, 2) + "."},
        };
        data.corpus.add(std::move(doc));
        resume_latent.push_back(std::move(z));
    }

    for (std::size_t jb = 0; jb < cfg.jobs; ++jb) {
        auto z = latent();
        Document job;
        job.id = "j" + std::to_string(jb);
        job.kind = DocKind::Job;
        job.fields = {
            {"title", detail::top_skills(z, 1) + " specialist"},
            {"job type", rng.bernoulli(0.8) ? "Full-Time" : "Contract"},
            {"minimum degree", detail::degrees()[rng.uniform_index(detail::degrees().size())]},
            {"required skills", detail::top_skills(z, 3)},
            {"required experience", "more than " + std::to_string(1 + rng.uniform_index(8)) + " years"},
        };
        data.corpus.add(job);

        std::vector<double> match(cfg.resumes);
        std::vector<double> retrieval(cfg.resumes);
        for (std::size_t r = 0; r < cfg.resumes; ++r) {
            match[r] = std::inner_product(z.begin(), z.end(), resume_latent[r].begin(), 0.0) /
                       std::sqrt(static_cast<double>(cfg.latent_dims));
            retrieval[r] = match[r] + cfg.retrieval_noise * rng.normal();
        }

        // Category roll decides pool length and positive count.
        const double roll = rng.uniform01();
        std::size_t pool_len = std::min(cfg.pool_size, cfg.resumes);
        std::size_t positives = cfg.min_positives + rng.uniform_index(cfg.max_positives - cfg.min_positives + 1);
        if (roll < cfg.short_pool_rate) {
            pool_len = std::max<std::size_t>(1, pool_len / 2 + rng.uniform_index(pool_len / 2));
        } else if (roll < cfg.short_pool_rate + cfg.no_positive_rate) {
            positives = 0;
        } else if (roll < cfg.short_pool_rate + cfg.no_positive_rate + cfg.many_positive_rate) {
            positives = 11 + rng.uniform_index(4);
        }
        positives = std::min(positives, pool_len);

        std::vector<std::size_t> order(cfg.resumes);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return retrieval[a] > retrieval[b]; });
        order.resize(pool_len);

        RankedPool pool;
        pool.job_id = job.id;
        for (std::size_t r : order) pool.candidates.push_back("r" + std::to_string(r));

        // Weighted draw without replacement: higher latent match, likelier acceptance.
        std::vector<std::size_t> open(pool_len);
        std::iota(open.begin(), open.end(), 0);
        std::vector<bool> accepted(pool_len, false);
        for (std::size_t p = 0; p < positives; ++p) {
            double total = 0.0;
            std::vector<double> w(open.size());
            for (std::size_t i = 0; i < open.size(); ++i) {
                w[i] = std::exp(cfg.label_sharpness * match[order[open[i]]]);
                total += w[i];
            }
            double u = rng.uniform01() * total;
            std::size_t pick = open.size() - 1;
            for (std::size_t i = 0; i < open.size(); ++i) {
                if (u < w[i]) {
                    pick = i;
                    break;
                }
                u -= w[i];
            }
            accepted[open[pick]] = true;
            open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        for (std::size_t i = 0; i < pool_len; ++i) {
            if (accepted[i]) {
                data.labels.push_back({job.id, pool.candidates[i], 1});
                pool.labels[pool.candidates[i]] = LabelValue::Accepted;
            }
        }
        for (std::size_t i = 0; i < cfg.rejected_per_job && !open.empty(); ++i) {
            const std::size_t pick = rng.uniform_index(open.size());
            const std::string& id = pool.candidates[open[pick]];
            data.labels.push_back({job.id, id, 0});
            pool.labels[id] = LabelValue::Rejected;
            open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        data.pools.push_back(std::move(pool));
    }
    return data;
}

}  // namespace confit::synthetic
