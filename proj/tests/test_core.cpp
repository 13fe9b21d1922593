// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "confit/core.hpp"
#include "confit/random.hpp"
#include "test_support.hpp"

namespace confit {
namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an exception";
    return ErrorCode::IoError;
}

TEST(Corpus, ParsesWellFormedRecords) {
    std::istringstream in(R"({"id":"r1","kind":"resume","fields":[["skills","C++"]]}
{"id":"r2","kind":"resume","fields":[["skills","Go"],["current location","Berlin"]]}
)");
    const Corpus corpus = read_corpus(in);
    ASSERT_EQ(corpus.size(), 2u);
    EXPECT_EQ(corpus.at("r2").fields.size(), 2u);
    EXPECT_EQ(corpus.at("r2").fields[1].first, "current location");
}

TEST(Corpus, DuplicateIdRejected) {
    std::istringstream in(R"({"id":"r1","kind":"resume","fields":[]}
{"id":"r1","kind":"resume","fields":[]}
)");
    EXPECT_EQ(code_of([&] { read_corpus(in); }), ErrorCode::DuplicateId);
}

TEST(Corpus, MissingFieldsReportsLine) {
    std::istringstream in(R"({"id":"r1","kind":"resume","fields":[]}
{"id":"r2","kind":"resume","fields":[]}
{"id":"r3","kind":"resume"}
)");
    try {
        read_corpus(in);
        FAIL() << "expected MalformedRecord";
    } catch (const MalformedRecord& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.code(), ErrorCode::MalformedRecord);
    }
}

TEST(Corpus, InvalidJsonAndBadKind) {
    std::istringstream bad_json("{\"id\": \n");
    EXPECT_EQ(code_of([&] { read_corpus(bad_json); }), ErrorCode::MalformedRecord);
    std::istringstream bad_kind(R"({"id":"x","kind":"robot","fields":[]})");
    EXPECT_EQ(code_of([&] { read_corpus(bad_kind); }), ErrorCode::MalformedRecord);
}

TEST(Corpus, KindFilter) {
    std::istringstream in(R"({"id":"j1","kind":"job","fields":[]}
{"id":"r1","kind":"resume","fields":[]}
)");
    const Corpus resumes = read_corpus(in, DocKind::Resume);
    EXPECT_EQ(resumes.size(), 1u);
    EXPECT_TRUE(resumes.contains("r1"));
    EXPECT_FALSE(resumes.contains("j1"));
}

TEST(Corpus, RoundTrip) {
    Rng rng(5);
    Corpus corpus;
    for (int i = 0; i < 50; ++i) {
        Document d{"d" + std::to_string(i), rng.bernoulli(0.2) ? DocKind::Job : DocKind::Resume, {}};
        const auto nfields = rng.uniform_index(5);
        for (std::size_t f = 0; f < nfields; ++f) {
            d.fields.emplace_back("field" + std::to_string(rng.uniform_index(3)),
                                  "text \"quoted\"\n line " + std::to_string(rng.uniform_index(1000)) + " 上海");
        }
        corpus.add(std::move(d));
    }
    std::ostringstream out;
    write_corpus(out, corpus);
    std::istringstream in(out.str());
    const Corpus back = read_corpus(in);
    ASSERT_EQ(back.size(), corpus.size());
    auto it = back.begin();
    for (const auto& d : corpus) {
        EXPECT_EQ(it->id, d.id);
        EXPECT_EQ(it->kind, d.kind);
        EXPECT_EQ(it->fields, d.fields);
        ++it;
    }
}

TEST(Render, SingleField) {
    EXPECT_EQ(render_document(Document{"j", DocKind::Job, {{"title", "Engineer"}}}), "## title\nEngineer");
}

TEST(Render, EmptyAndTwoFields) {
    EXPECT_EQ(render_document(Document{"j", DocKind::Job, {}}), "");
    const Document d{"r", DocKind::Resume, {{"current location", "San Jose"}, {"highest degree", "MASTER"}}};
    EXPECT_EQ(render_document(d), "## current location\nSan Jose\n\n## highest degree\nMASTER");
}

TEST(Render, InjectiveOnDistinctFixtures) {
    std::set<std::string> seen;
    for (int i = 0; i < 40; ++i) {
        const Document d{"r", DocKind::Resume, {{"skills", "s" + std::to_string(i % 20)}, {"years", std::to_string(i / 20)}}};
        EXPECT_TRUE(seen.insert(render_document(d)).second);
    }
}

TEST(Tokens, WhitespaceAndCjk) {
    EXPECT_EQ(estimate_tokens(""), 0u);
    EXPECT_EQ(estimate_tokens("  hello   world\n"), 2u);
    EXPECT_EQ(estimate_tokens("熟悉C++开发"), 5u);  // 熟 悉 C++ 开 发
    EXPECT_EQ((Document{"r", DocKind::Resume, {{"a", "one two"}, {"b", "three"}}}.token_estimate()), 5u);  // names count too
}

Corpus pool_corpus(int n) {
    Corpus corpus;
    corpus.add(Document{"j1", DocKind::Job, {}});
    for (int i = 1; i <= n; ++i) corpus.add(Document{"r" + std::to_string(i), DocKind::Resume, {}});
    return corpus;
}

std::string pool_line(int n, std::string job = "j1") {
    ordered_json rec;
    rec["job_id"] = job;
    rec["candidates"] = ordered_json::array();
    for (int i = 1; i <= n; ++i) rec["candidates"].push_back("r" + std::to_string(i));
    return rec.dump() + "\n";
}

TEST(Pools, SingleAcceptedRestUnlabeled) {
    const Corpus corpus = pool_corpus(20);
    std::istringstream in(pool_line(20));
    const auto pools = read_pools(in, {{"j1", "r5", 1}}, corpus);
    ASSERT_EQ(pools.size(), 1u);
    EXPECT_EQ(pools[0].positive_count(), 1u);
    EXPECT_EQ(pools[0].labels.size(), 1u);
    EXPECT_EQ(pools[0].label_of("r6"), LabelValue::Unlabeled);
    EXPECT_NO_THROW(pools[0].validate());
}

TEST(Pools, JoinThreeAcceptedTwoRejected) {
    const Corpus corpus = pool_corpus(20);
    std::istringstream in(pool_line(20));
    const std::vector<Label> labels = {{"j1", "r1", 1}, {"j1", "r4", 1}, {"j1", "r9", 1}, {"j1", "r2", 0},
                                       {"j1", "r3", 0}, {"j2", "r5", 1}};
    const auto pools = read_pools(in, labels, corpus);
    EXPECT_EQ(pools[0].labels.size(), 5u);
    EXPECT_EQ(pools[0].positive_count(), 3u);
    EXPECT_EQ(pools[0].label_of("r3"), LabelValue::Rejected);
    EXPECT_EQ(pools[0].label_of("r5"), LabelValue::Unlabeled);
    EXPECT_EQ(pools[0].relevance({"r1", "r2", "r4"}), (std::vector<int>{1, 0, 1}));
}

TEST(Pools, Errors) {
    const Corpus corpus = pool_corpus(20);
    std::istringstream unknown(R"({"job_id":"j1","candidates":["r1","r999"]})");
    EXPECT_EQ(code_of([&] { read_pools(unknown, {}, corpus); }), ErrorCode::UnknownDocument);
    std::istringstream empty(R"({"job_id":"j1","candidates":[]})");
    EXPECT_EQ(code_of([&] { read_pools(empty, {}, corpus); }), ErrorCode::EmptyPool);
    std::istringstream dup(R"({"job_id":"j1","candidates":["r1","r1"]})");
    EXPECT_EQ(code_of([&] { read_pools(dup, {}, corpus); }), ErrorCode::MalformedRecord);
    std::istringstream job(pool_line(3, "j404"));
    EXPECT_EQ(code_of([&] { read_pools(job, {}, corpus); }), ErrorCode::UnknownDocument);
}

TEST(Pools, InvariantsHoldOnRandomFixtures) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(25));
        const Corpus corpus = pool_corpus(30);
        std::vector<Label> labels;
        for (int i = 1; i <= 30; ++i) {
            if (rng.bernoulli(0.3)) labels.push_back({"j1", "r" + std::to_string(i), rng.bernoulli(0.5) ? 1 : 0});
        }
        std::istringstream in(pool_line(n));
        const auto pools = read_pools(in, labels, corpus);
        ASSERT_NO_THROW(pools[0].validate());
        for (const auto& [id, value] : pools[0].labels) {
            EXPECT_NE(std::find(pools[0].candidates.begin(), pools[0].candidates.end(), id), pools[0].candidates.end());
            EXPECT_NE(value, LabelValue::Unlabeled);
        }
    }
}

TEST(Labels, RejectsDuplicatePairsAndNonBinary) {
    std::istringstream dup(R"({"job_id":"j","resume_id":"r","y":1}
{"job_id":"j","resume_id":"r","y":0}
)");
    EXPECT_EQ(code_of([&] { read_labels(dup); }), ErrorCode::DuplicateId);
    std::istringstream bad(R"({"job_id":"j","resume_id":"r","y":2})");
    EXPECT_EQ(code_of([&] { read_labels(bad); }), ErrorCode::MalformedRecord);
}

TEST(Ordering, PermutationCheck) {
    EXPECT_TRUE(is_permutation_of({"b", "a", "c"}, {"a", "b", "c"}));
    EXPECT_FALSE(is_permutation_of({"a", "a", "c"}, {"a", "b", "c"}));
    EXPECT_FALSE(is_permutation_of({"a", "b"}, {"a", "b", "c"}));
}

TEST(Random, DeterministicStreams) {
    Rng a(child_seed(42, "x")), b(child_seed(42, "x")), c(child_seed(42, "y"));
    for (int i = 0; i < 100; ++i) {
        const auto va = a.uniform_index(1000);
        EXPECT_EQ(va, b.uniform_index(1000));
        (void)c.uniform_index(1000);
    }
    EXPECT_NE(child_seed(42, "x"), child_seed(42, "y"));
    EXPECT_NE(child_seed(42, "x"), child_seed(43, "x"));
    Rng r(1);
    const auto pick = r.sample_without_replacement(10, 10);
    EXPECT_EQ(std::set<std::size_t>(pick.begin(), pick.end()).size(), 10u);
}

}  // namespace
}  // namespace confit
