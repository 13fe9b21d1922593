// Copyright 2026 The confit-rerank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "confit/error.hpp"
#include "json.hpp"

namespace confit {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum class DocKind { Resume, Job };

inline std::string_view to_string(DocKind kind) { return kind == DocKind::Job ? "job" : "resume"; }

inline std::optional<DocKind> parse_doc_kind(std::string_view text) {
    if (text == "resume") return DocKind::Resume;
    if (text == "job") return DocKind::Job;
    return std::nullopt;
}

/// Approximate token count: whitespace-separated runs count once each, every CJK
/// codepoint counts on its own. Informational only.
inline std::size_t estimate_tokens(std::string_view text) {
    auto is_cjk = [](char32_t cp) {
        return (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0x3040 && cp <= 0x30FF) ||
               (cp >= 0x3400 && cp <= 0x4DBF) || (cp >= 0x4E00 && cp <= 0x9FFF) ||
               (cp >= 0xAC00 && cp <= 0xD7AF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
               (cp >= 0xFF00 && cp <= 0xFFEF) || (cp >= 0x20000 && cp <= 0x2FFFF);
    };
    std::size_t count = 0;
    bool in_word = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        char32_t cp = lead;
        std::size_t len = 1;
        if (lead >= 0xF0 && i + 3 < text.size()) {
            cp = ((lead & 0x07u) << 18) | ((text[i + 1] & 0x3Fu) << 12) | ((text[i + 2] & 0x3Fu) << 6) |
                 (text[i + 3] & 0x3Fu);
            len = 4;
        } else if (lead >= 0xE0 && i + 2 < text.size()) {
            cp = ((lead & 0x0Fu) << 12) | ((text[i + 1] & 0x3Fu) << 6) | (text[i + 2] & 0x3Fu);
            len = 3;
        } else if (lead >= 0xC0 && i + 1 < text.size()) {
            cp = ((lead & 0x1Fu) << 6) | (text[i + 1] & 0x3Fu);
            len = 2;
        }
        i += len;
        if (is_cjk(cp)) {
            ++count;
            in_word = false;
        } else if (cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v') {
            in_word = false;
        } else if (!in_word) {
            ++count;
            in_word = true;
        }
    }
    return count;
}

/// A resume or job post: an ordered list of named text fields.
struct Document {
    std::string id;
    DocKind kind = DocKind::Resume;
    std::vector<std::pair<std::string, std::string>> fields;

    std::size_t token_estimate() const {
        std::size_t total = 0;
        for (const auto& [name, text] : fields) total += estimate_tokens(name) + estimate_tokens(text);
        return total;
    }

    friend bool operator==(const Document&, const Document&) = default;
};

/// Renders fields as "## name\nvalue" blocks separated by one blank line, in
/// declared order.
inline std::string render_document(const Document& doc) {
    std::string out;
    for (const auto& [name, text] : doc.fields) {
        if (!out.empty()) out += "\n\n";
        out += "## ";
        out += name;
        out += '\n';
        out += text;
    }
    return out;
}

/// Documents in load order with an id index. Immutable once built.
class Corpus {
public:
    Corpus() = default;

    void add(Document doc) {
        if (doc.id.empty()) throw Error(ErrorCode::MalformedRecord, "document id is empty");
        if (index_.count(doc.id) != 0) throw Error(ErrorCode::DuplicateId, "duplicate document id '" + doc.id + "'");
        index_.emplace(doc.id, docs_.size());
        docs_.push_back(std::move(doc));
    }

    const Document* find(std::string_view id) const {
        auto it = index_.find(std::string(id));
        return it == index_.end() ? nullptr : &docs_[it->second];
    }

    const Document& at(std::string_view id) const {
        const Document* doc = find(id);
        if (doc == nullptr) throw Error(ErrorCode::UnknownDocument, "unknown document '" + std::string(id) + "'");
        return *doc;
    }

    bool contains(std::string_view id) const { return find(id) != nullptr; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    auto begin() const { return docs_.begin(); }
    auto end() const { return docs_.end(); }
    const std::vector<Document>& documents() const { return docs_; }

    friend bool operator==(const Corpus& a, const Corpus& b) { return a.docs_ == b.docs_; }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Label {
    std::string job_id;
    std::string resume_id;
    int y = 0;
};

enum class LabelValue { Accepted, Rejected, Unlabeled };

inline std::string_view to_string(LabelValue value) {
    switch (value) {
        case LabelValue::Accepted: return "accepted";
        case LabelValue::Rejected: return "rejected";
        case LabelValue::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

/// Candidate ids, most relevant first.
using Ordering = std::vector<std::string>;

inline bool is_permutation_of(const Ordering& ordering, const Ordering& reference) {
    if (ordering.size() != reference.size()) return false;
    std::vector<std::string> a = ordering;
    std::vector<std::string> b = reference;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

/// One job's retrieved candidates in retrieval order plus the labels joined onto them.
/// Candidates missing from `labels` are unlabeled and count as negatives.
struct RankedPool {
    std::string job_id;
    Ordering candidates;
    std::map<std::string, LabelValue> labels;

    LabelValue label_of(const std::string& id) const {
        auto it = labels.find(id);
        return it == labels.end() ? LabelValue::Unlabeled : it->second;
    }

    bool is_positive(const std::string& id) const { return label_of(id) == LabelValue::Accepted; }

    std::size_t positive_count() const {
        return static_cast<std::size_t>(std::count_if(candidates.begin(), candidates.end(),
                                                      [&](const std::string& id) { return is_positive(id); }));
    }

    /// Binary relevance aligned to `ordering`.
    std::vector<int> relevance(const Ordering& ordering) const {
        std::vector<int> rels;
        rels.reserve(ordering.size());
        for (const auto& id : ordering) rels.push_back(is_positive(id) ? 1 : 0);
        return rels;
    }

    /// Throws if the pool invariants are broken.
    void validate() const {
        if (candidates.empty()) throw Error(ErrorCode::EmptyPool, "pool for job '" + job_id + "' has no candidates");
        std::set<std::string> seen;
        for (const auto& id : candidates) {
            if (!seen.insert(id).second) {
                throw Error(ErrorCode::DuplicateId, "pool for job '" + job_id + "' repeats candidate '" + id + "'");
            }
        }
        for (const auto& [id, value] : labels) {
            if (seen.count(id) == 0) {
                throw Error(ErrorCode::UnknownCandidate, "label for '" + id + "' not in pool of job '" + job_id + "'");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Line-delimited JSON

/// Calls `on_record(line_number, record)` for each non-blank line. Parse failures
/// become MalformedRecord with the 1-based line number.
inline void read_jsonl(std::istream& in, const std::function<void(std::size_t, const json&)>& on_record) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw MalformedRecord(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!record.is_object()) throw MalformedRecord(line_no, "record is not a JSON object");
        on_record(line_no, record);
    }
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    return out;
}

inline void write_jsonl_line(std::ostream& out, const ordered_json& record) { out << record.dump() << '\n'; }

namespace detail {

inline const json& require(const json& record, const char* key, std::size_t line_no) {
    auto it = record.find(key);
    if (it == record.end()) throw MalformedRecord(line_no, std::string("missing \"") + key + "\"");
    return *it;
}

inline std::string require_string(const json& record, const char* key, std::size_t line_no) {
    const json& value = require(record, key, line_no);
    if (!value.is_string()) throw MalformedRecord(line_no, std::string("\"") + key + "\" must be a string");
    return value.get<std::string>();
}

inline std::vector<std::string> require_string_list(const json& record, const char* key, std::size_t line_no) {
    const json& value = require(record, key, line_no);
    if (!value.is_array()) throw MalformedRecord(line_no, std::string("\"") + key + "\" must be an array");
    std::vector<std::string> out;
    for (const auto& item : value) {
        if (!item.is_string()) throw MalformedRecord(line_no, std::string("\"") + key + "\" must hold strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

}  // namespace detail

/// Parses corpus records. When `kind` is set, records of the other kind are skipped
/// (ids stay unique across the whole file either way).
inline Corpus read_corpus(std::istream& in, std::optional<DocKind> kind = std::nullopt) {
    Corpus corpus;
    std::set<std::string> all_ids;
    read_jsonl(in, [&](std::size_t line_no, const json& record) {
        Document doc;
        doc.id = detail::require_string(record, "id", line_no);
        if (doc.id.empty()) throw MalformedRecord(line_no, "empty \"id\"");
        const auto kind_text = detail::require_string(record, "kind", line_no);
        auto parsed_kind = parse_doc_kind(kind_text);
        if (!parsed_kind) throw MalformedRecord(line_no, "unknown kind '" + kind_text + "'");
        doc.kind = *parsed_kind;
        const json& fields = detail::require(record, "fields", line_no);
        if (!fields.is_array()) throw MalformedRecord(line_no, "\"fields\" must be an array");
        for (const auto& field : fields) {
            if (!field.is_array() || field.size() != 2 || !field[0].is_string() || !field[1].is_string()) {
                throw MalformedRecord(line_no, "each field must be a [name, text] string pair");
            }
            doc.fields.emplace_back(field[0].get<std::string>(), field[1].get<std::string>());
        }
        if (!all_ids.insert(doc.id).second) {
            throw Error(ErrorCode::DuplicateId, "line " + std::to_string(line_no) + ": duplicate id '" + doc.id + "'");
        }
        if (!kind || *kind == doc.kind) corpus.add(std::move(doc));
    });
    return corpus;
}

inline Corpus load_corpus(const std::string& path, std::optional<DocKind> kind = std::nullopt) {
    auto in = open_input(path);
    return read_corpus(in, kind);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& doc : corpus) {
        ordered_json record;
        record["id"] = doc.id;
        record["kind"] = std::string(to_string(doc.kind));
        ordered_json fields = ordered_json::array();
        for (const auto& [name, text] : doc.fields) fields.push_back({name, text});
        record["fields"] = std::move(fields);
        write_jsonl_line(out, record);
    }
}

inline void write_corpus(const std::string& path, const Corpus& corpus) {
    auto out = open_output(path);
    write_corpus(out, corpus);
}

inline std::vector<Label> read_labels(std::istream& in) {
    std::vector<Label> labels;
    std::set<std::pair<std::string, std::string>> seen;
    read_jsonl(in, [&](std::size_t line_no, const json& record) {
        Label label;
        label.job_id = detail::require_string(record, "job_id", line_no);
        label.resume_id = detail::require_string(record, "resume_id", line_no);
        const json& y = detail::require(record, "y", line_no);
        if (!y.is_number_integer() || (y.get<int>() != 0 && y.get<int>() != 1)) {
            throw MalformedRecord(line_no, "\"y\" must be 0 or 1");
        }
        label.y = y.get<int>();
        if (!seen.emplace(label.job_id, label.resume_id).second) {
            throw Error(ErrorCode::DuplicateId, "line " + std::to_string(line_no) + ": duplicate label for (" +
                                                    label.job_id + ", " + label.resume_id + ")");
        }
        labels.push_back(std::move(label));
    });
    return labels;
}

inline std::vector<Label> load_labels(const std::string& path) {
    auto in = open_input(path);
    return read_labels(in);
}

inline void write_labels(std::ostream& out, const std::vector<Label>& labels) {
    for (const auto& label : labels) {
        ordered_json record;
        record["job_id"] = label.job_id;
        record["resume_id"] = label.resume_id;
        record["y"] = label.y;
        write_jsonl_line(out, record);
    }
}

/// (job id, resume id) -> y lookup.
class LabelIndex {
public:
    LabelIndex() = default;
    explicit LabelIndex(const std::vector<Label>& labels) {
        for (const auto& label : labels) table_[{label.job_id, label.resume_id}] = label.y;
    }

    LabelValue lookup(const std::string& job_id, const std::string& resume_id) const {
        auto it = table_.find({job_id, resume_id});
        if (it == table_.end()) return LabelValue::Unlabeled;
        return it->second == 1 ? LabelValue::Accepted : LabelValue::Rejected;
    }

    bool accepted(const std::string& job_id, const std::string& resume_id) const {
        return lookup(job_id, resume_id) == LabelValue::Accepted;
    }

private:
    std::map<std::pair<std::string, std::string>, int> table_;
};

/// Parses pool records and joins labels onto them. Candidate ids must resolve in
/// `corpus`; the job id is checked too when the corpus contains jobs.
inline std::vector<RankedPool> read_pools(std::istream& in, const std::vector<Label>& labels, const Corpus& corpus) {
    const LabelIndex index(labels);
    const bool corpus_has_jobs = std::any_of(corpus.begin(), corpus.end(),
                                             [](const Document& d) { return d.kind == DocKind::Job; });
    std::vector<RankedPool> pools;
    read_jsonl(in, [&](std::size_t line_no, const json& record) {
        RankedPool pool;
        pool.job_id = detail::require_string(record, "job_id", line_no);
        pool.candidates = detail::require_string_list(record, "candidates", line_no);
        if (pool.candidates.empty()) {
            throw Error(ErrorCode::EmptyPool, "line " + std::to_string(line_no) + ": job '" + pool.job_id +
                                                  "' has no candidates");
        }
        if (corpus_has_jobs && !corpus.contains(pool.job_id)) {
            throw Error(ErrorCode::UnknownDocument, "line " + std::to_string(line_no) + ": unknown job '" +
                                                        pool.job_id + "'");
        }
        std::set<std::string> seen;
        for (const auto& id : pool.candidates) {
            if (!corpus.contains(id)) {
                throw Error(ErrorCode::UnknownDocument, "line " + std::to_string(line_no) + ": unknown candidate '" +
                                                            id + "'");
            }
            if (!seen.insert(id).second) throw MalformedRecord(line_no, "duplicate candidate '" + id + "'");
            const LabelValue value = index.lookup(pool.job_id, id);
            if (value != LabelValue::Unlabeled) pool.labels[id] = value;
        }
        pools.push_back(std::move(pool));
    });
    return pools;
}

inline std::vector<RankedPool> load_pools(const std::string& path, const std::vector<Label>& labels,
                                          const Corpus& corpus) {
    auto in = open_input(path);
    return read_pools(in, labels, corpus);
}

inline void write_pools(std::ostream& out, const std::vector<RankedPool>& pools) {
    for (const auto& pool : pools) {
        ordered_json record;
        record["job_id"] = pool.job_id;
        record["candidates"] = pool.candidates;
        write_jsonl_line(out, record);
    }
}

}  // namespace confit
