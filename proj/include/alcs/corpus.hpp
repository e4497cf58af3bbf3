#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "random.hpp"

namespace alcs {

using DocId = std::size_t;
using ClassId = int;

struct Document {
    DocId id = 0;
    std::string text;
    ClassId label = 0;
};

enum class CorpusFormat { jsonl, tsv };

inline CorpusFormat parse_corpus_format(std::string_view name) {
    if (name == "jsonl") return CorpusFormat::jsonl;
    if (name == "tsv") return CorpusFormat::tsv;
    throw Error("unknown corpus format '" + std::string(name) + "' (expected jsonl or tsv)");
}

// Bijection between class strings and dense ids, in first-appearance order.
class LabelTable {
public:
    ClassId intern(const std::string& name) {
        auto [it, inserted] = ids_.try_emplace(name, static_cast<ClassId>(names_.size()));
        if (inserted) names_.push_back(name);
        return it->second;
    }

    ClassId id(const std::string& name) const {
        auto it = ids_.find(name);
        if (it == ids_.end()) throw Error("unknown class label '" + name + "'");
        return it->second;
    }

    const std::string& name(ClassId id) const { return names_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, ClassId> ids_;
};

class Corpus {
public:
    Corpus(std::vector<Document> documents, LabelTable labels)
        : documents_(std::move(documents)), labels_(std::move(labels)) {
        if (documents_.empty()) throw Error("empty corpus");
        if (labels_.size() < 2)
            throw Error("corpus has fewer than 2 classes (" + std::to_string(labels_.size()) + ")");
        for (std::size_t i = 0; i < documents_.size(); ++i) {
            if (documents_[i].id != i) throw Error("document ids must be dense and 0-based");
            if (documents_[i].label < 0 || static_cast<std::size_t>(documents_[i].label) >= labels_.size())
                throw Error("document " + std::to_string(i) + " has a label outside the label table");
        }
    }

    std::size_t size() const noexcept { return documents_.size(); }
    std::size_t n_classes() const noexcept { return labels_.size(); }
    const Document& operator[](DocId id) const { return documents_.at(id); }
    const std::vector<Document>& documents() const noexcept { return documents_; }
    const LabelTable& labels() const noexcept { return labels_; }

    std::vector<std::string> texts(std::span<const DocId> ids) const {
        std::vector<std::string> out;
        out.reserve(ids.size());
        for (DocId id : ids) out.push_back(documents_.at(id).text);
        return out;
    }

    std::vector<ClassId> labels_of(std::span<const DocId> ids) const {
        std::vector<ClassId> out;
        out.reserve(ids.size());
        for (DocId id : ids) out.push_back(documents_.at(id).label);
        return out;
    }

private:
    std::vector<Document> documents_;
    LabelTable labels_;
};

namespace detail {

inline bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

} // namespace detail

inline Corpus read_corpus(std::istream& in, CorpusFormat format) {
    std::vector<Document> docs;
    LabelTable labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::blank(line)) continue;

        std::string text, label;
        if (format == CorpusFormat::jsonl) {
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
            }
            if (!rec.is_object()) throw ParseError("record is not a JSON object", lineno);
            auto text_it = rec.find("text");
            auto label_it = rec.find("label");
            if (text_it == rec.end() || !text_it->is_string()) throw ParseError("missing string field \"text\"", lineno);
            if (label_it == rec.end() || !label_it->is_string()) throw ParseError("missing string field \"label\"", lineno);
            text = text_it->get<std::string>();
            label = label_it->get<std::string>();
        } else {
            const auto tab = line.find('\t');
            if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
                throw ParseError("expected exactly two tab-separated columns", lineno);
            text = line.substr(0, tab);
            label = line.substr(tab + 1);
        }
        if (detail::blank(text)) throw ParseError("empty text", lineno);
        if (label.empty()) throw ParseError("empty label", lineno);

        const DocId id = docs.size();
        docs.push_back(Document{id, std::move(text), labels.intern(label)});
    }
    if (docs.empty()) throw Error("empty corpus: no records");
    return Corpus(std::move(docs), std::move(labels));
}

inline Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file " + path.string());
    return read_corpus(in, format);
}

// Stratified fold assignment. Each class's members are shuffled with the
// seeded generator (classes in id order, one generator for the whole plan)
// and dealt round-robin; the dealing position carries over from one class
// to the next, so fold sizes differ by at most one.
struct FoldPlan {
    std::size_t n_folds = 0;
    std::vector<std::size_t> assignments;
    std::uint64_t seed = 0;

    bool operator==(const FoldPlan&) const = default;
};

inline FoldPlan make_folds(const Corpus& corpus, std::size_t n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw Error("n_folds must be at least 2");
    if (corpus.size() < n_folds)
        throw Error("n_folds (" + std::to_string(n_folds) + ") exceeds corpus size (" + std::to_string(corpus.size()) + ")");

    std::vector<std::vector<DocId>> members(corpus.n_classes());
    for (const auto& doc : corpus.documents()) members[static_cast<std::size_t>(doc.label)].push_back(doc.id);

    FoldPlan plan{n_folds, std::vector<std::size_t>(corpus.size()), seed};
    Rng rng(seed);
    std::size_t next_fold = 0;
    for (auto& ids : members) {
        rng.shuffle(std::span<DocId>(ids));
        for (DocId id : ids) {
            plan.assignments[id] = next_fold;
            next_fold = (next_fold + 1) % n_folds;
        }
    }
    return plan;
}

struct FoldSplit {
    std::vector<DocId> pool;
    std::vector<DocId> test;
};

inline FoldSplit fold_split(const Corpus& corpus, const FoldPlan& plan, std::size_t fold) {
    if (fold >= plan.n_folds)
        throw Error("fold " + std::to_string(fold) + " out of range for a " + std::to_string(plan.n_folds) + "-fold plan");
    if (plan.assignments.size() != corpus.size()) throw Error("fold plan does not match corpus size");
    FoldSplit split;
    for (DocId id = 0; id < corpus.size(); ++id)
        (plan.assignments[id] == fold ? split.test : split.pool).push_back(id);
    return split;
}

// Folds used when a spec does not say: 10, or 5 for corpora above 100k documents.
inline std::size_t default_fold_count(std::size_t corpus_size) { return corpus_size > 100000 ? 5 : 10; }

} // namespace alcs
