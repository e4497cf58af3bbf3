#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "classifier.hpp"
#include "corpus.hpp"
#include "dvec.hpp"
#include "evaluation.hpp"
#include "experiment.hpp"
#include "lsi.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "selection.hpp"
#include "sidecar.hpp"
#include "text.hpp"

namespace alcs {

// Pool and test features of one fold for one representation. Row i of
// `pool` is pool document i of the split; likewise for `test`.
struct FoldFeatures {
    FeatureMatrix pool;
    FeatureMatrix test;
};

namespace detail {

// Maps a corpus-aligned embedding matrix onto document ids.
struct EmbeddingTable {
    FeatureMatrix matrix;
    std::unordered_map<DocId, std::size_t> row_of;

    FeatureMatrix rows_for(std::span<const DocId> ids) const {
        std::vector<std::size_t> rows;
        rows.reserve(ids.size());
        for (DocId id : ids) {
            auto it = row_of.find(id);
            if (it == row_of.end()) throw Error("embedding matrix has no row for document " + std::to_string(id));
            rows.push_back(it->second);
        }
        return matrix.select_rows(rows);
    }
};

inline EmbeddingTable load_embedding_table(const std::filesystem::path& path, std::size_t corpus_size) {
    EmbeddingTable t{load_embeddings(path), {}};
    if (t.matrix.row_ids().empty()) {
        if (t.matrix.n_rows() != corpus_size)
            throw Error(path.string() + ": " + std::to_string(t.matrix.n_rows()) + " rows for " +
                        std::to_string(corpus_size) + " documents and no .ids file");
        for (std::size_t r = 0; r < corpus_size; ++r) t.row_of[r] = r;
    } else {
        for (std::size_t r = 0; r < t.matrix.n_rows(); ++r) t.row_of[t.matrix.row_ids()[r]] = r;
    }
    return t;
}

// Lazily built representations for one fold. Everything is fitted on the
// pool side only and then applied to the test side.
class FoldContext {
public:
    FoldContext(const ExperimentSpec& spec, const Corpus& corpus, const FoldSplit& split, std::size_t fold,
                const std::map<std::string, EmbeddingTable>& tables)
        : spec_(spec), corpus_(corpus), split_(split), fold_(fold), tables_(tables) {}

    // Features that do not depend on the labeled selection.
    const FoldFeatures& features(const ReprSpec& repr) {
        const std::string key = repr.name();
        if (auto it = cache_.find(key); it != cache_.end()) {
            if (!it->second.error.empty()) throw Error(it->second.error);
            return it->second.features;
        }
        Entry entry;
        try {
            entry.features = build(repr);
        } catch (const SidecarError& e) {
            entry.error = std::string(e.what()) + (e.log().empty() ? "" : "; log: " + e.log());
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        auto& slot = cache_[key] = std::move(entry);
        if (!slot.error.empty()) throw Error(slot.error);
        return slot.features;
    }

    // Features from a label-consuming sidecar variant, tuned on `selected`
    // (indices into the pool).
    FoldFeatures labeled_features(const ReprSpec& repr, std::span<const std::size_t> selected,
                                  const std::string& cell_tag) {
        const auto& sc = *spec_.sidecar;
        std::vector<LabeledExample> labeled;
        for (auto row : selected) {
            const auto& doc = corpus_[split_.pool[row]];
            labeled.push_back({doc.id, corpus_.labels().name(doc.label)});
        }
        return run_sidecar(repr, sc.variants.at(repr.tag), std::move(labeled), cell_tag);
    }

    bool needs_labels(const ReprSpec& repr) const {
        return repr.kind == ReprKind::embedding && !spec_.embeddings.count(repr.tag) && spec_.sidecar &&
               variant_uses_labels(spec_.sidecar->variants.at(repr.tag));
    }

private:
    struct Entry {
        FoldFeatures features;
        std::string error;
    };

    FoldFeatures build(const ReprSpec& repr) {
        switch (repr.kind) {
        case ReprKind::bow: return bow();
        case ReprKind::lsi: {
            if (repr.dims == 0) return bow();
            const auto& b = bow();
            const LsiModel model = lsi_fit(b.pool, repr.dims);
            return {lsi_project(model, b.pool), lsi_project(model, b.test)};
        }
        case ReprKind::embedding: {
            if (auto it = tables_.find(repr.tag); it != tables_.end())
                return {it->second.rows_for(split_.pool), it->second.rows_for(split_.test)};
            return run_sidecar(repr, spec_.sidecar->variants.at(repr.tag), {}, "unlabeled");
        }
        }
        throw Error("unsupported representation");
    }

    const FoldFeatures& bow() {
        if (!bow_) {
            const auto pool_texts = corpus_.texts(split_.pool);
            const auto test_texts = corpus_.texts(split_.test);
            const Vocabulary vocab = fit_vocabulary(pool_texts, spec_.min_df);
            bow_ = FoldFeatures{tfidf(pool_texts, vocab), tfidf(test_texts, vocab)};
            bow_->pool.set_row_ids(split_.pool);
            bow_->test.set_row_ids(split_.test);
        }
        return *bow_;
    }

    FoldFeatures run_sidecar(const ReprSpec& repr, const std::string& variant, std::vector<LabeledExample> labeled,
                             const std::string& cell_tag) {
        const auto& sc = *spec_.sidecar;
        std::vector<SidecarText> texts;
        for (DocId id : split_.pool) texts.push_back({id, corpus_[id].text, "pool"});
        for (DocId id : split_.test) texts.push_back({id, corpus_[id].text, "test"});
        SidecarRequest req;
        req.variant = variant;
        req.model = sc.model;
        req.labeled = std::move(labeled);
        req.epochs_mlm = sc.epochs_mlm;
        req.epochs_atc = sc.epochs_atc;
        req.lr = sc.lr;
        req.seed = spec_.seed;
        const std::string stem = "fold" + std::to_string(fold_) + "_" + repr.tag + "_" + cell_tag;
        auto result = invoke_sidecar(sc.command, std::move(req), texts, sc.workdir, stem);
        std::vector<std::size_t> pool_rows(split_.pool.size()), test_rows(split_.test.size());
        std::iota(pool_rows.begin(), pool_rows.end(), std::size_t{0});
        std::iota(test_rows.begin(), test_rows.end(), split_.pool.size());
        return {result.embeddings.select_rows(pool_rows), result.embeddings.select_rows(test_rows)};
    }

    const ExperimentSpec& spec_;
    const Corpus& corpus_;
    const FoldSplit& split_;
    std::size_t fold_;
    const std::map<std::string, EmbeddingTable>& tables_;
    std::optional<FoldFeatures> bow_;
    std::map<std::string, Entry> cache_;
};

struct FoldOutput {
    std::vector<ReportCell> cells;
    std::vector<SelectionRecord> selections;
};

inline FoldOutput run_fold(const ExperimentSpec& spec, const Corpus& corpus, const FoldPlan& plan, std::size_t fold,
                           const std::map<std::string, EmbeddingTable>& tables) {
    const FoldSplit split = fold_split(corpus, plan, fold);
    FoldContext ctx(spec, corpus, split, fold, tables);
    const auto test_labels = corpus.labels_of(split.test);
    const std::size_t max_budget = spec.budgets.back();
    FoldOutput out;

    for (const auto& sel_repr : spec.selection_reprs) {
        SelectionRecord record{fold, sel_repr.name(), {}, false, nlohmann::json::array(), ""};
        std::optional<SelectionResult> selection;
        try {
            // Selection sees feature rows only; labels are read below, after S is fixed.
            const FeatureMatrix& pool = ctx.features(sel_repr).pool;
            SelectionConfig cfg{max_budget, spec.k, spec.dist_min.value_or(default_dist_min(sel_repr.effective_kind()))};
            selection = dwds_select(pool, cfg);
            record.selected.reserve(selection->selected.size());
            for (auto row : selection->selected) record.selected.push_back(split.pool[row]);
            record.exhausted = selection->exhausted;
            record.audit = to_json(*selection, split.pool)["audit"];
        } catch (const std::exception& e) {
            record.note = e.what();
        }

        for (std::size_t budget : spec.budgets) {
            // The scan order does not depend on the budget, so a smaller
            // budget's selection is a prefix of the largest one.
            std::vector<std::size_t> chosen;
            if (selection) {
                const std::size_t n = std::min(budget, selection->selected.size());
                chosen.assign(selection->selected.begin(), selection->selected.begin() + static_cast<std::ptrdiff_t>(n));
            }
            std::vector<ClassId> chosen_labels;
            for (auto row : chosen) chosen_labels.push_back(corpus[split.pool[row]].label);

            for (const auto& cls_repr : spec.classification_reprs) {
                ReportCell cell{fold, budget, sel_repr.name(), cls_repr.name(), CellStatus::ok, {}, chosen.size(), ""};
                if (!selection) {
                    cell.status = CellStatus::failed;
                    cell.note = "selection failed: " + record.note;
                    out.cells.push_back(std::move(cell));
                    continue;
                }
                try {
                    FoldFeatures tuned;
                    const FoldFeatures* feats;
                    if (ctx.needs_labels(cls_repr)) {
                        std::set<ClassId> distinct(chosen_labels.begin(), chosen_labels.end());
                        if (distinct.size() < 2) throw Error("degenerate labels: training set has fewer than 2 classes");
                        tuned = ctx.labeled_features(cls_repr, chosen,
                                                     sel_repr.name() + "_b" + std::to_string(budget));
                        feats = &tuned;
                    } else {
                        feats = &ctx.features(cls_repr);
                    }
                    const FeatureMatrix train_rows = feats->pool.select_rows(chosen);
                    const LinearModel model = train(train_rows, chosen_labels, spec.classifier);
                    cell.macro_f1 = macro_f1(test_labels, predict(model, feats->test));
                    if (chosen.size() < budget) {
                        cell.status = CellStatus::exhausted;
                        cell.note = "pool exhausted at " + std::to_string(chosen.size()) + " selections";
                    }
                } catch (const SidecarError& e) {
                    cell.status = CellStatus::failed;
                    cell.note = std::string(e.what()) + (e.log().empty() ? "" : "; log: " + e.log());
                } catch (const std::exception& e) {
                    cell.status = CellStatus::failed;
                    cell.note = e.what();
                }
                out.cells.push_back(std::move(cell));
            }
        }
        out.selections.push_back(std::move(record));
    }
    return out;
}

} // namespace detail

inline std::size_t resolved_fold_count(const ExperimentSpec& spec, const Corpus& corpus) {
    return spec.n_folds.value_or(default_fold_count(corpus.size()));
}

// Full cross-validated experiment: per fold, fit the selection
// representation on the pool, select with DWDS, reveal the labels of the
// selected documents, train the classifier on their classification
// features, and score macro-F1 on the held-out fold. Folds run on
// spec.threads workers; the report does not depend on the thread count.
inline ExperimentReport run_experiment(const ExperimentSpec& spec, const Corpus& corpus) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();
    const FoldPlan plan = make_folds(corpus, resolved_fold_count(spec, corpus), spec.seed);

    std::map<std::string, detail::EmbeddingTable> tables;
    for (const auto& [tag, path] : spec.embeddings) tables.emplace(tag, detail::load_embedding_table(path, corpus.size()));

    std::vector<detail::FoldOutput> folds(plan.n_folds);
    parallel_for(plan.n_folds, spec.threads,
                 [&](std::size_t f) { folds[f] = detail::run_fold(spec, corpus, plan, f, tables); });

    ExperimentReport report;
    report.dataset = spec.dataset;
    for (auto& f : folds) {
        std::move(f.cells.begin(), f.cells.end(), std::back_inserter(report.cells));
        std::move(f.selections.begin(), f.selections.end(), std::back_inserter(report.selections));
    }
    aggregate(report);
    report.meta = {{"n_folds", plan.n_folds},
                   {"seed", spec.seed},
                   {"threads", spec.threads},
                   {"corpus_size", corpus.size()},
                   {"n_classes", corpus.n_classes()},
                   {"elapsed_seconds",
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    return report;
}

inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
    return run_experiment(spec, load_corpus(spec.corpus_path, spec.corpus_format));
}

inline const std::vector<std::size_t>& default_lsi_sweep() {
    static const std::vector<std::size_t> dims{96, 192, 384, 768, 1536, 3072};
    return dims;
}

// Varies the classification representation over lsi(d) for each d plus
// lsi(all), the uncompressed bow; selection stays as in the spec.
inline ExperimentSpec lsi_sweep_spec(ExperimentSpec spec, std::span<const std::size_t> dims) {
    spec.classification_reprs.clear();
    for (auto d : dims) {
        if (d == 0) throw Error("LSI sweep dimensions must be positive");
        spec.classification_reprs.push_back(ReprSpec{ReprKind::lsi, d, {}});
    }
    spec.classification_reprs.push_back(ReprSpec{ReprKind::lsi, 0, {}});
    return spec;
}

inline ExperimentReport sweep_lsi_dims(const ExperimentSpec& spec, const Corpus& corpus,
                                       std::span<const std::size_t> dims) {
    return run_experiment(lsi_sweep_spec(spec, dims), corpus);
}

inline ExperimentReport sweep_lsi_dims(const ExperimentSpec& spec, std::span<const std::size_t> dims) {
    return sweep_lsi_dims(spec, load_corpus(spec.corpus_path, spec.corpus_format), dims);
}

} // namespace alcs
