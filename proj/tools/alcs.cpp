// alcs: cold-start active-learning experiment driver.
//
//   alcs run       --spec spec.json --out report.csv [--json report.json] [--threads N]
//   alcs sweep-lsi --spec spec.json --dims 96,192,384,768 --out report.csv
//   alcs select    --repr bow --budget 200 --k 10 --dist-min 0.7 --corpus data.jsonl --out selection.json
//   alcs represent --kind lsi --dims 96 --corpus data.jsonl --out m.dvec

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alcs.hpp"

namespace {

alcs::ExperimentSpec load_spec(const std::string& path, std::optional<unsigned> threads) {
    auto spec = alcs::load_experiment_spec(path);
    if (threads) spec.threads = *threads;
    return spec;
}

void write_reports(const alcs::ExperimentReport& report, const std::string& csv, const std::string& json) {
    alcs::emit_report(report, csv, alcs::ReportFormat::csv);
    if (!json.empty()) alcs::emit_report(report, json, alcs::ReportFormat::json);
    std::size_t failed = 0;
    for (const auto& c : report.cells) failed += c.status == alcs::CellStatus::failed;
    std::cerr << report.cells.size() << " cells (" << failed << " failed) written to " << csv << '\n';
}

// Whole-corpus features for a representation (no folds: the corpus is the pool).
alcs::FeatureMatrix corpus_features(const alcs::Corpus& corpus, const alcs::ReprSpec& repr, std::size_t min_df,
                                    const std::string& embeddings) {
    std::vector<alcs::DocId> ids(corpus.size());
    std::iota(ids.begin(), ids.end(), alcs::DocId{0});
    if (repr.kind == alcs::ReprKind::embedding) {
        if (embeddings.empty()) throw alcs::Error("--embeddings is required for an embedding representation");
        auto m = alcs::load_embeddings(embeddings);
        if (m.row_ids().empty() && m.n_rows() != corpus.size())
            throw alcs::Error("embedding matrix rows do not match the corpus");
        if (m.row_ids().empty()) m.set_row_ids(ids);
        return m;
    }
    const auto texts = corpus.texts(ids);
    const auto vocab = alcs::fit_vocabulary(texts, min_df);
    alcs::TfidfAudit audit;
    auto bow = alcs::tfidf(texts, vocab, &audit);
    bow.set_row_ids(ids);
    if (!audit.empty_rows.empty())
        std::cerr << audit.empty_rows.size() << " documents have no in-vocabulary terms\n";
    if (repr.kind == alcs::ReprKind::bow || repr.dims == 0) return bow;
    const auto model = alcs::lsi_fit(bow, repr.dims);
    std::cerr << "LSI d=" << repr.dims << " converged in " << model.iterations << " iterations\n";
    return alcs::lsi_project(model, bow);
}

std::vector<std::size_t> parse_dims(const std::string& text) {
    std::vector<std::size_t> dims;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        dims.push_back(std::stoul(item));
    }
    if (dims.empty()) throw alcs::Error("--dims needs at least one value");
    return dims;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cold-start active learning experiments: DWDS selection, BoW/LSI/embedding representations, "
                 "linear SVM, macro-F1 evaluation"};
    app.require_subcommand(1);

    std::string spec_path, out_path, json_path, dims_text = "96,192,384,768,1536,3072";
    std::optional<unsigned> threads;

    auto* run = app.add_subcommand("run", "Run a cross-validated experiment from a JSON spec");
    run->add_option("--spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_path, "CSV report path")->required();
    run->add_option("--json", json_path, "Optional full JSON report path");
    run->add_option("--threads", threads, "Worker threads (overrides the spec)");

    auto* sweep = app.add_subcommand("sweep-lsi", "Sweep LSI dimensions for the classification stage");
    sweep->add_option("--spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--dims", dims_text, "Comma-separated latent dimensions")->capture_default_str();
    sweep->add_option("--out", out_path, "CSV report path")->required();
    sweep->add_option("--json", json_path, "Optional full JSON report path");
    sweep->add_option("--threads", threads, "Worker threads (overrides the spec)");

    std::string corpus_path, format = "jsonl", repr_text = "bow", embeddings_path;
    std::size_t budget = 200, k = 10, min_df = alcs::default_min_df, lsi_dims = 768;
    std::optional<double> dist_min;

    auto* select = app.add_subcommand("select", "Select instances from a whole corpus with DWDS");
    select->add_option("--repr", repr_text, "bow, lsi(d), or embedding(tag)")->capture_default_str();
    select->add_option("--budget", budget, "Maximum number of instances")->capture_default_str();
    select->add_option("--k", k, "Neighbourhood size for density")->capture_default_str();
    select->add_option("--dist-min", dist_min, "Diversity threshold (default 0.7 bow/lsi, 0.01 embeddings)");
    select->add_option("--corpus", corpus_path, "Corpus file")->required()->check(CLI::ExistingFile);
    select->add_option("--format", format, "jsonl or tsv")->capture_default_str();
    select->add_option("--embeddings", embeddings_path, "DVEC matrix for embedding representations");
    select->add_option("--min-df", min_df, "Minimum document frequency")->capture_default_str();
    select->add_option("--threads", threads, "Threads for density computation");
    select->add_option("--out", out_path, "Selection JSON path")->required();

    std::string kind = "bow";
    auto* represent = app.add_subcommand("represent", "Fit a representation on a corpus and write it as DVEC");
    represent->add_option("--kind", kind, "bow or lsi")->check(CLI::IsMember({"bow", "lsi"}))->capture_default_str();
    represent->add_option("--dims", lsi_dims, "LSI latent dimensions")->capture_default_str();
    represent->add_option("--corpus", corpus_path, "Corpus file")->required()->check(CLI::ExistingFile);
    represent->add_option("--format", format, "jsonl or tsv")->capture_default_str();
    represent->add_option("--min-df", min_df, "Minimum document frequency")->capture_default_str();
    represent->add_option("--out", out_path, "DVEC output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto spec = load_spec(spec_path, threads);
            write_reports(alcs::run_experiment(spec), out_path, json_path);
        } else if (*sweep) {
            const auto spec = load_spec(spec_path, threads);
            const auto dims = parse_dims(dims_text);
            write_reports(alcs::sweep_lsi_dims(spec, dims), out_path, json_path);
        } else if (*select) {
            const auto corpus = alcs::load_corpus(corpus_path, alcs::parse_corpus_format(format));
            const auto repr = alcs::parse_repr(repr_text);
            const auto features = corpus_features(corpus, repr, min_df, embeddings_path);
            alcs::SelectionConfig cfg{budget, k, dist_min.value_or(alcs::default_dist_min(repr.effective_kind()))};
            const auto result = alcs::dwds_select(features, cfg, threads.value_or(1));
            auto j = alcs::to_json(result, features.row_ids());
            std::ofstream out(out_path, std::ios::trunc);
            out << j.dump(2) << '\n';
            if (!out) throw alcs::Error("cannot write " + out_path);
            std::cerr << result.selected.size() << " instances selected"
                      << (result.exhausted ? " (pool exhausted before budget)" : "") << '\n';
        } else if (*represent) {
            const auto corpus = alcs::load_corpus(corpus_path, alcs::parse_corpus_format(format));
            const auto repr = kind == "lsi" ? alcs::ReprSpec{alcs::ReprKind::lsi, lsi_dims, {}} : alcs::ReprSpec{};
            const auto features = corpus_features(corpus, repr, min_df, {});
            alcs::save_embeddings(features, out_path);
            std::cerr << features.n_rows() << " x " << features.n_cols() << " written to " << out_path << '\n';
        }
    } catch (const alcs::SidecarError& e) {
        std::cerr << "error: " << e.what() << '\n' << e.log() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
