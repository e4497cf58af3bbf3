#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "alcs.hpp"

using namespace alcs;
namespace fs = std::filesystem;

namespace {

Corpus synthetic(std::size_t n_docs = 400) {
    std::ifstream in(ALCS_DATA_DIR "/synthetic400.jsonl");
    std::ostringstream out;
    std::string line;
    for (std::size_t i = 0; i < n_docs && std::getline(in, line); ++i) out << line << '\n';
    std::istringstream text(out.str());
    return read_corpus(text, CorpusFormat::jsonl);
}

ExperimentSpec base_spec() {
    ExperimentSpec spec;
    spec.dataset = "synthetic";
    spec.n_folds = 5;
    spec.budgets = {8, 16, 32};
    return spec;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("alcs_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

SidecarConfig fake_sidecar(const fs::path& workdir, const std::string& flags = "") {
    SidecarConfig sc;
    sc.command = "python3 " ALCS_FIXTURE_DIR "/fake_sidecar.py" + (flags.empty() ? "" : " " + flags);
    sc.workdir = workdir;
    return sc;
}

const ReportCell& find_cell(const ExperimentReport& r, std::size_t fold, std::size_t budget, const std::string& sel,
                            const std::string& cls) {
    for (const auto& c : r.cells)
        if (c.fold == fold && c.budget == budget && c.selection_repr == sel && c.classification_repr == cls) return c;
    throw std::runtime_error("cell not found");
}

} // namespace

TEST(ReprParsing, Forms) {
    EXPECT_EQ(parse_repr("bow").kind, ReprKind::bow);
    EXPECT_EQ(parse_repr("lsi(96)").dims, 96u);
    EXPECT_EQ(parse_repr("lsi:768").dims, 768u);
    EXPECT_EQ(parse_repr("lsi(all)").dims, 0u);
    EXPECT_EQ(parse_repr("lsi(all)").effective_kind(), ReprKind::bow);
    EXPECT_EQ(parse_repr("embedding(sbert)").tag, "sbert");
    EXPECT_EQ(parse_repr("embedding:x").name(), "embedding(x)");
    EXPECT_THROW(parse_repr("lsi(0)"), Error);
    EXPECT_THROW(parse_repr("tfidf"), Error);
    EXPECT_THROW(parse_repr("embedding()"), Error);
}

TEST(SpecParsing, DefaultsAndValidation) {
    const auto spec = parse_experiment_spec(nlohmann::json::parse(R"j({"corpus": "c.jsonl"})j"), "/base");
    EXPECT_EQ(spec.corpus_path, fs::path("/base/c.jsonl"));
    EXPECT_EQ(spec.budgets, (std::vector<std::size_t>{50, 100, 200, 400, 800, 1600}));
    EXPECT_EQ(spec.k, 10u);
    EXPECT_FALSE(spec.dist_min);

    EXPECT_THROW(parse_experiment_spec(nlohmann::json::parse(R"j({"corpus": "c", "budgets": [8, 8]})j")), Error);
    EXPECT_THROW(parse_experiment_spec(nlohmann::json::parse(R"j({"corpus": "c", "budgets": [16, 8]})j")), Error);
    EXPECT_THROW(parse_experiment_spec(nlohmann::json::parse(R"j({"corpus": "c", "selection_repr": "embedding(x)"})j")),
                 Error);
    EXPECT_THROW(parse_experiment_spec(nlohmann::json::parse(R"j({"budgets": [1]})j")), Error);
    EXPECT_THROW(parse_experiment_spec(nlohmann::json::parse(
                     R"j({"corpus": "c", "classification_repr": "embedding(x)",
                         "sidecar": {"command": "run", "variants": {"x": "bogus"}}})j")),
                 Error);
    EXPECT_THROW(parse_experiment_spec(nlohmann::json::parse(
                     R"j({"corpus": "c", "selection_repr": "embedding(x)",
                         "sidecar": {"command": "run", "variants": {"x": "dotcal"}}})j")),
                 Error);
}

TEST(SpecParsing, BundledSpecLoads) {
    const auto spec = load_experiment_spec(ALCS_DATA_DIR "/synthetic400.spec.json");
    EXPECT_EQ(spec.budgets, (std::vector<std::size_t>{8, 16, 32}));
    EXPECT_TRUE(fs::exists(spec.corpus_path));
    EXPECT_TRUE(fs::exists(spec.embeddings.at("embed16")));
}

TEST(Experiment, EveryCellPresentAndCsvRowsAccountedFor) {
    auto spec = base_spec();
    spec.selection_reprs = {parse_repr("bow"), parse_repr("lsi(16)")};
    spec.classification_reprs = {parse_repr("bow"), parse_repr("lsi(24)")};
    const auto report = run_experiment(spec, synthetic(200));
    EXPECT_EQ(report.cells.size(), 5u * 3 * 2 * 2);
    EXPECT_EQ(report.aggregates.size(), 3u * 2 * 2);
    std::set<std::tuple<std::size_t, std::size_t, std::string, std::string>> keys;
    for (const auto& c : report.cells) keys.insert(c.key());
    EXPECT_EQ(keys.size(), report.cells.size());

    const auto csv = report_to_csv(report);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, report_csv_header);
    std::size_t cells = 0, aggs = 0;
    while (std::getline(in, line)) {
        cells += line.find(",cell,") != std::string::npos;
        aggs += line.find(",aggregate,") != std::string::npos;
    }
    EXPECT_EQ(cells, report.cells.size());
    EXPECT_EQ(aggs, report.aggregates.size());
}

TEST(Experiment, AggregatesRecomputableAndJsonRoundTrip) {
    auto spec = base_spec();
    spec.classification_reprs = {parse_repr("bow"), parse_repr("lsi(8)")};
    const auto report = run_experiment(spec, synthetic(200));

    ExperimentReport again;
    again.dataset = report.dataset;
    again.cells = report.cells;
    aggregate(again);
    EXPECT_EQ(again.aggregates, report.aggregates);
    EXPECT_EQ(again.tests, report.tests);

    const auto back = report_from_json(report_to_json(report));
    EXPECT_EQ(back.cells, report.cells);
    EXPECT_EQ(back.aggregates, report.aggregates);
    EXPECT_EQ(back.tests, report.tests);
    EXPECT_EQ(back.selections, report.selections);
    EXPECT_EQ(report_to_csv(back), report_to_csv(report));
}

TEST(Aggregate, WilcoxonFlagsDominatingConfiguration) {
    ExperimentReport r;
    r.dataset = "toy";
    for (std::size_t f = 0; f < 6; ++f) {
        r.cells.push_back({f, 10, "bow", "bow", CellStatus::ok, 0.5 + 0.01 * static_cast<double>(f), 10, ""});
        r.cells.push_back({f, 10, "bow", "lsi(8)", CellStatus::ok, 0.6 + 0.02 * static_cast<double>(f), 10, ""});
        r.cells.push_back({f, 10, "bow", "lsi(4)", CellStatus::failed, std::nullopt, 10, "boom"});
    }
    aggregate(r);
    ASSERT_EQ(r.tests.size(), 1u);
    EXPECT_EQ(r.tests[0].p_value, 0.03125);
    EXPECT_TRUE(r.tests[0].significant);
    for (const auto& a : r.aggregates) {
        if (a.classification_repr == "lsi(4)") {
            EXPECT_EQ(a.n_folds, 0u);
            EXPECT_FALSE(a.mean);
        } else {
            EXPECT_EQ(a.significant_vs.size(), 1u);
        }
    }
    EXPECT_NE(report_to_csv(r).find("bow/lsi(8)"), std::string::npos);
}

TEST(Experiment, IndependentOfThreadCount) {
    auto spec = base_spec();
    spec.classification_reprs = {parse_repr("bow"), parse_repr("lsi(8)")};
    const auto corpus = synthetic(200);
    spec.threads = 1;
    const auto one = report_to_csv(run_experiment(spec, corpus));
    spec.threads = 3;
    EXPECT_EQ(report_to_csv(run_experiment(spec, corpus)), one);
}

TEST(Experiment, SelectionsAreBudgetPrefixes) {
    auto spec = base_spec();
    spec.dist_min = 0.3;
    const auto corpus = synthetic(200);
    const auto report = run_experiment(spec, corpus);
    const auto plan = make_folds(corpus, 5, spec.seed);
    for (const auto& rec : report.selections) {
        const auto split = fold_split(corpus, plan, rec.fold);
        const auto texts = corpus.texts(split.pool);
        const auto pool = tfidf(texts, fit_vocabulary(texts, spec.min_df));
        for (std::size_t b : spec.budgets) {
            const auto sel = dwds_select(pool, {b, spec.k, 0.3}).selected;
            ASSERT_LE(sel.size(), rec.selected.size());
            for (std::size_t i = 0; i < sel.size(); ++i) EXPECT_EQ(split.pool[sel[i]], rec.selected[i]);
            EXPECT_EQ(find_cell(report, rec.fold, b, "bow", "bow").n_selected, sel.size());
        }
    }
}

TEST(Experiment, WholePoolBudgetEqualsFullySupervisedFold) {
    auto spec = base_spec();
    spec.budgets = {1000};
    spec.dist_min = 0.0;
    const auto corpus = synthetic(100);
    const auto report = run_experiment(spec, corpus);
    const auto plan = make_folds(corpus, 5, spec.seed);
    for (std::size_t f = 0; f < 5; ++f) {
        const auto split = fold_split(corpus, plan, f);
        const auto& cell = find_cell(report, f, 1000, "bow", "bow");
        EXPECT_EQ(cell.n_selected, split.pool.size());
        EXPECT_EQ(cell.status, CellStatus::exhausted);

        const auto pool_texts = corpus.texts(split.pool);
        const auto vocab = fit_vocabulary(pool_texts, spec.min_df);
        const auto pool = tfidf(pool_texts, vocab);
        // Training order follows the selection; the same rows in any order
        // give the same model only up to solver path, so reuse that order.
        const auto& rec = report.selections[f];
        std::vector<std::size_t> rows;
        for (DocId id : rec.selected)
            rows.push_back(static_cast<std::size_t>(std::lower_bound(split.pool.begin(), split.pool.end(), id) -
                                                    split.pool.begin()));
        std::set<std::size_t> distinct(rows.begin(), rows.end());
        EXPECT_EQ(distinct.size(), split.pool.size());
        const auto model = train(pool.select_rows(rows), corpus.labels_of(rec.selected), spec.classifier);
        const double f1 = macro_f1(corpus.labels_of(split.test), predict(model, tfidf(corpus.texts(split.test), vocab)));
        EXPECT_NEAR(*cell.macro_f1, f1, 1e-12);
    }
}

TEST(Experiment, SingleClassSelectionIsRecordedFailure) {
    auto spec = base_spec();
    spec.budgets = {1, 8};
    const auto report = run_experiment(spec, synthetic(200));
    for (const auto& c : report.cells) {
        if (c.budget == 1) {
            EXPECT_EQ(c.status, CellStatus::failed);
            EXPECT_NE(c.note.find("degenerate labels"), std::string::npos);
            EXPECT_FALSE(c.macro_f1);
        } else {
            EXPECT_TRUE(c.macro_f1);
        }
    }
}

TEST(Experiment, EmbeddingFixture) {
    auto spec = base_spec();
    spec.embeddings["e16"] = ALCS_DATA_DIR "/synthetic400_embed16.dvec";
    spec.selection_reprs = {parse_repr("embedding(e16)")};
    spec.classification_reprs = {parse_repr("embedding(e16)")};
    const auto report = run_experiment(spec, synthetic());
    for (const auto& c : report.cells) {
        EXPECT_EQ(c.status, CellStatus::ok) << c.note;
        EXPECT_EQ(c.n_selected, c.budget);
    }

    spec.embeddings["e16"] = ALCS_FIXTURE_DIR "/missing.dvec";
    EXPECT_THROW(run_experiment(spec, synthetic()), Error);
}

TEST(LsiSweep, FullRankMatchesUncompressed) {
    auto spec = base_spec();
    spec.budgets = {16, 32};
    spec.dist_min = 0.3;
    const auto corpus = synthetic(200);
    // Every fold keeps the whole vocabulary, whose size is the rank of each pool matrix.
    const auto all_texts = corpus.texts([&] {
        std::vector<DocId> ids(corpus.size());
        std::iota(ids.begin(), ids.end(), DocId{0});
        return ids;
    }());
    const std::size_t rank = fit_vocabulary(all_texts, spec.min_df).size();
    const std::vector<std::size_t> dims{4, rank};
    const auto report = sweep_lsi_dims(spec, corpus, dims);
    const std::string full = "lsi(" + std::to_string(rank) + ")";
    std::size_t compared = 0;
    for (const auto& c : report.cells) {
        if (c.classification_repr != full) continue;
        ASSERT_EQ(c.status, CellStatus::ok) << c.note;
        const auto& raw = find_cell(report, c.fold, c.budget, c.selection_repr, "lsi(all)");
        EXPECT_NEAR(*c.macro_f1, *raw.macro_f1, 1e-6);
        ++compared;
    }
    EXPECT_EQ(compared, 10u);
    EXPECT_EQ(report.aggregates.size(), 2u * 3);
}

TEST(LsiSweep, DimensionBeyondRankFailsOnlyItsCells) {
    auto spec = base_spec();
    const std::vector<std::size_t> dims{8, 100000};
    const auto report = sweep_lsi_dims(spec, synthetic(120), dims);
    std::size_t failed = 0;
    for (const auto& c : report.cells) {
        if (c.classification_repr == "lsi(100000)") {
            EXPECT_EQ(c.status, CellStatus::failed);
            EXPECT_NE(c.note.find("d=100000"), std::string::npos);
            ++failed;
        } else {
            EXPECT_TRUE(c.macro_f1) << c.note;
        }
    }
    EXPECT_EQ(failed, 15u);
    EXPECT_EQ(default_lsi_sweep(), (std::vector<std::size_t>{96, 192, 384, 768, 1536, 3072}));
}

TEST(Sidecar, UnlabeledAndLabeledVariants) {
    const auto work = scratch("variants");
    auto spec = base_spec();
    spec.budgets = {20};
    spec.dist_min = 0.3;
    spec.sidecar = fake_sidecar(work);
    spec.sidecar->variants = {{"plain", "mlm_only"}, {"tuned", "dotcal"}};
    spec.classification_reprs = {parse_repr("embedding(plain)"), parse_repr("embedding(tuned)")};
    spec.selection_reprs = {parse_repr("bow"), parse_repr("embedding(plain)")};
    const auto corpus = synthetic(200);
    const auto report = run_experiment(spec, corpus);
    for (const auto& c : report.cells) EXPECT_TRUE(c.macro_f1) << c.note;

    // The label-consuming variant saw exactly the selected ids and their labels.
    const auto reply_path = work / "fold0_tuned_bow_b20.request.json.done";
    ASSERT_TRUE(fs::exists(reply_path));
    std::ifstream in(reply_path);
    const auto reply = nlohmann::json::parse(in);
    const auto& rec = report.selections[0];
    ASSERT_EQ(rec.selection_repr, "bow");
    ASSERT_EQ(reply["labeled"].size(), 20u);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(reply["labeled"][i]["id"].get<DocId>(), rec.selected[i]);
        EXPECT_EQ(reply["labeled"][i]["label"], corpus.labels().name(corpus[rec.selected[i]].label));
    }
    EXPECT_EQ(reply["roles"], nlohmann::json({"pool", "test"}));

    // The unlabeled variant was asked without labels.
    std::ifstream plain(work / "fold0_plain_unlabeled.request.json");
    EXPECT_TRUE(nlohmann::json::parse(plain)["labeled"].empty());
}

TEST(Sidecar, DirectInvocationShapeContract) {
    const auto work = scratch("direct");
    std::vector<SidecarText> texts{{5, "alpha beta", "pool"}, {9, "gamma", "pool"}, {11, "beta beta", "test"}};
    SidecarRequest req;
    req.variant = "none";
    req.model = "toy";
    const auto sc = fake_sidecar(work);
    const auto result = invoke_sidecar(sc.command, req, texts, work, "direct");
    EXPECT_EQ(result.embeddings.n_rows(), 3u);
    EXPECT_EQ(result.embeddings.n_cols(), 8u);
    EXPECT_EQ(result.embeddings.row_ids(), (std::vector<DocId>{5, 9, 11}));
    EXPECT_EQ(result.reply["n_rows"], 3);

    req.variant = "unheard_of";
    try {
        invoke_sidecar(sc.command, req, texts, work, "unknown");
        FAIL() << "expected a sidecar error";
    } catch (const SidecarError& e) {
        EXPECT_NE(e.log().find("unknown variant"), std::string::npos);
    }

    req.variant = "none";
    EXPECT_THROW(invoke_sidecar(fake_sidecar(work, "--wrong-rows").command, req, texts, work, "rows"), SidecarError);
    req.labeled = {{5, "x"}};
    EXPECT_THROW(invoke_sidecar(fake_sidecar(work, "--no-echo").command, req, texts, work, "echo"), SidecarError);
}

TEST(Sidecar, FailuresBecomeFailedCells) {
    const auto work = scratch("failing");
    auto spec = base_spec();
    spec.budgets = {8};
    spec.sidecar = fake_sidecar(work, "--fail");
    spec.sidecar->variants = {{"e", "none"}};
    spec.classification_reprs = {parse_repr("bow"), parse_repr("embedding(e)")};
    const auto report = run_experiment(spec, synthetic(100));
    for (const auto& c : report.cells) {
        if (c.classification_repr == "bow") {
            EXPECT_EQ(c.status, CellStatus::ok);
        } else {
            EXPECT_EQ(c.status, CellStatus::failed);
            EXPECT_NE(c.note.find("simulated failure"), std::string::npos);
        }
    }
}

TEST(Experiment, SyntheticCorpusIsLearnableFromEightLabels) {
    auto spec = base_spec();
    spec.budgets = {8};
    const auto report = run_experiment(spec, synthetic());
    ASSERT_EQ(report.aggregates.size(), 1u);
    EXPECT_GE(*report.aggregates[0].mean, 0.95);
}
