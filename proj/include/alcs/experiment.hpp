#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "classifier.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "feature_matrix.hpp"
#include "text.hpp"

namespace alcs {

// A representation reference: bow, lsi(d), lsi(all) (= uncompressed bow),
// or embedding(tag).
struct ReprSpec {
    ReprKind kind = ReprKind::bow;
    std::size_t dims = 0;  // lsi only; 0 means all dimensions (raw bow)
    std::string tag;       // embedding only

    std::string name() const {
        switch (kind) {
        case ReprKind::bow: return "bow";
        case ReprKind::lsi: return dims == 0 ? "lsi(all)" : "lsi(" + std::to_string(dims) + ")";
        case ReprKind::embedding: return "embedding(" + tag + ")";
        }
        return "?";
    }

    // Kind of the matrix this representation actually produces.
    ReprKind effective_kind() const { return kind == ReprKind::lsi && dims == 0 ? ReprKind::bow : kind; }

    bool operator==(const ReprSpec&) const = default;
};

// Accepts "bow", "lsi(96)", "lsi:96", "lsi(all)", "embedding(tag)", "embedding:tag".
inline ReprSpec parse_repr(std::string_view text) {
    std::string_view head = text, arg;
    bool has_arg = false;
    if (auto open = text.find('('); open != std::string_view::npos) {
        if (text.back() != ')') throw Error("bad representation '" + std::string(text) + "'");
        head = text.substr(0, open);
        arg = text.substr(open + 1, text.size() - open - 2);
        has_arg = true;
    } else if (auto colon = text.find(':'); colon != std::string_view::npos) {
        head = text.substr(0, colon);
        arg = text.substr(colon + 1);
        has_arg = true;
    }
    ReprSpec r;
    if (head == "bow" && !has_arg) {
        r.kind = ReprKind::bow;
    } else if (head == "lsi" && has_arg) {
        r.kind = ReprKind::lsi;
        if (arg != "all") {
            std::size_t used = 0;
            try {
                r.dims = std::stoul(std::string(arg), &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != arg.size() || r.dims == 0) throw Error("bad LSI dimension in '" + std::string(text) + "'");
        }
    } else if (head == "embedding" && has_arg && !arg.empty()) {
        r.kind = ReprKind::embedding;
        r.tag = std::string(arg);
    } else {
        throw Error("bad representation '" + std::string(text) + "' (expected bow, lsi(d), lsi(all) or embedding(tag))");
    }
    return r;
}

inline const std::vector<std::string>& sidecar_variants() {
    static const std::vector<std::string> v{"none", "mlm_only", "one_step", "dotcal"};
    return v;
}

inline bool variant_uses_labels(std::string_view variant) { return variant == "one_step" || variant == "dotcal"; }

struct SidecarConfig {
    std::string command;  // executable (plus fixed arguments); the request path is appended
    std::string model = "bert-base-uncased";
    std::map<std::string, std::string> variants;  // embedding tag -> variant
    int epochs_mlm = 10;
    int epochs_atc = 5;
    double lr = 5e-5;
    std::filesystem::path workdir;
};

struct ExperimentSpec {
    std::string dataset;
    std::filesystem::path corpus_path;
    CorpusFormat corpus_format = CorpusFormat::jsonl;
    std::optional<std::size_t> n_folds;  // default: 10, or 5 above 100k documents
    std::uint64_t seed = 42;
    std::vector<std::size_t> budgets{50, 100, 200, 400, 800, 1600};
    std::vector<ReprSpec> selection_reprs{ReprSpec{}};
    std::vector<ReprSpec> classification_reprs{ReprSpec{}};
    std::size_t k = 10;
    std::optional<double> dist_min;  // default per selection representation kind
    ClassifierConfig classifier;
    std::size_t min_df = default_min_df;
    std::map<std::string, std::filesystem::path> embeddings;  // tag -> DVEC path
    std::optional<SidecarConfig> sidecar;
    unsigned threads = 1;

    void validate() const {
        if (budgets.empty()) throw Error("spec: budgets must not be empty");
        for (std::size_t i = 0; i < budgets.size(); ++i) {
            if (budgets[i] < 1) throw Error("spec: budgets must be positive");
            if (i > 0 && budgets[i] <= budgets[i - 1]) throw Error("spec: budgets must be strictly increasing");
        }
        if (selection_reprs.empty() || classification_reprs.empty())
            throw Error("spec: selection_repr and classification_repr must not be empty");
        if (k < 1) throw Error("spec: k must be at least 1");
        if (dist_min && !(*dist_min >= 0.0 && *dist_min <= 1.0)) throw Error("spec: dist_min must lie in [0, 1]");
        if (n_folds && *n_folds < 2) throw Error("spec: n_folds must be at least 2");
        auto check_tag = [&](const ReprSpec& r, bool selection) {
            if (r.kind != ReprKind::embedding) return;
            if (embeddings.count(r.tag)) return;
            if (sidecar && sidecar->variants.count(r.tag)) {
                if (selection && variant_uses_labels(sidecar->variants.at(r.tag)))
                    throw Error("spec: embedding(" + r.tag + ") needs labels and cannot drive selection");
                return;
            }
            throw Error("spec: embedding tag '" + r.tag + "' resolves to neither a file nor a sidecar variant");
        };
        for (const auto& r : selection_reprs) check_tag(r, true);
        for (const auto& r : classification_reprs) check_tag(r, false);
        if (sidecar) {
            if (sidecar->command.empty()) throw Error("spec: sidecar.command must not be empty");
            for (const auto& [tag, variant] : sidecar->variants)
                if (std::find(sidecar_variants().begin(), sidecar_variants().end(), variant) == sidecar_variants().end())
                    throw Error("spec: unknown sidecar variant '" + variant + "' for tag '" + tag + "'");
        }
    }
};

namespace detail {

inline std::vector<ReprSpec> parse_repr_list(const nlohmann::json& j) {
    std::vector<ReprSpec> out;
    if (j.is_string()) out.push_back(parse_repr(j.get<std::string>()));
    else
        for (const auto& item : j) out.push_back(parse_repr(item.get<std::string>()));
    return out;
}

} // namespace detail

// Parses a spec document; relative paths resolve against `base_dir`.
inline ExperimentSpec parse_experiment_spec(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    ExperimentSpec spec;
    try {
        const auto& corpus = j.at("corpus");
        if (corpus.is_string()) {
            spec.corpus_path = resolve(corpus.get<std::string>());
        } else {
            spec.corpus_path = resolve(corpus.at("path").get<std::string>());
            if (corpus.contains("format")) spec.corpus_format = parse_corpus_format(corpus.at("format").get<std::string>());
        }
        spec.dataset = j.value("dataset", spec.corpus_path.stem().string());
        if (j.contains("n_folds") && !j.at("n_folds").is_null()) spec.n_folds = j.at("n_folds").get<std::size_t>();
        spec.seed = j.value("seed", spec.seed);
        if (j.contains("budgets")) spec.budgets = j.at("budgets").get<std::vector<std::size_t>>();
        if (j.contains("selection_repr")) spec.selection_reprs = detail::parse_repr_list(j.at("selection_repr"));
        if (j.contains("classification_repr"))
            spec.classification_reprs = detail::parse_repr_list(j.at("classification_repr"));
        if (j.contains("selection")) {
            const auto& s = j.at("selection");
            spec.k = s.value("k", spec.k);
            if (s.contains("dist_min") && !s.at("dist_min").is_null()) spec.dist_min = s.at("dist_min").get<double>();
        }
        if (j.contains("classifier")) {
            const auto& c = j.at("classifier");
            spec.classifier.C = c.value("C", spec.classifier.C);
            spec.classifier.epochs = c.value("epochs", spec.classifier.epochs);
            spec.classifier.seed = c.value("seed", spec.classifier.seed);
        }
        spec.min_df = j.value("min_df", spec.min_df);
        if (j.contains("embeddings"))
            for (const auto& [tag, path] : j.at("embeddings").items()) spec.embeddings[tag] = resolve(path.get<std::string>());
        if (j.contains("sidecar") && !j.at("sidecar").is_null()) {
            const auto& s = j.at("sidecar");
            SidecarConfig sc;
            sc.command = s.at("command").get<std::string>();
            sc.model = s.value("model", sc.model);
            if (s.contains("variants")) sc.variants = s.at("variants").get<std::map<std::string, std::string>>();
            sc.epochs_mlm = s.value("epochs_mlm", sc.epochs_mlm);
            sc.epochs_atc = s.value("epochs_atc", sc.epochs_atc);
            sc.lr = s.value("lr", sc.lr);
            sc.workdir = resolve(s.value("workdir", std::string("sidecar_work")));
            spec.sidecar = std::move(sc);
        }
        spec.threads = j.value("threads", spec.threads);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

inline ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open spec file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("spec " + path.string() + ": " + e.what());
    }
    return parse_experiment_spec(j, path.parent_path());
}

} // namespace alcs
