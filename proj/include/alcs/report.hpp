#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "evaluation.hpp"

namespace alcs {

enum class CellStatus { ok, exhausted, failed };

inline std::string_view to_string(CellStatus s) {
    switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::exhausted: return "exhausted";
    case CellStatus::failed: return "failed";
    }
    return "?";
}

inline CellStatus parse_cell_status(std::string_view s) {
    if (s == "ok") return CellStatus::ok;
    if (s == "exhausted") return CellStatus::exhausted;
    if (s == "failed") return CellStatus::failed;
    throw Error("unknown cell status '" + std::string(s) + "'");
}

// One (fold, budget, selection repr, classification repr) result. An
// exhausted cell was still evaluated on the smaller selection; a failed cell
// carries no score.
struct ReportCell {
    std::size_t fold = 0;
    std::size_t budget = 0;
    std::string selection_repr;
    std::string classification_repr;
    CellStatus status = CellStatus::ok;
    std::optional<double> macro_f1;
    std::size_t n_selected = 0;
    std::string note;

    std::string config() const { return selection_repr + "/" + classification_repr; }
    auto key() const { return std::tie(fold, budget, selection_repr, classification_repr); }
    bool operator==(const ReportCell&) const = default;
};

struct ReportAggregate {
    std::size_t budget = 0;
    std::string selection_repr;
    std::string classification_repr;
    std::size_t n_folds = 0;  // cells with a score
    std::optional<double> mean;
    std::optional<double> ci_lower, ci_upper;
    std::vector<std::string> significant_vs;  // configs differing at p < 0.05

    std::string config() const { return selection_repr + "/" + classification_repr; }
    bool operator==(const ReportAggregate&) const = default;
};

struct PairwiseTest {
    std::size_t budget = 0;
    std::string config_a, config_b;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_pairs = 0;
    std::size_t n_effective = 0;
    std::string method;
    bool significant = false;
    bool operator==(const PairwiseTest&) const = default;
};

struct SelectionRecord {
    std::size_t fold = 0;
    std::string selection_repr;
    std::vector<DocId> selected;
    bool exhausted = false;
    nlohmann::json audit = nlohmann::json::array();
    std::string note;  // set when selection failed
    bool operator==(const SelectionRecord&) const = default;
};

struct ExperimentReport {
    std::string dataset;
    std::vector<ReportCell> cells;
    std::vector<ReportAggregate> aggregates;
    std::vector<PairwiseTest> tests;
    std::vector<SelectionRecord> selections;
    nlohmann::json meta = nlohmann::json::object();
};

inline constexpr double significance_level = 0.05;

// Recomputes aggregates (mean and 95% CI over folds) and pairwise paired
// Wilcoxon tests between configurations at the same budget from the cells.
// Tests need at least 5 folds where both configurations have a score.
inline void aggregate(ExperimentReport& report) {
    std::sort(report.cells.begin(), report.cells.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });

    // budget -> config -> fold -> score
    std::map<std::size_t, std::map<std::string, std::map<std::size_t, double>>> scores;
    std::map<std::tuple<std::size_t, std::string, std::string>, ReportAggregate> aggs;
    for (const auto& c : report.cells) {
        auto& agg = aggs[{c.budget, c.selection_repr, c.classification_repr}];
        agg.budget = c.budget;
        agg.selection_repr = c.selection_repr;
        agg.classification_repr = c.classification_repr;
        if (c.macro_f1) scores[c.budget][c.config()][c.fold] = *c.macro_f1;
    }

    report.tests.clear();
    std::map<std::pair<std::size_t, std::string>, std::vector<std::string>> flagged;
    for (const auto& [budget, by_config] : scores) {
        for (auto a = by_config.begin(); a != by_config.end(); ++a) {
            for (auto b = std::next(a); b != by_config.end(); ++b) {
                std::vector<double> xa, xb;
                for (const auto& [fold, s] : a->second) {
                    auto it = b->second.find(fold);
                    if (it == b->second.end()) continue;
                    xa.push_back(s);
                    xb.push_back(it->second);
                }
                if (xa.size() < 5) continue;
                const auto t = wilcoxon_paired(xa, xb);
                PairwiseTest pt{budget,      a->first,   b->first, t.statistic, t.p_value, xa.size(),
                                t.n_effective, std::string(to_string(t.method)), t.significant(significance_level)};
                if (pt.significant) {
                    flagged[{budget, a->first}].push_back(b->first);
                    flagged[{budget, b->first}].push_back(a->first);
                }
                report.tests.push_back(std::move(pt));
            }
        }
    }

    report.aggregates.clear();
    for (auto& [key, agg] : aggs) {
        std::vector<double> xs;
        if (auto it = scores.find(agg.budget); it != scores.end())
            if (auto jt = it->second.find(agg.config()); jt != it->second.end())
                for (const auto& [fold, s] : jt->second) xs.push_back(s);
        agg.n_folds = xs.size();
        if (xs.size() >= 2) {
            const auto ci = mean_ci(xs);
            agg.mean = ci.mean;
            agg.ci_lower = ci.lower;
            agg.ci_upper = ci.upper;
        } else if (xs.size() == 1) {
            agg.mean = xs.front();
        }
        if (auto it = flagged.find({agg.budget, agg.config()}); it != flagged.end()) {
            agg.significant_vs = it->second;
            std::sort(agg.significant_vs.begin(), agg.significant_vs.end());
        }
        report.aggregates.push_back(std::move(agg));
    }
}

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string fixed6(std::optional<double> v) {
    if (!v) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

inline std::string join(const std::vector<std::string>& items, char sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

} // namespace detail

inline constexpr const char* report_csv_header =
    "dataset,fold,budget,selection_repr,classification_repr,macro_f1,row_type,status,n_selected,ci_lower,ci_upper,"
    "significant_vs,note";

// Cell rows (row_type=cell) sorted by key, then one aggregate row per
// (budget, configuration) with fold=all. Runtime metadata is not written.
inline std::string report_to_csv(const ExperimentReport& report) {
    using detail::csv_field;
    std::ostringstream out;
    out << report_csv_header << '\n';
    for (const auto& c : report.cells) {
        out << csv_field(report.dataset) << ',' << c.fold << ',' << c.budget << ',' << csv_field(c.selection_repr) << ','
            << csv_field(c.classification_repr) << ',' << detail::fixed6(c.macro_f1) << ",cell," << to_string(c.status)
            << ',' << c.n_selected << ",,,," << csv_field(c.note) << '\n';
    }
    for (const auto& a : report.aggregates) {
        out << csv_field(report.dataset) << ",all," << a.budget << ',' << csv_field(a.selection_repr) << ','
            << csv_field(a.classification_repr) << ',' << detail::fixed6(a.mean) << ",aggregate,"
            << (a.n_folds ? "ok" : "failed") << ',' << a.n_folds << ',' << detail::fixed6(a.ci_lower) << ','
            << detail::fixed6(a.ci_upper) << ',' << csv_field(detail::join(a.significant_vs, ';')) << ",\n";
    }
    return out.str();
}

inline nlohmann::json report_to_json(const ExperimentReport& report) {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j;
    j["dataset"] = report.dataset;
    j["cells"] = json::array();
    for (const auto& c : report.cells)
        j["cells"].push_back({{"fold", c.fold},
                              {"budget", c.budget},
                              {"selection_repr", c.selection_repr},
                              {"classification_repr", c.classification_repr},
                              {"status", to_string(c.status)},
                              {"macro_f1", opt(c.macro_f1)},
                              {"n_selected", c.n_selected},
                              {"note", c.note}});
    j["aggregates"] = json::array();
    for (const auto& a : report.aggregates)
        j["aggregates"].push_back({{"budget", a.budget},
                                   {"selection_repr", a.selection_repr},
                                   {"classification_repr", a.classification_repr},
                                   {"n_folds", a.n_folds},
                                   {"mean", opt(a.mean)},
                                   {"ci_lower", opt(a.ci_lower)},
                                   {"ci_upper", opt(a.ci_upper)},
                                   {"significant_vs", a.significant_vs}});
    j["tests"] = json::array();
    for (const auto& t : report.tests)
        j["tests"].push_back({{"budget", t.budget},
                              {"config_a", t.config_a},
                              {"config_b", t.config_b},
                              {"statistic", t.statistic},
                              {"p_value", t.p_value},
                              {"n_pairs", t.n_pairs},
                              {"n_effective", t.n_effective},
                              {"method", t.method},
                              {"significant", t.significant}});
    j["selections"] = json::array();
    for (const auto& s : report.selections)
        j["selections"].push_back({{"fold", s.fold},
                                   {"selection_repr", s.selection_repr},
                                   {"selected", s.selected},
                                   {"exhausted", s.exhausted},
                                   {"audit", s.audit},
                                   {"note", s.note}});
    j["meta"] = report.meta;
    return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
    auto opt = [](const nlohmann::json& v) { return v.is_null() ? std::optional<double>{} : v.get<double>(); };
    ExperimentReport r;
    try {
        r.dataset = j.at("dataset").get<std::string>();
        for (const auto& c : j.at("cells"))
            r.cells.push_back({c.at("fold").get<std::size_t>(), c.at("budget").get<std::size_t>(),
                               c.at("selection_repr").get<std::string>(), c.at("classification_repr").get<std::string>(),
                               parse_cell_status(c.at("status").get<std::string>()), opt(c.at("macro_f1")),
                               c.at("n_selected").get<std::size_t>(), c.at("note").get<std::string>()});
        for (const auto& a : j.at("aggregates"))
            r.aggregates.push_back({a.at("budget").get<std::size_t>(), a.at("selection_repr").get<std::string>(),
                                    a.at("classification_repr").get<std::string>(), a.at("n_folds").get<std::size_t>(),
                                    opt(a.at("mean")), opt(a.at("ci_lower")), opt(a.at("ci_upper")),
                                    a.at("significant_vs").get<std::vector<std::string>>()});
        for (const auto& t : j.at("tests"))
            r.tests.push_back({t.at("budget").get<std::size_t>(), t.at("config_a").get<std::string>(),
                               t.at("config_b").get<std::string>(), t.at("statistic").get<double>(),
                               t.at("p_value").get<double>(), t.at("n_pairs").get<std::size_t>(),
                               t.at("n_effective").get<std::size_t>(), t.at("method").get<std::string>(),
                               t.at("significant").get<bool>()});
        for (const auto& s : j.at("selections"))
            r.selections.push_back({s.at("fold").get<std::size_t>(), s.at("selection_repr").get<std::string>(),
                                    s.at("selected").get<std::vector<DocId>>(), s.at("exhausted").get<bool>(),
                                    s.at("audit"), s.at("note").get<std::string>()});
        r.meta = j.value("meta", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("report JSON: ") + e.what());
    }
    return r;
}

enum class ReportFormat { csv, json };

inline void emit_report(const ExperimentReport& report, const std::filesystem::path& path, ReportFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write report to " + path.string());
    if (format == ReportFormat::csv) out << report_to_csv(report);
    else out << report_to_json(report).dump(2) << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

} // namespace alcs
