#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "feature_matrix.hpp"
#include "parallel.hpp"

namespace alcs {

struct SelectionConfig {
    std::size_t budget = 200;
    std::size_t k = 10;
    double dist_min = 0.7;

    void validate() const {
        if (budget < 1) throw Error("budget must be at least 1");
        if (k < 1) throw Error("k must be at least 1");
        if (!(dist_min >= 0.0 && dist_min <= 1.0)) throw Error("dist_min must lie in [0, 1]");
    }
};

inline constexpr double default_dist_min_sparse = 0.7;
inline constexpr double default_dist_min_dense = 0.01;

// Densities are ranked after snapping to this grid, and diversity may fall
// short of dist_min by this much, so values that are equal up to rounding
// behave as exact ties.
inline constexpr double selection_tie_epsilon = 0x1p-40;

inline double density_rank_key(double density) {
    return std::round(density / selection_tie_epsilon) * selection_tie_epsilon;
}

// Diversity threshold tuned per representation family: 0.7 for BoW/LSI,
// 0.01 for dense embeddings.
inline double default_dist_min(ReprKind kind) {
    return kind == ReprKind::embedding ? default_dist_min_dense : default_dist_min_sparse;
}

struct Neighbors {
    std::vector<std::size_t> index;
    std::vector<double> similarity;  // non-increasing
};

namespace detail {

// Column -> (row, value) postings of a sparse matrix.
struct InvertedIndex {
    std::vector<std::vector<std::pair<std::size_t, double>>> postings;

    InvertedIndex() = default;
    explicit InvertedIndex(std::size_t n_cols) : postings(n_cols) {}

    void add(const FeatureMatrix& m, std::size_t row, std::size_t as) {
        m.for_each_entry(row, [&](std::size_t c, double v) { postings[c].emplace_back(as, v); });
    }
};

// Similarities of row i to every row (acc[j]), with the per-pair summation
// order of row_dot: increasing shared column.
inline void similarities_to_all(const FeatureMatrix& view, const InvertedIndex* index, std::size_t i,
                                std::vector<double>& acc) {
    acc.assign(view.n_rows(), 0.0);
    if (view.is_sparse()) {
        view.for_each_entry(i, [&](std::size_t c, double v) {
            for (auto [j, w] : index->postings[c]) acc[j] += v * w;
        });
    } else {
        for (std::size_t j = 0; j < view.n_rows(); ++j) acc[j] = row_dot(view, i, view, j);
    }
}

inline bool ranks_before(double sa, std::size_t a, double sb, std::size_t b) {
    return sa > sb || (sa == sb && a < b);
}

inline Neighbors top_k(const std::vector<double>& sims, std::size_t self, std::size_t k) {
    std::vector<std::size_t> order;
    order.reserve(sims.size());
    for (std::size_t j = 0; j < sims.size(); ++j)
        if (j != self) order.push_back(j);
    const std::size_t take = std::min(k, order.size());
    auto cmp = [&](std::size_t a, std::size_t b) { return ranks_before(sims[a], a, sims[b], b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), cmp);
    order.resize(take);
    Neighbors out;
    out.index = order;
    for (auto j : order) out.similarity.push_back(sims[j]);
    return out;
}

inline InvertedIndex index_rows(const FeatureMatrix& view) {
    InvertedIndex index(view.n_cols());
    if (view.is_sparse())
        for (std::size_t r = 0; r < view.n_rows(); ++r) index.add(view, r, r);
    return index;
}

} // namespace detail

// The k rows (other than i) most similar to row i by dot product on a
// similarity view; all other rows when fewer than k exist. Ties go to the
// lower row index.
inline Neighbors knn_topk(const FeatureMatrix& view, std::size_t i, std::size_t k) {
    if (k < 1) throw Error("k must be at least 1");
    if (view.n_rows() < 2) throw Error("kNN needs at least 2 rows");
    if (i >= view.n_rows()) throw Error("row " + std::to_string(i) + " out of range");
    const auto index = detail::index_rows(view);
    std::vector<double> sims;
    detail::similarities_to_all(view, &index, i, sims);
    return detail::top_k(sims, i, k);
}

// Mean similarity of every row to its top-k neighbours over the whole view.
inline std::vector<double> density_all(const FeatureMatrix& view, std::size_t k, unsigned threads = 1) {
    if (k < 1) throw Error("k must be at least 1");
    if (view.n_rows() < 2) throw Error("density needs at least 2 rows");
    const auto index = detail::index_rows(view);
    std::vector<double> density(view.n_rows());
    constexpr std::size_t block = 64;
    const std::size_t n_blocks = (view.n_rows() + block - 1) / block;
    parallel_for(n_blocks, threads, [&](std::size_t b) {
        std::vector<double> sims;
        const std::size_t end = std::min(view.n_rows(), (b + 1) * block);
        for (std::size_t i = b * block; i < end; ++i) {
            detail::similarities_to_all(view, &index, i, sims);
            const Neighbors nn = detail::top_k(sims, i, k);
            double sum = 0.0;
            for (double s : nn.similarity) sum += s;
            density[i] = sum / static_cast<double>(nn.similarity.size());
        }
    });
    return density;
}

// 1 - max similarity of row x to the selected rows; 1 for an empty selection.
inline double diversity(const FeatureMatrix& view, std::size_t x, std::span<const std::size_t> selected) {
    if (x >= view.n_rows()) throw Error("row " + std::to_string(x) + " out of range");
    if (selected.empty()) return 1.0;
    double best = -std::numeric_limits<double>::infinity();
    for (auto s : selected) best = std::max(best, row_dot(view, x, view, s));
    return 1.0 - best;
}

struct AuditEntry {
    std::size_t row = 0;
    double density = 0.0;
    double diversity = 0.0;
    bool accepted = false;
};

struct SelectionResult {
    std::vector<std::size_t> selected;  // rows of the view, in selection order
    std::vector<double> densities;      // per row of the view
    std::vector<AuditEntry> audit;      // every candidate examined, in order
    bool exhausted = false;
};

// Density-weighted diversity selection. Candidates are visited in
// non-increasing density order (ties, up to selection_tie_epsilon: lower
// row); a candidate is accepted when its diversity to the accepted set is at
// least dist_min. Stops at
// `budget` accepted rows or when every row has been visited. Densities are
// computed once over the full pool. Rows are normalized internally, so any
// positive row scaling gives the same result.
inline SelectionResult dwds_select(const FeatureMatrix& pool, const SelectionConfig& cfg, unsigned threads = 1) {
    cfg.validate();
    if (pool.n_rows() == 0) throw Error("cannot select from an empty pool");
    const FeatureMatrix view = similarity_view(pool);
    const std::size_t n = view.n_rows();

    SelectionResult result;
    result.densities = n >= 2 ? density_all(view, cfg.k, threads) : std::vector<double>(n, 0.0);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> key(n);
    for (std::size_t i = 0; i < n; ++i) key[i] = density_rank_key(result.densities[i]);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });

    detail::InvertedIndex accepted_index(view.is_sparse() ? view.n_cols() : 0);
    std::vector<double> acc;
    for (std::size_t candidate : order) {
        if (result.selected.size() >= cfg.budget) break;

        double max_sim = -std::numeric_limits<double>::infinity();
        if (view.is_sparse()) {
            acc.assign(result.selected.size(), 0.0);
            view.for_each_entry(candidate, [&](std::size_t c, double v) {
                for (auto [slot, w] : accepted_index.postings[c]) acc[slot] += v * w;
            });
            for (double s : acc) max_sim = std::max(max_sim, s);
        } else {
            for (auto s : result.selected) max_sim = std::max(max_sim, row_dot(view, candidate, view, s));
        }
        const double div = result.selected.empty() ? 1.0 : 1.0 - max_sim;
        const bool accept = div >= cfg.dist_min - selection_tie_epsilon;
        result.audit.push_back({candidate, result.densities[candidate], div, accept});
        if (accept) {
            if (view.is_sparse()) accepted_index.add(view, candidate, result.selected.size());
            result.selected.push_back(candidate);
        }
    }
    result.exhausted = result.selected.size() < cfg.budget;
    return result;
}

// JSON form: {"selected": [...], "exhausted": bool, "audit": [{"id", "density", "diversity", "accepted"}]}.
// `ids` maps view rows to document ids; rows are reported as-is when empty.
inline nlohmann::json to_json(const SelectionResult& result, std::span<const DocId> ids = {}) {
    auto id_of = [&](std::size_t row) -> std::size_t { return ids.empty() ? row : ids[row]; };
    nlohmann::json j;
    j["selected"] = nlohmann::json::array();
    for (auto r : result.selected) j["selected"].push_back(id_of(r));
    j["exhausted"] = result.exhausted;
    j["audit"] = nlohmann::json::array();
    for (const auto& a : result.audit)
        j["audit"].push_back(
            {{"id", id_of(a.row)}, {"density", a.density}, {"diversity", a.diversity}, {"accepted", a.accepted}});
    return j;
}

} // namespace alcs
