#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"

namespace alcs {

enum class ReprKind { bow, lsi, embedding };

inline std::string_view to_string(ReprKind kind) {
    switch (kind) {
    case ReprKind::bow: return "bow";
    case ReprKind::lsi: return "lsi";
    case ReprKind::embedding: return "embedding";
    }
    return "?";
}

// Row-per-document features, either CSR sparse or row-major dense.
// Values are held in double precision; the float32 DVEC format is only an
// on-disk encoding. Entries are finite, and sparse entries are nonzero with
// strictly increasing column indices inside each row.
class FeatureMatrix {
public:
    FeatureMatrix() = default;

    static FeatureMatrix sparse(std::size_t n_rows, std::size_t n_cols, ReprKind kind,
                                std::vector<std::size_t> row_ptr, std::vector<std::uint32_t> cols,
                                std::vector<double> vals) {
        FeatureMatrix m;
        m.n_rows_ = n_rows;
        m.n_cols_ = n_cols;
        m.kind_ = kind;
        m.sparse_ = true;
        m.row_ptr_ = std::move(row_ptr);
        m.cols_ = std::move(cols);
        m.vals_ = std::move(vals);
        if (m.row_ptr_.size() != n_rows + 1 || m.row_ptr_.front() != 0 || m.row_ptr_.back() != m.vals_.size() ||
            m.cols_.size() != m.vals_.size())
            throw Error("inconsistent sparse matrix layout");
        for (std::size_t r = 0; r < n_rows; ++r) {
            if (m.row_ptr_[r] > m.row_ptr_[r + 1]) throw Error("row pointers must be non-decreasing");
            for (std::size_t p = m.row_ptr_[r]; p < m.row_ptr_[r + 1]; ++p) {
                if (m.cols_[p] >= n_cols) throw Error("sparse column index out of range");
                if (p > m.row_ptr_[r] && m.cols_[p] <= m.cols_[p - 1])
                    throw Error("sparse columns must be strictly increasing within a row");
                if (m.vals_[p] == 0.0 || !std::isfinite(m.vals_[p]))
                    throw Error("sparse entries must be finite and nonzero");
            }
        }
        return m;
    }

    static FeatureMatrix dense(std::size_t n_rows, std::size_t n_cols, ReprKind kind, std::vector<double> vals) {
        if (vals.size() != n_rows * n_cols) throw Error("dense matrix value count does not match its shape");
        for (double v : vals)
            if (!std::isfinite(v)) throw Error("matrix contains NaN or Inf");
        FeatureMatrix m;
        m.n_rows_ = n_rows;
        m.n_cols_ = n_cols;
        m.kind_ = kind;
        m.sparse_ = false;
        m.vals_ = std::move(vals);
        return m;
    }

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_cols() const noexcept { return n_cols_; }
    ReprKind kind() const noexcept { return kind_; }
    bool is_sparse() const noexcept { return sparse_; }
    std::size_t nnz() const noexcept { return sparse_ ? vals_.size() : n_rows_ * n_cols_; }

    // Optional document ids, one per row.
    const std::vector<DocId>& row_ids() const noexcept { return row_ids_; }
    void set_row_ids(std::vector<DocId> ids) {
        if (!ids.empty() && ids.size() != n_rows_) throw Error("row id list does not match row count");
        row_ids_ = std::move(ids);
    }

    // Dense accessors.
    std::span<const double> dense_row(std::size_t r) const {
        return {vals_.data() + r * n_cols_, n_cols_};
    }
    std::span<const double> dense_values() const noexcept { return vals_; }

    // Sparse accessors.
    std::span<const std::uint32_t> sparse_cols(std::size_t r) const {
        return {cols_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    std::span<const double> sparse_vals(std::size_t r) const {
        return {vals_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
    }
    const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }

    // Calls f(col, value) for every stored entry of row r; dense rows visit every column.
    template <typename F>
    void for_each_entry(std::size_t r, F&& f) const {
        if (sparse_) {
            for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) f(static_cast<std::size_t>(cols_[p]), vals_[p]);
        } else {
            const double* row = vals_.data() + r * n_cols_;
            for (std::size_t c = 0; c < n_cols_; ++c) f(c, row[c]);
        }
    }

    double dot(std::size_t r, std::span<const double> w) const {
        double s = 0.0;
        for_each_entry(r, [&](std::size_t c, double v) { s += v * w[c]; });
        return s;
    }

    double squared_norm(std::size_t r) const {
        double s = 0.0;
        for_each_entry(r, [&](std::size_t, double v) { s += v * v; });
        return s;
    }

    double at(std::size_t r, std::size_t c) const {
        if (!sparse_) return vals_[r * n_cols_ + c];
        auto cols = sparse_cols(r);
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == c) return sparse_vals(r)[i];
        return 0.0;
    }

    // New matrix holding the given rows in the given order (row ids follow).
    FeatureMatrix select_rows(std::span<const std::size_t> rows) const {
        std::vector<DocId> ids;
        if (!row_ids_.empty())
            for (auto r : rows) ids.push_back(row_ids_.at(r));
        FeatureMatrix out;
        if (sparse_) {
            std::vector<std::size_t> ptr{0};
            std::vector<std::uint32_t> cols;
            std::vector<double> vals;
            for (auto r : rows) {
                if (r >= n_rows_) throw Error("row index out of range");
                auto c = sparse_cols(r);
                auto v = sparse_vals(r);
                cols.insert(cols.end(), c.begin(), c.end());
                vals.insert(vals.end(), v.begin(), v.end());
                ptr.push_back(vals.size());
            }
            out = sparse(rows.size(), n_cols_, kind_, std::move(ptr), std::move(cols), std::move(vals));
        } else {
            std::vector<double> vals;
            vals.reserve(rows.size() * n_cols_);
            for (auto r : rows) {
                if (r >= n_rows_) throw Error("row index out of range");
                auto row = dense_row(r);
                vals.insert(vals.end(), row.begin(), row.end());
            }
            out = dense(rows.size(), n_cols_, kind_, std::move(vals));
        }
        out.row_ids_ = std::move(ids);
        return out;
    }

    FeatureMatrix to_dense() const {
        if (!sparse_) return *this;
        std::vector<double> vals(n_rows_ * n_cols_, 0.0);
        for (std::size_t r = 0; r < n_rows_; ++r)
            for_each_entry(r, [&](std::size_t c, double v) { vals[r * n_cols_ + c] = v; });
        FeatureMatrix out = dense(n_rows_, n_cols_, kind_, std::move(vals));
        out.row_ids_ = row_ids_;
        return out;
    }

    // Same storage with every value multiplied by row_scale[r].
    FeatureMatrix scale_rows(std::span<const double> row_scale) const {
        FeatureMatrix out = *this;
        for (std::size_t r = 0; r < n_rows_; ++r) {
            const std::size_t begin = sparse_ ? row_ptr_[r] : r * n_cols_;
            const std::size_t end = sparse_ ? row_ptr_[r + 1] : (r + 1) * n_cols_;
            for (std::size_t p = begin; p < end; ++p) out.vals_[p] *= row_scale[r];
        }
        return out;
    }

private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    ReprKind kind_ = ReprKind::embedding;
    bool sparse_ = false;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> cols_;
    std::vector<double> vals_;
    std::vector<DocId> row_ids_;
};

// Every nonzero row scaled to unit L2 norm so cosine similarity is a dot
// product. Zero rows stay zero.
inline FeatureMatrix similarity_view(const FeatureMatrix& m) {
    std::vector<double> scale(m.n_rows());
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        const double norm = std::sqrt(m.squared_norm(r));
        scale[r] = norm > 0.0 ? 1.0 / norm : 0.0;
    }
    return m.scale_rows(scale);
}

// Dot product of row a of x with row b of y (same column space).
inline double row_dot(const FeatureMatrix& x, std::size_t a, const FeatureMatrix& y, std::size_t b) {
    if (!x.is_sparse()) return y.dot(b, x.dense_row(a));
    if (!y.is_sparse()) return x.dot(a, y.dense_row(b));
    auto ca = x.sparse_cols(a), cb = y.sparse_cols(b);
    auto va = x.sparse_vals(a), vb = y.sparse_vals(b);
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ca.size() && j < cb.size()) {
        if (ca[i] < cb[j]) ++i;
        else if (cb[j] < ca[i]) ++j;
        else s += va[i++] * vb[j++];
    }
    return s;
}

} // namespace alcs
