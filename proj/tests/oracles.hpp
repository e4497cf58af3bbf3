#pragma once

// Brute-force reference implementations used only by the tests. They follow
// the textbook definitions directly and share no code path with the library
// beyond the FeatureMatrix container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "alcs/feature_matrix.hpp"
#include "alcs/random.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense to_rows(const alcs::FeatureMatrix& m) {
    Dense rows(m.n_rows(), std::vector<double>(m.n_cols(), 0.0));
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        for (std::size_t c = 0; c < m.n_cols(); ++c) rows[r][c] = m.at(r, c);
    return rows;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

// All-pairs cosine matrix.
inline Dense cosine_matrix(const Dense& rows) {
    Dense sim(rows.size(), std::vector<double>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j) sim[i][j] = cosine(rows[i], rows[j]);
    return sim;
}

// Top-k by full sort of every other row: similarity desc, then index asc.
inline std::vector<std::size_t> topk(const Dense& sim, std::size_t i, std::size_t k) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < sim.size(); ++j)
        if (j != i) others.push_back(j);
    std::sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
        if (sim[i][a] != sim[i][b]) return sim[i][a] > sim[i][b];
        return a < b;
    });
    others.resize(std::min(k, others.size()));
    return others;
}

inline std::vector<double> density(const Dense& sim, std::size_t k) {
    std::vector<double> out(sim.size());
    for (std::size_t i = 0; i < sim.size(); ++i) {
        const auto nn = topk(sim, i, k);
        double s = 0.0;
        for (auto j : nn) s += sim[i][j];
        out[i] = s / static_cast<double>(nn.size());
    }
    return out;
}

// Densities equal up to this resolution are ties; diversity may miss
// dist_min by the same amount.
inline constexpr double tie = 0x1p-40;

// The selection loop exactly as written: repeatedly take the remaining
// instance with maximal density (lowest index on ties), accept it if its
// diversity to S reaches dist_min, remove it from the remaining set.
inline std::vector<std::size_t> dwds_literal(const Dense& sim, std::vector<double> dens, std::size_t budget,
                                             double dist_min) {
    for (auto& d : dens) d = std::round(d / tie) * tie;
    std::vector<std::size_t> selected;
    std::vector<bool> remaining(sim.size(), true);
    std::size_t left = sim.size();
    while (selected.size() < budget && left > 0) {
        std::size_t s = sim.size();
        for (std::size_t x = 0; x < sim.size(); ++x)
            if (remaining[x] && (s == sim.size() || dens[x] > dens[s])) s = x;
        double max_sim = -std::numeric_limits<double>::infinity();
        for (auto t : selected) max_sim = std::max(max_sim, sim[s][t]);
        const double div = selected.empty() ? 1.0 : 1.0 - max_sim;
        if (div >= dist_min - tie) selected.push_back(s);
        remaining[s] = false;
        --left;
    }
    return selected;
}

inline Eigen::MatrixXd to_eigen(const alcs::FeatureMatrix& m) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.n_rows()), static_cast<Eigen::Index>(m.n_cols()));
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        for (std::size_t c = 0; c < m.n_cols(); ++c)
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.at(r, c);
    return x;
}

struct DenseSvd {
    Eigen::VectorXd singular_values;
    Eigen::MatrixXd v;  // right singular vectors, largest-magnitude entry of each column positive
};

inline DenseSvd dense_svd(const Eigen::MatrixXd& x) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullV);
    DenseSvd out{svd.singularValues(), svd.matrixV()};
    for (Eigen::Index j = 0; j < out.v.cols(); ++j) {
        Eigen::Index best = 0;
        out.v.col(j).cwiseAbs().maxCoeff(&best);
        if (out.v(best, j) < 0) out.v.col(j) *= -1.0;
    }
    return out;
}

// Two-sided exact signed-rank p by walking all 2^n sign assignments.
inline double wilcoxon_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    const std::size_t n = d.size();
    if (n == 0) return 1.0;
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(d[j]) < std::abs(d[i])) ++less;
            else if (std::abs(d[j]) == std::abs(d[i])) ++equal;
        }
        rank[i] = less + (equal + 1.0) / 2.0;
    }
    const double total = std::accumulate(rank.begin(), rank.end(), 0.0);
    double plus = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0) plus += rank[i];
    const double observed = std::min(plus, total - plus);
    std::uint64_t extreme = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        double p = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) p += rank[i];
        if (std::min(p, total - p) <= observed + 1e-9) ++extreme;
    }
    return static_cast<double>(extreme) / std::ldexp(1.0, static_cast<int>(n));
}

// Random dense matrix with Gaussian entries.
inline alcs::FeatureMatrix random_dense(alcs::Rng& rng, std::size_t n, std::size_t dim,
                                        alcs::ReprKind kind = alcs::ReprKind::embedding) {
    std::vector<double> vals(n * dim);
    for (auto& v : vals) v = rng.normal();
    return alcs::FeatureMatrix::dense(n, dim, kind, std::move(vals));
}

// Random sparse matrix with the given fill ratio and positive entries.
inline alcs::FeatureMatrix random_sparse(alcs::Rng& rng, std::size_t n, std::size_t m, double fill) {
    std::vector<std::size_t> ptr{0};
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            if (rng.uniform() < fill) {
                cols.push_back(static_cast<std::uint32_t>(c));
                vals.push_back(rng.uniform(0.1, 1.0));
            }
        }
        ptr.push_back(vals.size());
    }
    return alcs::FeatureMatrix::sparse(n, m, alcs::ReprKind::bow, std::move(ptr), std::move(cols), std::move(vals));
}

// Unit vectors in the plane at the given angles (degrees).
inline alcs::FeatureMatrix planar(const std::vector<double>& degrees) {
    std::vector<double> vals;
    for (double deg : degrees) {
        const double rad = deg * M_PI / 180.0;
        vals.push_back(std::cos(rad));
        vals.push_back(std::sin(rad));
    }
    return alcs::FeatureMatrix::dense(degrees.size(), 2, alcs::ReprKind::embedding, std::move(vals));
}

} // namespace oracle
