#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "feature_matrix.hpp"
#include "random.hpp"

namespace alcs {

// Rank-d truncated SVD of a document-term matrix, X ~ U S V^T. Only the
// term-side basis V is kept: documents (training or unseen) map to latent
// coordinates through x V.
struct LsiModel {
    std::size_t d = 0;
    std::size_t n_terms = 0;
    Eigen::MatrixXd term_basis;              // n_terms x d, orthonormal columns
    std::vector<double> singular_values;     // d values, non-increasing
    std::size_t iterations = 0;
};

struct LsiOptions {
    double tolerance = 1e-8;           // singular-value change, relative to sigma_1
    double residual_tolerance = 1e-10; // ||X^T X v - s^2 v||, relative to sigma_1^2
    std::size_t max_iterations = 1000;
    std::size_t oversample = 10;
    std::uint64_t seed = 0x1517;
};

// Singular values below this fraction of sigma_1 count as zero.
inline constexpr double rank_tolerance = 1e-10;

namespace detail {

// Y = X Q for sparse or dense X.
inline Eigen::MatrixXd times(const FeatureMatrix& x, const Eigen::MatrixXd& q) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.n_rows()), q.cols());
    for (std::size_t r = 0; r < x.n_rows(); ++r) {
        auto row = y.row(static_cast<Eigen::Index>(r));
        x.for_each_entry(r, [&](std::size_t c, double v) {
            if (v != 0.0) row.noalias() += v * q.row(static_cast<Eigen::Index>(c));
        });
    }
    return y;
}

// W = X^T Y.
inline Eigen::MatrixXd transpose_times(const FeatureMatrix& x, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.n_cols()), y.cols());
    for (std::size_t r = 0; r < x.n_rows(); ++r) {
        auto yr = y.row(static_cast<Eigen::Index>(r));
        x.for_each_entry(r, [&](std::size_t c, double v) {
            if (v != 0.0) w.row(static_cast<Eigen::Index>(c)).noalias() += v * yr;
        });
    }
    return w;
}

inline Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& a) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
}

// Flips each column so its largest-magnitude entry (first one on ties) is positive.
inline void fix_signs(Eigen::MatrixXd& basis) {
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < basis.rows(); ++i)
            if (std::abs(basis(i, j)) > std::abs(basis(best, j))) best = i;
        if (basis(best, j) < 0.0) basis.col(j) *= -1.0;
    }
}

} // namespace detail

// Block subspace iteration on X^T X with Rayleigh-Ritz extraction. The block
// holds d plus a few oversampling columns; iteration stops once the leading d
// singular values are stable and their Ritz vectors have small residuals.
inline LsiModel lsi_fit(const FeatureMatrix& bow, std::size_t d, const LsiOptions& opts = {}) {
    const std::size_t n = bow.n_rows(), m = bow.n_cols();
    const std::size_t max_rank = std::min(n, m);
    if (d < 1 || d > max_rank)
        throw Error("LSI dimension d=" + std::to_string(d) + " out of range [1, " + std::to_string(max_rank) + "]");

    const std::size_t p = std::min(d + opts.oversample, max_rank);
    Rng rng(opts.seed);
    Eigen::MatrixXd q(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < q.cols(); ++j)
        for (Eigen::Index i = 0; i < q.rows(); ++i) q(i, j) = rng.uniform(-1.0, 1.0);
    q = detail::orthonormalize(q);

    const auto di = static_cast<Eigen::Index>(d);
    Eigen::VectorXd previous = Eigen::VectorXd::Constant(di, -1.0);
    double last_change = 0.0, last_residual = 0.0;
    for (std::size_t iter = 1; iter <= opts.max_iterations; ++iter) {
        q = detail::orthonormalize(detail::transpose_times(bow, detail::times(bow, q)));

        // Rayleigh-Ritz on span(Q): X Q = U S W^T, right vectors Q W.
        const Eigen::MatrixXd b = detail::times(bow, q);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinV);
        const Eigen::VectorXd sigma = svd.singularValues().head(di);
        Eigen::MatrixXd v = q * svd.matrixV().leftCols(di);

        const double scale = std::max(sigma(0), 1e-300);
        last_change = (sigma - previous).cwiseAbs().maxCoeff() / scale;
        previous = sigma;

        const Eigen::MatrixXd xv = detail::times(bow, v);
        const Eigen::MatrixXd residual = detail::transpose_times(bow, xv) - v * sigma.cwiseAbs2().asDiagonal();
        last_residual = residual.colwise().norm().maxCoeff() / (scale * scale);

        if (iter > 1 && last_change <= opts.tolerance && last_residual <= opts.residual_tolerance) {
            if (!(sigma(di - 1) > rank_tolerance * scale))
                throw Error("LSI dimension d=" + std::to_string(d) + " exceeds the numerical rank of the matrix");
            detail::fix_signs(v);
            LsiModel model;
            model.d = d;
            model.n_terms = m;
            model.term_basis = std::move(v);
            model.singular_values.assign(sigma.data(), sigma.data() + sigma.size());
            model.iterations = iter;
            return model;
        }
    }
    throw Error("LSI did not converge after " + std::to_string(opts.max_iterations) +
                " iterations (last singular-value change " + std::to_string(last_change) + ", residual " +
                std::to_string(last_residual) + ")");
}

// Latent coordinates x V for every row; dense, d columns. Row ids carry over.
inline FeatureMatrix lsi_project(const LsiModel& model, const FeatureMatrix& rows) {
    if (rows.n_cols() != model.n_terms)
        throw Error("LSI projection: matrix has " + std::to_string(rows.n_cols()) + " columns, model expects " +
                    std::to_string(model.n_terms));
    const Eigen::MatrixXd coords = detail::times(rows, model.term_basis);
    std::vector<double> vals(rows.n_rows() * model.d);
    for (std::size_t r = 0; r < rows.n_rows(); ++r)
        for (std::size_t j = 0; j < model.d; ++j)
            vals[r * model.d + j] = coords(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
    FeatureMatrix out = FeatureMatrix::dense(rows.n_rows(), model.d, ReprKind::lsi, std::move(vals));
    out.set_row_ids(rows.row_ids());
    return out;
}

} // namespace alcs
