#include <gtest/gtest.h>

#include <cmath>

#include "alcs/lsi.hpp"
#include "oracles.hpp"

using namespace alcs;

namespace {

double relative(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

double reconstruction_error(const Eigen::MatrixXd& x, const LsiModel& model) {
    const Eigen::MatrixXd& v = model.term_basis;
    return (x - x * v * v.transpose()).norm();
}

} // namespace

TEST(Lsi, RankOneMatrix) {
    // X = u v^T with v = (3, 4) / 5.
    std::vector<double> vals{3, 4, 6, 8, -3, -4};
    const auto x = FeatureMatrix::dense(3, 2, ReprKind::bow, vals);
    const auto model = lsi_fit(x, 1);
    EXPECT_NEAR(model.singular_values[0], 5.0 * std::sqrt(6.0), 1e-9);
    EXPECT_NEAR(model.term_basis(0, 0), 0.6, 1e-9);
    EXPECT_NEAR(model.term_basis(1, 0), 0.8, 1e-9);
    EXPECT_THROW(lsi_fit(x, 2), Error);
}

TEST(Lsi, MatchesDenseSvdOnRandomSparseMatrices) {
    Rng rng(4040);
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = oracle::random_sparse(rng, 40, 60, 0.15);
        const auto want = oracle::dense_svd(oracle::to_eigen(x));
        for (std::size_t d : {1u, 5u, 12u}) {
            const auto model = lsi_fit(x, d);
            for (std::size_t j = 0; j < d; ++j)
                EXPECT_LT(relative(model.singular_values[j], want.singular_values(static_cast<Eigen::Index>(j))), 1e-6);
            const auto got = lsi_project(model, x);
            const Eigen::MatrixXd expect = oracle::to_eigen(x) * want.v.leftCols(static_cast<Eigen::Index>(d));
            const double scale = expect.norm();
            for (std::size_t r = 0; r < x.n_rows(); ++r)
                for (std::size_t j = 0; j < d; ++j)
                    EXPECT_NEAR(got.at(r, j), expect(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)),
                                1e-6 * scale);
        }
    }
}

TEST(Lsi, FullRankReconstructsAndPreservesCosines) {
    Rng rng(11);
    const auto x = oracle::random_sparse(rng, 20, 30, 0.4);
    const auto model = lsi_fit(x, 20);
    const Eigen::MatrixXd xe = oracle::to_eigen(x);
    EXPECT_LT(reconstruction_error(xe, model) / xe.norm(), 1e-6);

    const auto z = lsi_project(model, x);
    const auto before = oracle::cosine_matrix(oracle::to_rows(x));
    const auto after = oracle::cosine_matrix(oracle::to_rows(z));
    for (std::size_t i = 0; i < before.size(); ++i)
        for (std::size_t j = 0; j < before.size(); ++j) EXPECT_NEAR(after[i][j], before[i][j], 1e-6);
}

TEST(Lsi, ReconstructionErrorNonIncreasingInD) {
    Rng rng(12);
    const auto x = oracle::random_sparse(rng, 30, 45, 0.2);
    const Eigen::MatrixXd xe = oracle::to_eigen(x);
    double previous = xe.norm();
    for (std::size_t d = 1; d <= 30; ++d) {
        const double err = reconstruction_error(xe, lsi_fit(x, d));
        EXPECT_LE(err, previous + 1e-9) << "d=" << d;
        previous = err;
    }
}

TEST(Lsi, BasisIsOrthonormalWithSignConvention) {
    Rng rng(13);
    const auto x = oracle::random_sparse(rng, 25, 35, 0.3);
    const auto model = lsi_fit(x, 8);
    const Eigen::MatrixXd gram = model.term_basis.transpose() * model.term_basis;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index j = 0; j < 8; ++j) {
        Eigen::Index best;
        model.term_basis.col(j).cwiseAbs().maxCoeff(&best);
        EXPECT_GT(model.term_basis(best, j), 0.0);
    }
    EXPECT_TRUE(std::is_sorted(model.singular_values.rbegin(), model.singular_values.rend()));
}

TEST(Lsi, ZeroRowProjectsToZero) {
    std::vector<std::size_t> ptr{0, 2, 2, 4};
    std::vector<std::uint32_t> cols{0, 2, 1, 2};
    std::vector<double> vals{1.0, 0.5, 0.3, 0.7};
    const auto x = FeatureMatrix::sparse(3, 3, ReprKind::bow, ptr, cols, vals);
    const auto z = lsi_project(lsi_fit(x, 2), x);
    EXPECT_EQ(z.at(1, 0), 0.0);
    EXPECT_EQ(z.at(1, 1), 0.0);
}

TEST(Lsi, ErrorsOnBadDimensionsAndColumnMismatch) {
    Rng rng(14);
    const auto x = oracle::random_sparse(rng, 10, 8, 0.5);
    EXPECT_THROW(lsi_fit(x, 0), Error);
    EXPECT_THROW(lsi_fit(x, 9), Error);
    const auto model = lsi_fit(x, 3);
    const auto other = oracle::random_sparse(rng, 4, 9, 0.5);
    EXPECT_THROW(lsi_project(model, other), Error);
}

TEST(Lsi, DimensionBeyondNumericalRankFails) {
    // Rank 2: every row is a combination of two patterns.
    std::vector<double> vals;
    for (int r = 0; r < 6; ++r) {
        const double a = 1.0 + r, b = 2.0 - 0.5 * r;
        for (int c = 0; c < 5; ++c) vals.push_back(a * (c + 1) + b * (c % 2));
    }
    const auto x = FeatureMatrix::dense(6, 5, ReprKind::bow, vals);
    EXPECT_NO_THROW(lsi_fit(x, 2));
    EXPECT_THROW(lsi_fit(x, 3), Error);
}

TEST(Lsi, DeterministicForSeed) {
    Rng rng(15);
    const auto x = oracle::random_sparse(rng, 30, 40, 0.2);
    const auto a = lsi_fit(x, 6), b = lsi_fit(x, 6);
    EXPECT_EQ(a.singular_values, b.singular_values);
    EXPECT_TRUE(a.term_basis == b.term_basis);
}
