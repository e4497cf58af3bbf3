#include <gtest/gtest.h>

#include <bit>
#include <filesystem>
#include <fstream>

#include "alcs/dvec.hpp"
#include "oracles.hpp"

using namespace alcs;

namespace {

std::vector<unsigned char> valid_bytes() {
    Rng rng(1);
    return encode_dvec(oracle::random_dense(rng, 3, 4));
}

std::filesystem::path temp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

} // namespace

TEST(Dvec, HeaderLayout) {
    const auto bytes = valid_bytes();
    ASSERT_EQ(bytes.size(), 32u + 3 * 4 * 4);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "DVEC");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[8], 3);
    EXPECT_EQ(bytes[16], 4);
    EXPECT_EQ(bytes[24], 0x01);
    for (int i = 25; i < 32; ++i) EXPECT_EQ(bytes[i], 0);
}

TEST(Dvec, RoundTripIsBitExactForFloat32Values) {
    Rng rng(2);
    std::vector<double> vals(50 * 7);
    for (auto& v : vals) v = static_cast<float>(rng.normal() * 100.0);
    const auto m = FeatureMatrix::dense(50, 7, ReprKind::embedding, vals);
    const auto path = temp("alcs_roundtrip.dvec");
    save_embeddings(m, path);
    const auto back = load_embeddings(path);
    ASSERT_EQ(back.n_rows(), 50u);
    ASSERT_EQ(back.n_cols(), 7u);
    for (std::size_t i = 0; i < vals.size(); ++i)
        EXPECT_EQ(std::bit_cast<std::uint64_t>(back.dense_values()[i]), std::bit_cast<std::uint64_t>(vals[i]));
    // Re-encoding gives the same bytes.
    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> on_disk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(encode_dvec(back), on_disk);
    std::filesystem::remove(path);
}

TEST(Dvec, IdsSidecarFile) {
    Rng rng(3);
    auto m = oracle::random_dense(rng, 4, 2);
    m.set_row_ids({10, 3, 7, 42});
    const auto path = temp("alcs_ids.dvec");
    save_embeddings(m, path);
    EXPECT_EQ(load_embeddings(path).row_ids(), (std::vector<DocId>{10, 3, 7, 42}));

    // Saving without ids removes a stale ids file.
    save_embeddings(oracle::random_dense(rng, 2, 2), path);
    EXPECT_TRUE(load_embeddings(path).row_ids().empty());

    std::ofstream(path.string() + ".ids") << "1\n2\n3\n";
    EXPECT_THROW(load_embeddings(path), FormatError);
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".ids");
}

TEST(Dvec, LargeShapeRoundTrip) {
    std::vector<double> vals(std::size_t{10568} * 300);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<float>(static_cast<double>(i % 1009) / 1009.0 - 0.5);
    const auto m = FeatureMatrix::dense(10568, 300, ReprKind::embedding, vals);
    const auto bytes = encode_dvec(m);
    EXPECT_EQ(bytes.size(), 32u + std::size_t{10568} * 300 * 4);
    const auto back = decode_dvec(bytes);
    EXPECT_EQ(back.n_rows(), 10568u);
    EXPECT_EQ(back.n_cols(), 300u);
    EXPECT_TRUE(std::equal(vals.begin(), vals.end(), back.dense_values().begin()));
}

TEST(Dvec, EmptyMatrix) {
    const auto m = FeatureMatrix::dense(0, 5, ReprKind::embedding, {});
    const auto back = decode_dvec(encode_dvec(m));
    EXPECT_EQ(back.n_rows(), 0u);
    EXPECT_EQ(back.n_cols(), 5u);
}

TEST(Dvec, RejectsMalformedInput) {
    auto bad = valid_bytes();
    bad[0] = 'X';
    EXPECT_THROW(decode_dvec(bad), FormatError);

    bad = valid_bytes();
    bad[4] = 2;
    EXPECT_THROW(decode_dvec(bad), FormatError);

    bad = valid_bytes();
    bad[24] = 0x02;
    EXPECT_THROW(decode_dvec(bad), FormatError);

    bad = valid_bytes();
    bad[29] = 1;
    EXPECT_THROW(decode_dvec(bad), FormatError);

    bad = valid_bytes();
    bad.resize(20);
    EXPECT_THROW(decode_dvec(bad), FormatError);

    bad = valid_bytes();
    bad.pop_back();
    EXPECT_THROW(decode_dvec(bad), FormatError);

    bad = valid_bytes();
    bad.push_back(0);
    EXPECT_THROW(decode_dvec(bad), FormatError);

    bad = valid_bytes();
    for (int i = 8; i < 16; ++i) bad[static_cast<std::size_t>(i)] = 0xff;
    EXPECT_THROW(decode_dvec(bad), FormatError);

    bad = valid_bytes();
    const auto nan = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
    for (int i = 0; i < 4; ++i) bad[32 + static_cast<std::size_t>(i)] = static_cast<unsigned char>(nan >> (8 * i));
    EXPECT_THROW(decode_dvec(bad), FormatError);
}

TEST(Dvec, CheckedInFixtureLoads) {
    const auto m = load_embeddings(ALCS_DATA_DIR "/synthetic400_embed16.dvec");
    EXPECT_EQ(m.n_rows(), 400u);
    EXPECT_EQ(m.n_cols(), 16u);
}
