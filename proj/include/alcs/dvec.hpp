#pragma once

// DVEC: dense row-major float32 matrix container.
//
//   0..3   magic "DVEC"
//   4..7   version, u32 LE (= 1)
//   8..15  n_rows, u64 LE
//   16..23 n_cols, u64 LE
//   24     dtype (0x01 = IEEE-754 binary32)
//   25..31 zero padding
//   32..   n_rows * n_cols float32 LE, row-major
//
// An optional `<file>.ids` text file lists one document id per row.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "error.hpp"
#include "feature_matrix.hpp"

namespace alcs {

inline constexpr std::uint32_t dvec_version = 1;
inline constexpr std::uint8_t dvec_dtype_f32 = 0x01;
inline constexpr std::size_t dvec_header_size = 32;

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(value >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* p) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
    return value;
}

inline std::filesystem::path ids_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".ids");
}

} // namespace detail

// Encodes a matrix as DVEC bytes. Values are narrowed to float32.
inline std::vector<unsigned char> encode_dvec(const FeatureMatrix& matrix) {
    const FeatureMatrix dense = matrix.to_dense();
    std::vector<unsigned char> out;
    out.reserve(dvec_header_size + dense.n_rows() * dense.n_cols() * 4);
    for (char c : {'D', 'V', 'E', 'C'}) out.push_back(static_cast<unsigned char>(c));
    detail::put_le<std::uint32_t>(out, dvec_version);
    detail::put_le<std::uint64_t>(out, dense.n_rows());
    detail::put_le<std::uint64_t>(out, dense.n_cols());
    out.push_back(dvec_dtype_f32);
    for (int i = 0; i < 7; ++i) out.push_back(0);
    for (double v : dense.dense_values()) {
        const float f = static_cast<float>(v);
        if (!std::isfinite(f)) throw FormatError("value does not fit in float32");
        detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

inline FeatureMatrix decode_dvec(const std::vector<unsigned char>& bytes, ReprKind kind = ReprKind::embedding) {
    if (bytes.size() < dvec_header_size) throw FormatError("DVEC: truncated header");
    if (std::memcmp(bytes.data(), "DVEC", 4) != 0) throw FormatError("DVEC: bad magic");
    const auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
    if (version != dvec_version) throw FormatError("DVEC: unsupported version " + std::to_string(version));
    const auto n_rows = detail::get_le<std::uint64_t>(bytes.data() + 8);
    const auto n_cols = detail::get_le<std::uint64_t>(bytes.data() + 16);
    if (bytes[24] != dvec_dtype_f32) throw FormatError("DVEC: unsupported dtype flag");
    for (std::size_t i = 25; i < dvec_header_size; ++i)
        if (bytes[i] != 0) throw FormatError("DVEC: nonzero header padding");

    constexpr auto max_values = std::numeric_limits<std::uint64_t>::max() / 4;
    if (n_cols != 0 && n_rows > max_values / n_cols) throw FormatError("DVEC: row/column count overflow");
    const std::uint64_t count = n_rows * n_cols;
    if (bytes.size() - dvec_header_size != count * 4)
        throw FormatError("DVEC: payload holds " + std::to_string(bytes.size() - dvec_header_size) +
                          " bytes, header promises " + std::to_string(count * 4));

    std::vector<double> vals(count);
    const unsigned char* p = bytes.data() + dvec_header_size;
    for (std::uint64_t i = 0; i < count; ++i, p += 4) {
        const float f = std::bit_cast<float>(detail::get_le<std::uint32_t>(p));
        if (!std::isfinite(f)) throw FormatError("DVEC: non-finite value at index " + std::to_string(i));
        vals[i] = f;
    }
    return FeatureMatrix::dense(n_rows, n_cols, kind, std::move(vals));
}

inline void save_embeddings(const FeatureMatrix& matrix, const std::filesystem::path& path) {
    const auto bytes = encode_dvec(matrix);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());

    const auto ids_file = detail::ids_path(path);
    if (!matrix.row_ids().empty()) {
        std::ofstream ids(ids_file, std::ios::trunc);
        for (DocId id : matrix.row_ids()) ids << id << '\n';
        if (!ids) throw Error("write failed for " + ids_file.string());
    } else {
        std::error_code ec;
        std::filesystem::remove(ids_file, ec);
    }
}

inline FeatureMatrix load_embeddings(const std::filesystem::path& path, ReprKind kind = ReprKind::embedding) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    FeatureMatrix matrix = decode_dvec(bytes, kind);

    const auto ids_file = detail::ids_path(path);
    if (std::filesystem::exists(ids_file)) {
        std::ifstream ids(ids_file);
        std::vector<DocId> row_ids;
        std::string line;
        while (std::getline(ids, line)) {
            if (line.empty()) continue;
            try {
                row_ids.push_back(std::stoull(line));
            } catch (const std::exception&) {
                throw FormatError(ids_file.string() + ": invalid document id '" + line + "'");
            }
        }
        if (row_ids.size() != matrix.n_rows())
            throw FormatError(ids_file.string() + ": " + std::to_string(row_ids.size()) + " ids for " +
                              std::to_string(matrix.n_rows()) + " rows");
        matrix.set_row_ids(std::move(row_ids));
    }
    return matrix;
}

} // namespace alcs
