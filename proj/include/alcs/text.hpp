#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "feature_matrix.hpp"

namespace alcs {

namespace detail {

// Decodes one UTF-8 sequence starting at s[i]; invalid bytes decode as
// U+FFFD and consume one byte.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) len = 2, cp = b0 & 0x1F;
    else if ((b0 & 0xF0) == 0xE0) len = 3, cp = b0 & 0x0F;
    else if ((b0 & 0xF8) == 0xF0) len = 4, cp = b0 & 0x07;
    else {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k < len; ++k) {
        const int c = cont(static_cast<std::size_t>(k));
        if (c < 0) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | static_cast<char32_t>(c);
    }
    i += static_cast<std::size_t>(len);
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline bool is_word_char(char32_t cp) {
    if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;  // Latin-1 punctuation/symbols
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, math
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;  // fullwidth punctuation
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false; // emoji and pictographs
    if (cp == 0xFEFF || cp == 0xFFFD) return false;
    return true;
}

inline char32_t fold_case(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    // Latin Extended-A pairs upper/lower case on alternating parity.
    if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177)) return cp % 2 == 0 ? cp + 1 : cp;
    if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) return cp % 2 == 1 ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;  // Greek
    if (cp >= 0x410 && cp <= 0x42F) return cp + 32;                  // Cyrillic
    if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
    return cp;
}

} // namespace detail

// Lowercased alphanumeric runs of at least two code points, in text order.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t length = 0;
    auto flush = [&] {
        if (length >= 2) tokens.push_back(current);
        current.clear();
        length = 0;
    };
    for (std::size_t i = 0; i < text.size();) {
        const char32_t cp = detail::decode_utf8(text, i);
        if (detail::is_word_char(cp)) {
            detail::append_utf8(current, detail::fold_case(cp));
            ++length;
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

// Sorted term list with document frequencies over the fitting texts.
struct Vocabulary {
    std::vector<std::string> terms;
    std::vector<std::size_t> df;
    std::size_t n_docs_fitted = 0;

    std::size_t size() const noexcept { return terms.size(); }

    // Smoothed inverse document frequency, ln((1 + N) / (1 + df)) + 1.
    double idf(std::size_t term) const {
        return std::log((1.0 + static_cast<double>(n_docs_fitted)) / (1.0 + static_cast<double>(df[term]))) + 1.0;
    }

    // Index of a term, or -1.
    std::ptrdiff_t find(std::string_view term) const {
        auto it = std::lower_bound(terms.begin(), terms.end(), term);
        if (it == terms.end() || *it != term) return -1;
        return it - terms.begin();
    }
};

inline constexpr std::size_t default_min_df = 2;

inline Vocabulary fit_vocabulary(std::span<const std::string> texts, std::size_t min_df = default_min_df) {
    if (min_df < 1) throw Error("min_df must be at least 1");
    if (texts.empty()) throw Error("cannot fit a vocabulary on an empty corpus");
    std::map<std::string, std::size_t, std::less<>> df;
    for (const auto& text : texts) {
        auto tokens = tokenize(text);
        std::sort(tokens.begin(), tokens.end());
        tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
        for (auto& t : tokens) ++df[t];
    }
    Vocabulary vocab;
    vocab.n_docs_fitted = texts.size();
    for (auto& [term, count] : df) {
        if (count < min_df) continue;
        vocab.terms.push_back(term);
        vocab.df.push_back(count);
    }
    if (vocab.terms.empty()) throw Error("no terms survive min_df=" + std::to_string(min_df));
    return vocab;
}

struct TfidfAudit {
    // Indices of texts with no in-vocabulary token (their rows are zero).
    std::vector<std::size_t> empty_rows;
};

// Raw term counts times smoothed idf, each nonzero row L2-normalized.
// Out-of-vocabulary tokens are ignored.
inline FeatureMatrix tfidf(std::span<const std::string> texts, const Vocabulary& vocab, TfidfAudit* audit = nullptr) {
    std::vector<double> idf(vocab.size());
    for (std::size_t t = 0; t < vocab.size(); ++t) idf[t] = vocab.idf(t);

    std::vector<std::size_t> row_ptr{0};
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    std::map<std::uint32_t, std::size_t> counts;
    for (std::size_t r = 0; r < texts.size(); ++r) {
        counts.clear();
        for (const auto& token : tokenize(texts[r])) {
            const auto idx = vocab.find(token);
            if (idx >= 0) ++counts[static_cast<std::uint32_t>(idx)];
        }
        const std::size_t begin = vals.size();
        double sq = 0.0;
        for (auto [term, count] : counts) {
            const double w = static_cast<double>(count) * idf[term];
            cols.push_back(term);
            vals.push_back(w);
            sq += w * w;
        }
        if (counts.empty() && audit) audit->empty_rows.push_back(r);
        const double norm = std::sqrt(sq);
        for (std::size_t p = begin; p < vals.size(); ++p) vals[p] /= norm;
        row_ptr.push_back(vals.size());
    }
    return FeatureMatrix::sparse(texts.size(), vocab.size(), ReprKind::bow, std::move(row_ptr), std::move(cols),
                                 std::move(vals));
}

} // namespace alcs
