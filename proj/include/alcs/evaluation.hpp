#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "corpus.hpp"
#include "error.hpp"

namespace alcs {

// Counts indexed [true][predicted] over the union of observed class ids.
struct ConfusionMatrix {
    std::vector<ClassId> classes;  // ascending
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
        return t;
    }
};

inline ConfusionMatrix confusion_matrix(std::span<const ClassId> y_true, std::span<const ClassId> y_pred) {
    if (y_true.size() != y_pred.size())
        throw Error("length mismatch: " + std::to_string(y_true.size()) + " true vs " + std::to_string(y_pred.size()) +
                    " predicted labels");
    ConfusionMatrix cm;
    cm.classes.assign(y_true.begin(), y_true.end());
    cm.classes.insert(cm.classes.end(), y_pred.begin(), y_pred.end());
    std::sort(cm.classes.begin(), cm.classes.end());
    cm.classes.erase(std::unique(cm.classes.begin(), cm.classes.end()), cm.classes.end());
    auto slot = [&](ClassId c) {
        return static_cast<std::size_t>(std::lower_bound(cm.classes.begin(), cm.classes.end(), c) - cm.classes.begin());
    };
    cm.counts.assign(cm.classes.size(), std::vector<std::size_t>(cm.classes.size(), 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[slot(y_true[i])][slot(y_pred[i])];
    return cm;
}

// Unweighted mean of per-class F1 over the classes present in y_true.
// Zero denominators give zero precision, recall, or F1.
inline double macro_f1(std::span<const ClassId> y_true, std::span<const ClassId> y_pred) {
    if (y_true.empty()) throw Error("macro_f1 needs at least one row");
    const ConfusionMatrix cm = confusion_matrix(y_true, y_pred);
    const std::size_t k = cm.classes.size();
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = cm.counts[c][c], row = 0, col = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row += cm.counts[c][j];
            col += cm.counts[j][c];
        }
        if (row == 0) continue;  // class absent from y_true
        ++present;
        const double precision = col == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(col);
        const double recall = static_cast<double>(tp) / static_cast<double>(row);
        sum += precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    }
    return sum / static_cast<double>(present);
}

struct MeanCi {
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

// Student-t interval: mean +- t_{n-1, (1+level)/2} * s / sqrt(n).
inline MeanCi mean_ci(std::span<const double> samples, double level = 0.95) {
    const std::size_t n = samples.size();
    if (n < 2) throw Error("confidence interval needs at least 2 samples");
    if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    boost::math::students_t dist(static_cast<double>(n - 1));
    const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
    const double half = t * sd / std::sqrt(static_cast<double>(n));
    return {mean, mean - half, mean + half};
}

enum class WilcoxonMethod { exact, normal_approximation };

struct PairedTestResult {
    double statistic = 0.0;  // min(W+, W-)
    double p_value = 1.0;    // two-sided
    std::size_t n_effective = 0;
    WilcoxonMethod method = WilcoxonMethod::exact;

    bool significant(double alpha = 0.05) const { return p_value < alpha; }
};

inline constexpr std::size_t wilcoxon_exact_limit = 25;

// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped,
// tied magnitudes share their average rank. Up to 25 nonzero pairs the null
// distribution is counted exactly over all 2^n sign assignments; beyond that
// a normal approximation with tie and continuity corrections is used.
// `exact_limit` moves that cut-off.
inline PairedTestResult wilcoxon_paired(std::span<const double> a, std::span<const double> b,
                                        std::size_t exact_limit = wilcoxon_exact_limit) {
    if (a.size() != b.size()) throw Error("wilcoxon: samples differ in length");
    if (a.size() < 5) throw Error("wilcoxon: needs at least 5 pairs");

    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    const std::size_t n = d.size();
    PairedTestResult result;
    result.n_effective = n;
    if (n == 0) return result;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });

    // Doubled ranks stay integral under averaging: a tie block over ranks
    // lo..hi gets (lo + hi) each.
    std::vector<std::uint64_t> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = (i + 1) + (j + 1);
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    std::uint64_t plus2 = 0, total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (d[i] > 0) plus2 += rank2[i];
    }
    const std::uint64_t w2 = std::min(plus2, total2 - plus2);
    result.statistic = static_cast<double>(w2) / 2.0;

    if (n <= exact_limit && n <= 62) {  // counts must fit in 64 bits
        result.method = WilcoxonMethod::exact;
        // ways[s] = number of sign assignments whose positive doubled-rank sum is s.
        std::vector<std::uint64_t> ways(total2 + 1, 0);
        ways[0] = 1;
        std::uint64_t reach = 0;
        for (auto r : rank2) {
            for (std::uint64_t s = reach + 1; s-- > 0;)
                if (ways[s]) ways[s + r] += ways[s];
            reach += r;
        }
        std::uint64_t extreme = 0;
        for (std::uint64_t s = 0; s <= total2; ++s)
            if (std::min(s, total2 - s) <= w2) extreme += ways[s];
        result.p_value = static_cast<double>(extreme) / std::ldexp(1.0, static_cast<int>(n));
    } else {
        result.method = WilcoxonMethod::normal_approximation;
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double z = std::max(0.0, std::abs(result.statistic - mean) - 0.5) / std::sqrt(var);
        result.p_value = std::erfc(z / std::sqrt(2.0));
    }
    result.p_value = std::min(1.0, result.p_value);
    return result;
}

inline std::string_view to_string(WilcoxonMethod m) {
    return m == WilcoxonMethod::exact ? "exact" : "normal_approximation";
}

} // namespace alcs
