#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "feature_matrix.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace alcs {

struct ClassifierConfig {
    double C = 1.0;
    std::size_t epochs = 50;
    std::uint64_t seed = 1;
    double tolerance = 1e-6;  // relative per-epoch objective change
};

struct TrainingTrace {
    std::size_t epochs_run = 0;
    // Objective of the kept model after each epoch; entry 0 is the zero model.
    std::vector<double> objective;
};

// One-vs-rest linear max-margin classifier.
struct LinearModel {
    std::vector<ClassId> classes;               // ascending
    std::vector<std::vector<double>> weights;   // one per class
    std::vector<double> biases;
    double C = 1.0;
    std::vector<TrainingTrace> traces;

    std::size_t n_dims() const { return weights.empty() ? 0 : weights.front().size(); }
};

namespace detail {

// Hinge objective 1/2 (|w|^2 + b^2) + C sum max(0, 1 - y (w.x + b)).
inline double svm_objective(const FeatureMatrix& x, std::span<const double> y, std::span<const double> w, double b,
                            double C) {
    double reg = b * b;
    for (double v : w) reg += v * v;
    double loss = 0.0;
    for (std::size_t i = 0; i < x.n_rows(); ++i) loss += std::max(0.0, 1.0 - y[i] * (x.dot(i, w) + b));
    return 0.5 * reg + C * loss;
}

struct BinarySolution {
    std::vector<double> w;
    double b = 0.0;
    TrainingTrace trace;
};

// Dual coordinate descent for the hinge-loss SVM with the bias as an extra
// constant feature. Each epoch visits the rows in a seeded random order. The
// best primal iterate seen so far is kept, so the recorded objective never
// increases. Stops after `epochs` or once the current iterate's objective
// changes by less than tolerance (relative) over an epoch.
inline BinarySolution train_binary(const FeatureMatrix& x, std::span<const double> y, const ClassifierConfig& cfg) {
    const std::size_t n = x.n_rows();
    BinarySolution best;
    best.w.assign(x.n_cols(), 0.0);
    std::vector<double> w(x.n_cols(), 0.0);
    double b = 0.0;
    std::vector<double> alpha(n, 0.0), qii(n);
    for (std::size_t i = 0; i < n; ++i) qii[i] = x.squared_norm(i) + 1.0;

    double best_obj = svm_objective(x, y, w, b, cfg.C);
    double current_obj = best_obj;
    best.trace.objective.push_back(best_obj);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(cfg.seed);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t i : order) {
            const double g = y[i] * (x.dot(i, w) + b) - 1.0;
            const double a = alpha[i];
            double pg = g;
            if (a == 0.0) pg = std::min(g, 0.0);
            else if (a == cfg.C) pg = std::max(g, 0.0);
            if (pg == 0.0) continue;
            const double next = std::clamp(a - g / qii[i], 0.0, cfg.C);
            const double step = (next - a) * y[i];
            if (step == 0.0) continue;
            alpha[i] = next;
            x.for_each_entry(i, [&](std::size_t c, double v) { w[c] += step * v; });
            b += step;
        }

        const double obj = svm_objective(x, y, w, b, cfg.C);
        if (obj < best_obj) {
            best_obj = obj;
            best.w = w;
            best.b = b;
        }
        best.trace.objective.push_back(best_obj);
        best.trace.epochs_run = epoch;
        const bool stalled = std::abs(current_obj - obj) < cfg.tolerance * std::max(std::abs(current_obj), 1e-300);
        current_obj = obj;
        if (stalled) break;
    }
    return best;
}

} // namespace detail

inline LinearModel train(const FeatureMatrix& features, std::span<const ClassId> labels,
                         const ClassifierConfig& cfg = {}, unsigned threads = 1) {
    if (labels.size() != features.n_rows())
        throw Error("dimension mismatch: " + std::to_string(features.n_rows()) + " rows, " +
                    std::to_string(labels.size()) + " labels");
    if (!(cfg.C > 0.0)) throw Error("C must be positive");
    std::vector<ClassId> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw Error("degenerate labels: training set has fewer than 2 classes");

    LinearModel model;
    model.classes = classes;
    model.C = cfg.C;
    model.weights.resize(classes.size());
    model.biases.resize(classes.size());
    model.traces.resize(classes.size());
    parallel_for(classes.size(), threads, [&](std::size_t k) {
        std::vector<double> y(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == classes[k] ? 1.0 : -1.0;
        auto sol = detail::train_binary(features, y, cfg);
        model.weights[k] = std::move(sol.w);
        model.biases[k] = sol.b;
        model.traces[k] = std::move(sol.trace);
    });
    return model;
}

// Row-major n_rows x n_classes margins w_c . x + b_c.
inline std::vector<double> decision_scores(const LinearModel& model, const FeatureMatrix& features) {
    if (features.n_cols() != model.n_dims())
        throw Error("dimension mismatch: model has " + std::to_string(model.n_dims()) + " dims, features have " +
                    std::to_string(features.n_cols()));
    const std::size_t nc = model.classes.size();
    std::vector<double> scores(features.n_rows() * nc);
    for (std::size_t r = 0; r < features.n_rows(); ++r)
        for (std::size_t c = 0; c < nc; ++c) scores[r * nc + c] = features.dot(r, model.weights[c]) + model.biases[c];
    return scores;
}

// Highest-margin class per row; ties go to the lower class id.
inline std::vector<ClassId> predict(const LinearModel& model, const FeatureMatrix& features) {
    const auto scores = decision_scores(model, features);
    const std::size_t nc = model.classes.size();
    std::vector<ClassId> out(features.n_rows());
    for (std::size_t r = 0; r < features.n_rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < nc; ++c)
            if (scores[r * nc + c] > scores[r * nc + best]) best = c;
        out[r] = model.classes[best];
    }
    return out;
}

// Binary layout, little-endian:
//   "LSVM", u32 version (1), u32 n_classes, u64 n_dims,
//   then per class: u32 class id, f32 bias, n_dims x f32 weights.
inline void save_model(const LinearModel& model, const std::filesystem::path& path) {
    std::vector<unsigned char> out{'L', 'S', 'V', 'M'};
    auto put = [&](auto value) {
        for (std::size_t i = 0; i < sizeof(value); ++i) out.push_back(static_cast<unsigned char>(value >> (8 * i)));
    };
    put(std::uint32_t{1});
    put(static_cast<std::uint32_t>(model.classes.size()));
    put(static_cast<std::uint64_t>(model.n_dims()));
    for (std::size_t c = 0; c < model.classes.size(); ++c) {
        put(static_cast<std::uint32_t>(model.classes[c]));
        put(std::bit_cast<std::uint32_t>(static_cast<float>(model.biases[c])));
        for (double v : model.weights[c]) put(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("cannot write " + path.string());
}

inline LinearModel load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    std::vector<unsigned char> in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    auto get = [&]<typename T>(T) {
        if (pos + sizeof(T) > in.size()) throw FormatError("LSVM: truncated");
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[pos + i]) << (8 * i);
        pos += sizeof(T);
        return value;
    };
    if (in.size() < 4 || std::memcmp(in.data(), "LSVM", 4) != 0) throw FormatError("LSVM: bad magic");
    pos = 4;
    if (get(std::uint32_t{}) != 1) throw FormatError("LSVM: unsupported version");
    const auto n_classes = get(std::uint32_t{});
    const auto n_dims = get(std::uint64_t{});
    if (n_dims > in.size()) throw FormatError("LSVM: dimension count exceeds file size");
    LinearModel model;
    for (std::uint32_t c = 0; c < n_classes; ++c) {
        model.classes.push_back(static_cast<ClassId>(get(std::uint32_t{})));
        model.biases.push_back(std::bit_cast<float>(get(std::uint32_t{})));
        std::vector<double> w(n_dims);
        for (auto& v : w) v = std::bit_cast<float>(get(std::uint32_t{}));
        model.weights.push_back(std::move(w));
    }
    if (pos != in.size()) throw FormatError("LSVM: trailing bytes");
    model.traces.resize(n_classes);
    return model;
}

} // namespace alcs
