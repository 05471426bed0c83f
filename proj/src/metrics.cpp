#include "combu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "combu/error.hpp"

namespace combu {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
    if (a == 0) throw ShapeError(std::string(what) + ": empty input");
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred.size(), truth.size(), "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

double mse(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred.size(), truth.size(), "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
    check_lengths(pred.size(), truth.size(), "accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double macro_f1(std::span<const std::size_t> pred, std::span<const std::size_t> truth, std::size_t n_classes) {
    check_lengths(pred.size(), truth.size(), "macro_f1");
    if (n_classes == 0) throw ParameterError("macro_f1: no classes");
    std::vector<double> tp(n_classes), fp(n_classes), fn(n_classes);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] >= n_classes || truth[i] >= n_classes) throw ParameterError("macro_f1: class index out of range");
        if (pred[i] == truth[i]) {
            ++tp[pred[i]];
        } else {
            ++fp[pred[i]];
            ++fn[truth[i]];
        }
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double denom = 2.0 * tp[c] + fp[c] + fn[c];
        total += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
    }
    return total / static_cast<double>(n_classes);
}

std::vector<std::size_t> argmax_rows(const Matrix& scores) {
    std::vector<std::size_t> out(scores.rows());
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        const auto row = scores.row(r);
        out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

std::vector<double> rank_values(std::span<const double> values, bool lower_is_better) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lower_is_better ? values[a] < values[b] : values[a] > values[b];
    });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
        i = j;
    }
    return ranks;
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) throw ShapeError("mean_std: empty input");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n)};
}

}  // namespace combu
