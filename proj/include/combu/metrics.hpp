#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "combu/linalg.hpp"

namespace combu {

/// Mean |pred - truth|. Throws ShapeError on length mismatch or empty input.
double mae(std::span<const double> pred, std::span<const double> truth);
/// Mean (pred - truth)^2.
double mse(std::span<const double> pred, std::span<const double> truth);

/// Fraction of matching class indices.
double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth);
/// Unweighted mean of per-class F1; a class with precision + recall = 0
/// scores 0.
double macro_f1(std::span<const std::size_t> pred, std::span<const std::size_t> truth, std::size_t n_classes);

/// Row-wise argmax (first maximum wins).
std::vector<std::size_t> argmax_rows(const Matrix& scores);

/// 1-based ranks, best first. Ties share the mean of the ranks they span.
std::vector<double> rank_values(std::span<const double> values, bool lower_is_better);

/// Mean and population standard deviation.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace combu
