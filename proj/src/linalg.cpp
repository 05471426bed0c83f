#include "combu/linalg.hpp"

#include <string>

#include "combu/error.hpp"

namespace combu {

namespace {

std::string dims(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        throw ShapeError("Matrix: " + std::to_string(data_.size()) + " values for shape " + dims(rows, cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: " + dims(a.rows(), a.cols()) + " * " + dims(b.rows(), b.cols()));
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Vector affine(std::span<const double> x, const Matrix& w, std::span<const double> b) {
    if (x.size() != w.rows() || b.size() != w.cols())
        throw ShapeError("affine: x[" + std::to_string(x.size()) + "] * W" + dims(w.rows(), w.cols()) + " + b[" +
                         std::to_string(b.size()) + "]");
    Vector out(b.begin(), b.end());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) out[j] += x[i] * w(i, j);
    return out;
}

Vector matvec(const Matrix& w, std::span<const double> x) {
    if (x.size() != w.cols())
        throw ShapeError("matvec: W" + dims(w.rows(), w.cols()) + " * x[" + std::to_string(x.size()) + "]");
    Vector out(w.rows(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
        double acc = 0.0;
        const auto row = w.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
    return out;
}

}  // namespace combu
