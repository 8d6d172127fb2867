#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dc/error.hpp"

namespace dc {

// Dense row-major matrix of doubles. The universal carrier for datasets,
// intermediate representations, projection bases and model weights.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw InputError("Matrix: data length " + std::to_string(data_.size()) +
                             " does not equal " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
        }
    }

    // Construction from nested initializer lists, for literals in tests.
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) {
                throw InputError("Matrix: ragged initializer rows");
            }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    const std::vector<double>& values() const { return data_; }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline std::string shape_of(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// C = A * B. Loop order keeps both B and C accesses contiguous so the inner
// loop vectorizes.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw InputError("matmul: shape mismatch " + shape_of(a) + " * " + shape_of(b));
    }
    Matrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c.data() + i * m;
        const double* arow = a.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = b.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

// Horizontal concatenation [A_1, A_2, ..., A_d]; all blocks share a row count.
inline Matrix hstack(std::span<const Matrix> blocks) {
    if (blocks.empty()) throw InputError("hstack: no blocks");
    const std::size_t rows = blocks.front().rows();
    std::size_t cols = 0;
    for (const Matrix& b : blocks) {
        if (b.rows() != rows) {
            throw InputError("hstack: shape mismatch " + shape_of(blocks.front()) +
                             " vs " + shape_of(b));
        }
        cols += b.cols();
    }
    Matrix out(rows, cols);
    std::size_t offset = 0;
    for (const Matrix& b : blocks) {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, offset + j) = b(i, j);
        offset += b.cols();
    }
    return out;
}

// Vertical concatenation; row blocks appear in argument order.
inline Matrix vstack(std::span<const Matrix> blocks) {
    if (blocks.empty()) throw InputError("vstack: no blocks");
    const std::size_t cols = blocks.front().cols();
    std::size_t rows = 0;
    for (const Matrix& b : blocks) {
        if (b.cols() != cols) {
            throw InputError("vstack: shape mismatch " + shape_of(blocks.front()) +
                             " vs " + shape_of(b));
        }
        rows += b.rows();
    }
    Matrix out(rows, cols);
    std::size_t offset = 0;
    for (const Matrix& b : blocks) {
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < cols; ++j) out(offset + i, j) = b(i, j);
        offset += b.rows();
    }
    return out;
}

// Rows [begin, end) as a new matrix.
inline Matrix row_slice(const Matrix& a, std::size_t begin, std::size_t end) {
    if (begin > end || end > a.rows()) {
        throw InputError("row_slice: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") out of bounds for " + shape_of(a));
    }
    Matrix out(end - begin, a.cols());
    for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i - begin, j) = a(i, j);
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InputError("max_abs_diff: shape mismatch " + shape_of(a) + " vs " +
                         shape_of(b));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

}  // namespace dc
