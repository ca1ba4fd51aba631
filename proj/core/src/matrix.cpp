#include "aada/matrix.hpp"

#include "aada/errors.hpp"

#include <cmath>
#include <string>

namespace aada {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw DimensionError("Matrix", "data length " + std::to_string(data_.size()) +
                                           " != " + std::to_string(rows) + "x" +
                                           std::to_string(cols));
    }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const std::size_t cols = rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) {
            throw DimensionError("Matrix::from_rows", "ragged row " + std::to_string(r));
        }
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) {
            throw DimensionError("Matrix::gather_rows",
                                 "row index " + std::to_string(indices[i]) + " out of range");
        }
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

bool Matrix::is_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul", std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                           " * " + std::to_string(b.rows()) + "x" +
                                           std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* o = out.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const double* brow = b.row(k).data();
            for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn", "row counts " + std::to_string(a.rows()) + " vs " +
                                              std::to_string(b.rows()));
    }
    Matrix out(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* brow = b.row(r).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double ari = a(r, i);
            double* o = out.row(i).data();
            for (std::size_t j = 0; j < n; ++j) o[j] += ari * brow[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt", "column counts " + std::to_string(a.cols()) + " vs " +
                                              std::to_string(b.cols()));
    }
    // Transpose b once so the inner loop streams contiguously.
    Matrix bt(b.cols(), b.rows());
    for (std::size_t r = 0; r < b.rows(); ++r) {
        for (std::size_t c = 0; c < b.cols(); ++c) bt(c, r) = b(r, c);
    }
    return matmul(a, bt);
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.empty()) return bottom;
    if (bottom.empty()) return top;
    if (top.cols() != bottom.cols()) {
        throw DimensionError("vstack", "column counts " + std::to_string(top.cols()) + " vs " +
                                           std::to_string(bottom.cols()));
    }
    std::vector<double> data(top.data());
    data.insert(data.end(), bottom.data().begin(), bottom.data().end());
    return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept {
    return std::sqrt(squared_distance(a, b));
}

} // namespace aada
