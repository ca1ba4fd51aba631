#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace aada {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    /// Rows picked by index, in the given order.
    Matrix gather_rows(std::span<const std::size_t> indices) const;

    /// All entries finite.
    bool is_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a · b
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Stack `top` over `bottom`; column counts must agree.
Matrix vstack(const Matrix& top, const Matrix& bottom);

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept;

} // namespace aada
