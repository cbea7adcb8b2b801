#pragma once

#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace vascl {

// Dense row-major matrix of doubles. Construction boundaries reject NaN/Inf;
// internal routines that can legitimately produce non-finite values check
// explicitly instead.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix row_vector(std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const;

    Matrix row(std::size_t r) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Shape-checked elementwise and linear-algebra helpers used throughout the
// core. All throw NumericError on shape mismatch.
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix matmul(const Matrix& a, const Matrix& b);
// a (m x d) times b^T (d x n) without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

double dot(const Matrix& a, const Matrix& b);
double row_norm(const Matrix& a, std::size_t r);
double frobenius_norm(const Matrix& a);
double sum(const Matrix& a);

// Cosine similarity between two vectors (any shape, compared flat).
// Throws NumericError when either norm is below eps.
double cosine_sim(const Matrix& a, const Matrix& b, double eps = 1e-12);

void check_shape(const Matrix& a, std::size_t rows, std::size_t cols, const char* what);

}  // namespace vascl
