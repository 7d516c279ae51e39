#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace haad::num {

/// Dense row-major matrix of doubles. Scalars are 1x1 matrices.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Mat(std::size_t rows, std::size_t cols, std::vector<double> data);
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat scalar(double v) { return Mat(1, 1, v); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    /// Value of a 1x1 matrix; throws ContractViolation otherwise.
    double value() const;

    bool all_finite() const noexcept;
    bool same_shape(const Mat& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;

    void fill(double v);

    /// Bit-for-bit equality of shape and every entry.
    friend bool operator==(const Mat& a, const Mat& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Dense helpers used outside the tape. All go through the dispatched kernels.

Mat matmul(const Mat& a, const Mat& b);
/// a * b^T
Mat matmul_bt(const Mat& a, const Mat& b);
/// a^T * b
Mat matmul_at(const Mat& a, const Mat& b);
/// Row-broadcast bias add: a (n x m) + bias (1 x m).
Mat add_row_bias(const Mat& a, const Mat& bias);
double frobenius_dot(const Mat& a, const Mat& b);
double frobenius_norm(const Mat& a);
/// Returns a + s * b.
Mat add_scaled(const Mat& a, const Mat& b, double s);
Mat hadamard(const Mat& a, const Mat& b);
Mat scaled(const Mat& a, double s);
/// a (n x m) with row i multiplied by s(i, 0).
Mat mul_row_broadcast(const Mat& a, const Mat& s);

/// Numerically stable log(1 + e^x).
double softplus(double x) noexcept;
/// Logistic function, evaluated without overflow for large |x|.
double sigmoid(double x) noexcept;

Mat relu(const Mat& a);
Mat softplus(const Mat& a);
Mat sigmoid(const Mat& a);

void require_same_shape(const Mat& a, const Mat& b, const char* op);

}  // namespace haad::num
