#include "haad/numcore/mat.hpp"

#include <algorithm>
#include <cmath>

#include "haad/error.hpp"
#include "haad/numcore/kernels.hpp"

namespace haad::num {

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionMismatch("Mat: data length " + std::to_string(data_.size()) +
                                " does not match " + shape_str());
    }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionMismatch("Mat: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

double Mat::value() const {
    if (rows_ != 1 || cols_ != 1) {
        throw ContractViolation("Mat::value on non-scalar " + shape_str());
    }
    return data_[0];
}

bool Mat::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Mat::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void Mat::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {
template <class F>
Mat map(const Mat& a, F f) {
    Mat out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
    return out;
}
}  // namespace

Mat relu(const Mat& a) {
    return map(a, [](double v) { return v > 0.0 ? v : 0.0; });
}
Mat softplus(const Mat& a) {
    return map(a, [](double v) { return softplus(v); });
}
Mat sigmoid(const Mat& a) {
    return map(a, [](double v) { return sigmoid(v); });
}

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionMismatch(std::string(op) + ": shapes " + a.shape_str() + " and " +
                                b.shape_str());
    }
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) {
        throw DimensionMismatch("matmul: " + a.shape_str() + " * " + b.shape_str());
    }
    const auto& k = kernels::active();
    Mat c(a.rows(), b.cols());
    const std::size_t m = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.data() + i * m;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            k.axpy(ci, a(i, j), b.data() + j * m, m);
        }
    }
    return c;
}

Mat matmul_bt(const Mat& a, const Mat& b) {
    if (a.cols() != b.cols()) {
        throw DimensionMismatch("matmul_bt: " + a.shape_str() + " * (" + b.shape_str() + ")^T");
    }
    const auto& k = kernels::active();
    Mat c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            c(i, j) = k.dot(a.row(i).data(), b.row(j).data(), a.cols());
        }
    }
    return c;
}

Mat matmul_at(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows()) {
        throw DimensionMismatch("matmul_at: (" + a.shape_str() + ")^T * " + b.shape_str());
    }
    const auto& k = kernels::active();
    Mat c(a.cols(), b.cols());
    const std::size_t m = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t i = 0; i < a.cols(); ++i) {
            k.axpy(c.data() + i * m, a(r, i), b.row(r).data(), m);
        }
    }
    return c;
}

Mat add_row_bias(const Mat& a, const Mat& bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols()) {
        throw DimensionMismatch("add_row_bias: " + a.shape_str() + " + " + bias.shape_str());
    }
    const auto& k = kernels::active();
    Mat out = a;
    for (std::size_t i = 0; i < a.rows(); ++i) k.axpy(out.row(i).data(), 1.0, bias.data(), a.cols());
    return out;
}

double frobenius_dot(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "frobenius_dot");
    return kernels::active().dot(a.data(), b.data(), a.size());
}

double frobenius_norm(const Mat& a) { return std::sqrt(frobenius_dot(a, a)); }

Mat add_scaled(const Mat& a, const Mat& b, double s) {
    require_same_shape(a, b, "add_scaled");
    Mat out = a;
    kernels::active().axpy(out.data(), s, b.data(), b.size());
    return out;
}

Mat hadamard(const Mat& a, const Mat& b) {
    require_same_shape(a, b, "hadamard");
    Mat out(a.rows(), a.cols());
    kernels::active().hadamard(out.data(), a.data(), b.data(), a.size());
    return out;
}

Mat scaled(const Mat& a, double s) {
    Mat out(a.rows(), a.cols());
    kernels::active().scale(out.data(), s, a.data(), a.size());
    return out;
}

Mat mul_row_broadcast(const Mat& a, const Mat& s) {
    if (s.rows() != a.rows() || s.cols() != 1) {
        throw DimensionMismatch("mul_row_broadcast: " + a.shape_str() + " by " + s.shape_str());
    }
    const auto& k = kernels::active();
    Mat out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        k.scale(out.row(i).data(), s(i, 0), a.row(i).data(), a.cols());
    }
    return out;
}

}  // namespace haad::num
