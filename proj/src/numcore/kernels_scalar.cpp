#include "kernels_impl.hpp"

namespace haad::num::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double* y, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard(double* z, const double* x, const double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void scale(double* z, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) z[i] = alpha * x[i];
}

}  // namespace haad::num::kernels::scalar
