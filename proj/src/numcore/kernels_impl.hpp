#pragma once

// Private declarations of the per-ISA kernel variants. Kept free of any
// template or inline code so that the AVX2 translation unit cannot leak
// AVX2-compiled inline definitions into the rest of the program.

#include <cstddef>

namespace haad::num::kernels::scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double* y, double alpha, const double* x, std::size_t n);
void hadamard(double* z, const double* x, const double* y, std::size_t n);
void scale(double* z, double alpha, const double* x, std::size_t n);
}  // namespace haad::num::kernels::scalar

#if defined(HAAD_HAVE_AVX2)
namespace haad::num::kernels::avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double* y, double alpha, const double* x, std::size_t n);
void hadamard(double* z, const double* x, const double* y, std::size_t n);
void scale(double* z, double alpha, const double* x, std::size_t n);
}  // namespace haad::num::kernels::avx2
#endif
