#pragma once

// Inner-loop kernels behind every dense operation. Each instruction-set
// variant fills one KernelTable; the active table is picked once at startup
// from CPUID (override with HAAD_KERNELS=scalar|avx2) and can be switched
// explicitly for equivalence testing.
//
// Variants agree to rounding, not bit-for-bit: the AVX2 reductions use four
// partial sums and fused multiply-add. Determinism holds within one variant.

#include <cstddef>
#include <string_view>

namespace haad::num::kernels {

struct KernelTable {
    const char* name;
    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*axpy)(double* y, double alpha, const double* x, std::size_t n);
    /// z[i] = x[i] * y[i]; z may alias x or y
    void (*hadamard)(double* z, const double* x, const double* y, std::size_t n);
    /// z[i] = alpha * x[i]; z may alias x
    void (*scale)(double* z, double alpha, const double* x, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

/// nullptr when the build has no AVX2 variant or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table() noexcept;

const KernelTable& active() noexcept;

/// Selects "scalar", "avx2" or "auto". Returns false if the name is unknown
/// or the variant is unavailable; the active table is left unchanged then.
bool select(std::string_view name) noexcept;

/// RAII switch used by tests to pin a variant for one scope.
class ScopedKernels {
public:
    explicit ScopedKernels(const KernelTable& table) noexcept;
    ~ScopedKernels();
    ScopedKernels(const ScopedKernels&) = delete;
    ScopedKernels& operator=(const ScopedKernels&) = delete;

private:
    const KernelTable* previous_;
};

}  // namespace haad::num::kernels
