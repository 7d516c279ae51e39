#include <atomic>
#include <cstdlib>

#include "haad/numcore/kernels.hpp"
#include "kernels_impl.hpp"

namespace haad::num::kernels {
namespace {

constexpr KernelTable kScalar{"scalar", &scalar::dot, &scalar::axpy, &scalar::hadamard,
                              &scalar::scale};

#if defined(HAAD_HAVE_AVX2)
constexpr KernelTable kAvx2{"avx2", &avx2::dot, &avx2::axpy, &avx2::hadamard, &avx2::scale};

bool cpu_has_avx2() noexcept {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}
#endif

const KernelTable* best_available() noexcept {
    if (const KernelTable* t = avx2_table()) return t;
    return &kScalar;
}

const KernelTable* initial_table() noexcept {
    if (const char* env = std::getenv("HAAD_KERNELS")) {
        const std::string_view name(env);
        if (name == "scalar") return &kScalar;
        if (name == "avx2" && avx2_table() != nullptr) return avx2_table();
    }
    return best_available();
}

std::atomic<const KernelTable*>& active_slot() noexcept {
    static std::atomic<const KernelTable*> slot{initial_table()};
    return slot;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(HAAD_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() noexcept { return *active_slot().load(std::memory_order_relaxed); }

bool select(std::string_view name) noexcept {
    const KernelTable* t = nullptr;
    if (name == "scalar") {
        t = &kScalar;
    } else if (name == "avx2") {
        t = avx2_table();
    } else if (name == "auto") {
        t = best_available();
    }
    if (t == nullptr) return false;
    active_slot().store(t, std::memory_order_relaxed);
    return true;
}

ScopedKernels::ScopedKernels(const KernelTable& table) noexcept : previous_(&active()) {
    active_slot().store(&table, std::memory_order_relaxed);
}

ScopedKernels::~ScopedKernels() { active_slot().store(previous_, std::memory_order_relaxed); }

}  // namespace haad::num::kernels
