// Runtime selection of the kernel set.

#include "sbl/simd/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace sbl::simd {

#if defined(SBL_HAVE_AVX2)
namespace detail {
const KernelSet& avx2_kernel_set();
}
#endif

const KernelSet* avx2_kernels() {
#if defined(SBL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok ? &detail::avx2_kernel_set() : nullptr;
#else
    return nullptr;
#endif
}

const KernelSet& kernels() {
    static const KernelSet& chosen = [] () -> const KernelSet& {
        const char* env = std::getenv("SBL_SIMD");
        if (env && std::strcmp(env, "scalar") == 0) return scalar_kernels();
        if (const KernelSet* v = avx2_kernels()) return *v;
        return scalar_kernels();
    }();
    return chosen;
}

} // namespace sbl::simd
