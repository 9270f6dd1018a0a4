// OpenBLAS picks its compute kernels from CPUID at library load. Inside
// VMs and containers that mask the CPU model it can fall back to a
// pre-AVX kernel several times slower than what the hardware supports.
// The library constructor below detects that case, pins a matching
// kernel family through OPENBLAS_CORETYPE, and re-executes the process
// once so the BLAS initializer sees it. It does nothing when the user
// already chose a core type, when the fallback is not one of the known
// generic kernels, or when the CPU lacks AVX2.
//
// Set SDESR_NO_BLAS_REEXEC=1 to disable.

// anchor referenced from sde.cpp so the archive member is always linked
extern "C" int sdesr_blas_select_anchor = 0;

#if defined(__linux__) && defined(__x86_64__)

#include <cstdlib>
#include <cstring>
#include <unistd.h>

extern "C" char* openblas_get_corename(void);

namespace {

bool is_pre_avx_fallback(const char* core) {
    static const char* fallbacks[] = {"Prescott", "Northwood", "Katmai",  "Coppermine",
                                      "Banias",   "Atom",      "Core2",   "Nehalem",
                                      "Sandybridge", "generic"};
    for (const char* f : fallbacks)
        if (std::strcmp(core, f) == 0) return true;
    return false;
}

__attribute__((constructor)) void select_blas_core(int argc, char** argv, char** /*envp*/) {
    if (std::getenv("OPENBLAS_CORETYPE") || std::getenv("SDESR_NO_BLAS_REEXEC")) return;
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return;
    if (!is_pre_avx_fallback(openblas_get_corename())) return;

    const bool avx512 = __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512vl") &&
                        __builtin_cpu_supports("avx512bw") && __builtin_cpu_supports("avx512dq");
    setenv("OPENBLAS_CORETYPE", avx512 ? "SKYLAKEX" : "HASWELL", 1);
    if (argc > 0 && argv && argv[0]) {
        execv("/proc/self/exe", argv);
        // exec failed: continue on the slow kernel
    }
}

}  // namespace

#endif
