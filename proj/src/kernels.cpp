#include "hw/kernels.hpp"

#include <atomic>
#include <exception>

#ifdef HW_HAVE_OPENMP
#include <omp.h>
#endif

namespace hw::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() {
#ifdef HW_HAVE_OPENMP
    return g_parallel.load() && !omp_in_parallel();
#else
    return false;
#endif
}

void set_parallel(bool on) { g_parallel = on; }

void set_threads(int n) {
    g_parallel = n != 1;
#ifdef HW_HAVE_OPENMP
    if (n > 1) omp_set_num_threads(n);
#endif
}

int max_threads() {
#ifdef HW_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void for_each_index(int n, bool parallel, const std::function<void(int)>& fn) {
#ifdef HW_HAVE_OPENMP
    if (parallel) {
        std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < n; ++k) {
            try {
                fn(k);
            } catch (...) {
#pragma omp critical
                err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
        return;
    }
#endif
    (void)parallel;
    for (int k = 0; k < n; ++k) fn(k);
}

}  // namespace hw::kernels
