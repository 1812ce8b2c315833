#ifndef LEAPMOOD_PARALLEL_HPP
#define LEAPMOOD_PARALLEL_HPP

#ifdef _OPENMP
#include <omp.h>
#endif

namespace leapmood {

inline int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Clamp a requested thread count to something usable. 0 means "all".
inline int effective_threads(int requested) {
    const int hw = hardware_threads();
    if (requested <= 0) return hw;
    return requested < hw ? requested : hw;
}

}  // namespace leapmood

#endif
