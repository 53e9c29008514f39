#include "forge/sweep.hpp"

#include <cstdlib>
#include <string>

namespace forge {

int sweep_threads() {
    static const int n = [] {
        if (const char* s = std::getenv("FORGE_THREADS")) {
            try {
                int v = std::stoi(s);
                if (v >= 1) return v;
            } catch (...) {
            }
        }
#ifdef FORGE_HAVE_OPENMP
        return omp_get_max_threads();
#else
        return 1;
#endif
    }();
    return n;
}

}  // namespace forge
