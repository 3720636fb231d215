#pragma once

#include <cstddef>

// Data-parallel inner loops used across the toolkit. Every kernel has a
// scalar reference implementation and, on x86-64, an AVX2 variant. The
// active variant is chosen once at startup from CPUID and can be forced
// with the environment variable DCH_KERNELS=scalar|avx2.
namespace dch::kernels {

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scal)(double, double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    // y = A x, A row-major rows x cols
    void (*matvec)(const double*, std::size_t, std::size_t, const double*, double*);
    // y = A^T x
    void (*matvec_t)(const double*, std::size_t, std::size_t, const double*, double*);
    // sum_i exp(-beta * (t_ref - t[i])), caller guarantees t[i] <= t_ref
    double (*sum_exp_decay)(const double*, std::size_t, double, double);
    const char* name;
};

namespace scalar {
extern const Ops ops;
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
extern const Ops ops;
bool supported();
}
#endif

// Active dispatch table (resolved on first call).
const Ops& active();
const char* isa_name();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline void scal(double alpha, double* x, std::size_t n) { active().scal(alpha, x, n); }
inline double sqdist(const double* a, const double* b, std::size_t n) { return active().sqdist(a, b, n); }
inline void matvec(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y) {
    active().matvec(A, rows, cols, x, y);
}
inline void matvec_t(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y) {
    active().matvec_t(A, rows, cols, x, y);
}
inline double sum_exp_decay(const double* t, std::size_t n, double beta, double t_ref) {
    return active().sum_exp_decay(t, n, beta, t_ref);
}

} // namespace dch::kernels
