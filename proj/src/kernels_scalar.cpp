#include "dch/kernels.hpp"

#include <cmath>

namespace dch::kernels::scalar {

namespace {

double dot_(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double sqdist_(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void matvec_(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_(A + r * cols, x, cols);
}

void matvec_t_(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) axpy_(x[r], A + r * cols, y, cols);
}

double sum_exp_decay_(const double* t, std::size_t n, double beta, double t_ref) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(-beta * (t_ref - t[i]));
    return s;
}

} // namespace

const Ops ops = {dot_, axpy_, scal_, sqdist_, matvec_, matvec_t_, sum_exp_decay_, "scalar"};

} // namespace dch::kernels::scalar
