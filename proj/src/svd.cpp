#include "dch/kernels.hpp"
#include "dch/linalg.hpp"
#include "dch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dch {

namespace {

// columns stored contiguously
struct ColMat {
    int rows = 0;
    std::vector<std::vector<double>> col;

    ColMat(const Matrix& A) : rows(A.rows()), col(A.cols(), std::vector<double>(A.rows())) {
        for (int r = 0; r < A.rows(); ++r)
            for (int c = 0; c < A.cols(); ++c) col[c][r] = A(r, c);
    }
};

void rotate(std::vector<double>& p, std::vector<double>& q, double c, double s) {
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double pi = p[i], qi = q[i];
        p[i] = c * pi - s * qi;
        q[i] = s * pi + c * qi;
    }
}

void canonicalize_sign(Matrix& U, Matrix& V, int k) {
    for (int j = 0; j < k; ++j) {
        int arg = 0;
        double best = -1.0;
        for (int i = 0; i < U.rows(); ++i) {
            const double m = std::abs(U(i, j));
            if (m > best) {
                best = m;
                arg = i;
            }
        }
        if (U(arg, j) < 0.0) {
            for (int i = 0; i < U.rows(); ++i) U(i, j) = -U(i, j);
            for (int i = 0; i < V.rows(); ++i) V(i, j) = -V(i, j);
        }
    }
}

SVD svd_jacobi(const Matrix& A) {
    const int m = A.rows(), n = A.cols();
    ColMat W(A);
    Matrix V = Matrix::identity(n);
    std::vector<std::vector<double>> vcol(n, std::vector<double>(n, 0.0));
    for (int j = 0; j < n; ++j) vcol[j][j] = 1.0;

    const double eps = 1e-14;
    for (int sweep = 0; sweep < 60; ++sweep) {
        int rotations = 0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double app = kernels::dot(W.col[p].data(), W.col[p].data(), m);
                const double aqq = kernels::dot(W.col[q].data(), W.col[q].data(), m);
                const double apq = kernels::dot(W.col[p].data(), W.col[q].data(), m);
                if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate(W.col[p], W.col[q], c, s);
                rotate(vcol[p], vcol[q], c, s);
                ++rotations;
            }
        }
        if (rotations == 0) break;
    }

    std::vector<double> sigma(n);
    for (int j = 0; j < n; ++j)
        sigma[j] = std::sqrt(kernels::dot(W.col[j].data(), W.col[j].data(), m));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return sigma[i] > sigma[j]; });

    SVD out;
    out.U = Matrix(m, n);
    out.V = Matrix(n, n);
    out.singular_values.resize(n);
    for (int j = 0; j < n; ++j) {
        const int src = order[j];
        out.singular_values[j] = sigma[src];
        if (sigma[src] > 0.0) {
            const double inv = 1.0 / sigma[src];
            for (int i = 0; i < m; ++i) out.U(i, j) = W.col[src][i] * inv;
        }
        for (int i = 0; i < n; ++i) out.V(i, j) = vcol[src][i];
    }
    canonicalize_sign(out.U, out.V, n);
    return out;
}

// thin orthonormal basis of the columns; a second projection pass keeps
// rank-deficient inputs from amplifying rounding noise, and columns that
// collapse into the span of earlier ones are zeroed
void orthonormalize(std::vector<std::vector<double>>& cols) {
    const std::size_t m = cols.empty() ? 0 : cols[0].size();
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const double before = std::sqrt(kernels::dot(cols[j].data(), cols[j].data(), m));
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < j; ++i) {
                const double proj = kernels::dot(cols[i].data(), cols[j].data(), m);
                kernels::axpy(-proj, cols[i].data(), cols[j].data(), m);
            }
        }
        const double after = std::sqrt(kernels::dot(cols[j].data(), cols[j].data(), m));
        if (after > 1e-10 * before && after > 0.0)
            kernels::scal(1.0 / after, cols[j].data(), m);
        else
            std::fill(cols[j].begin(), cols[j].end(), 0.0);
    }
}

} // namespace

SVD svd_dense(const Matrix& A, int) {
    if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("svd_dense: empty matrix");
    if (A.rows() >= A.cols()) return svd_jacobi(A);
    // transpose, factorize, swap
    Matrix At(A.cols(), A.rows());
    for (int r = 0; r < A.rows(); ++r)
        for (int c = 0; c < A.cols(); ++c) At(c, r) = A(r, c);
    SVD s = svd_jacobi(At);
    std::swap(s.U, s.V);
    canonicalize_sign(s.U, s.V, static_cast<int>(s.singular_values.size()));
    return s;
}

SVD svd_truncated(const Matrix& A, int rank, std::uint64_t seed, int oversample,
                  int power_iters) {
    const int m = A.rows(), n = A.cols();
    if (rank < 1) throw std::invalid_argument("svd_truncated: rank must be >= 1");
    const int L = std::min(n, rank + oversample);
    Rng rng(seed);

    std::vector<std::vector<double>> Y(L, std::vector<double>(m));
    {
        Matrix G(n, L);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < L; ++j) G(i, j) = rng.normal();
        std::vector<double> g(n);
        for (int j = 0; j < L; ++j) {
            for (int i = 0; i < n; ++i) g[i] = G(i, j);
            kernels::matvec(A.data(), m, n, g.data(), Y[j].data());
        }
    }
    orthonormalize(Y);
    std::vector<double> tmp(n);
    for (int it = 0; it < power_iters; ++it) {
        for (auto& y : Y) {
            kernels::matvec_t(A.data(), m, n, y.data(), tmp.data());
            kernels::matvec(A.data(), m, n, tmp.data(), y.data());
        }
        orthonormalize(Y);
    }

    // B = Q^T A, stored transposed (n x L) for the small Jacobi factorization
    Matrix Bt(n, L);
    for (int j = 0; j < L; ++j) {
        kernels::matvec_t(A.data(), m, n, Y[j].data(), tmp.data());
        for (int i = 0; i < n; ++i) Bt(i, j) = tmp[i];
    }
    SVD small = svd_jacobi(Bt);  // Bt = Ub S Vb^T, so B = Vb S Ub^T

    const int k = std::min(rank, L);
    SVD out;
    out.U = Matrix(m, k);
    out.V = Matrix(n, k);
    out.singular_values.assign(small.singular_values.begin(),
                               small.singular_values.begin() + k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int l = 0; l < L; ++l) acc += Y[l][i] * small.V(l, j);
            out.U(i, j) = acc;
        }
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i) out.V(i, j) = small.U(i, j);
    canonicalize_sign(out.U, out.V, k);
    return out;
}

double spectral_norm(const Matrix& A, double tol, int max_iter, std::uint64_t seed) {
    const int m = A.rows(), n = A.cols();
    if (m == 0 || n == 0) return 0.0;
    Rng rng(seed);
    std::vector<double> v(n), av(m), atav(n);
    for (double& x : v) x = rng.normal();
    double nv = std::sqrt(kernels::dot(v.data(), v.data(), n));
    if (nv == 0.0) return 0.0;
    kernels::scal(1.0 / nv, v.data(), n);

    double sigma = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        kernels::matvec(A.data(), m, n, v.data(), av.data());
        const double s = std::sqrt(kernels::dot(av.data(), av.data(), m));
        if (s == 0.0) return 0.0;
        kernels::matvec_t(A.data(), m, n, av.data(), atav.data());
        const double nn = std::sqrt(kernels::dot(atav.data(), atav.data(), n));
        if (nn == 0.0) return s;
        for (int i = 0; i < n; ++i) v[i] = atav[i] / nn;
        if (std::abs(s - sigma) <= tol * std::max(1.0, s)) return s;
        sigma = s;
    }
    return sigma;
}

} // namespace dch
