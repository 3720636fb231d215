#include "dch/spectral.hpp"

#include "dch/kernels.hpp"
#include "dch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dch {

std::int64_t CountMatrix::total() const {
    std::int64_t s = 0;
    for (std::int64_t c : counts) s += c;
    return s;
}

Matrix CountMatrix::dense() const {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = static_cast<double>(at(i, j));
    return m;
}

CountMatrix count_matrix(const EventLog& events) {
    events.validate();
    CountMatrix N;
    N.n = events.n;
    N.horizon_T = events.horizon_T;
    N.counts.assign(static_cast<std::size_t>(events.n) * events.n, 0);
    for (const Event& e : events.events) ++N.at(e.sender, e.receiver);
    return N;
}

SpectralEmbedding spectral_embedding(const CountMatrix& N, int K, const SpectralOptions& opt) {
    if (K < 1 || K > N.n) throw std::invalid_argument("spectral_embedding: need 1 <= K <= n");
    const Matrix A = N.dense();
    for (std::size_t i = 0; i < A.size(); ++i)
        if (!std::isfinite(A.data()[i]))
            throw std::invalid_argument("spectral_embedding: non-finite count entry");

    SVD svd = N.n <= opt.dense_svd_limit ? svd_dense(A)
                                         : svd_truncated(A, K, derive_seed(opt.seed, {0x53d5ULL}));

    SpectralEmbedding emb;
    emb.X_L = Matrix(N.n, K);
    emb.X_R = Matrix(N.n, K);
    for (int j = 0; j < K; ++j)
        for (int i = 0; i < N.n; ++i) {
            emb.X_L(i, j) = svd.U(i, j);
            emb.X_R(i, j) = svd.V(i, j);
        }
    emb.X = Matrix(N.n, 2 * K);
    for (int i = 0; i < N.n; ++i) {
        for (int j = 0; j < K; ++j) {
            emb.X(i, j) = emb.X_L(i, j);
            emb.X(i, K + j) = emb.X_R(i, j);
        }
    }
    for (int i = 0; i < N.n; ++i) {
        const double nrm = std::sqrt(kernels::dot(emb.X.row(i), emb.X.row(i), 2 * K));
        if (nrm < opt.zero_row_tol)
            emb.zero_rows.push_back(i);
        else
            emb.kept_rows.push_back(i);
    }
    emb.X_star = Matrix(static_cast<int>(emb.kept_rows.size()), 2 * K);
    for (std::size_t r = 0; r < emb.kept_rows.size(); ++r) {
        const int i = emb.kept_rows[r];
        const double nrm = std::sqrt(kernels::dot(emb.X.row(i), emb.X.row(i), 2 * K));
        for (int j = 0; j < 2 * K; ++j) emb.X_star(static_cast<int>(r), j) = emb.X(i, j) / nrm;
    }
    return emb;
}

Membership spectral_cluster(const CountMatrix& N, int K, const SpectralOptions& opt) {
    if (K < 1 || K > N.n) throw std::invalid_argument("spectral_cluster: need 1 <= K <= n");
    if (K == 1) return Membership(std::vector<int>(N.n, 0), 1);

    const SpectralEmbedding emb = spectral_embedding(N, K, opt);
    std::vector<int> labels(N.n, 0);  // zero rows go to the first cluster
    if (static_cast<int>(emb.kept_rows.size()) >= K) {
        const KMeansResult km = kmeans(emb.X_star, K, opt.kmeans_restarts, opt.kmeans_max_iter,
                                       derive_seed(opt.seed, {0x6b6d5eedULL}));
        for (std::size_t r = 0; r < emb.kept_rows.size(); ++r)
            labels[emb.kept_rows[r]] = km.labels[r];
    }
    return Membership(std::move(labels), K);
}

namespace {

Matrix contingency(const Membership& z1, const Membership& z2) {
    Matrix c(z1.K, z2.K);
    for (int i = 0; i < z1.n(); ++i) c(z1.z[i], z2.z[i]) += 1.0;
    return c;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

} // namespace

double ari(const Membership& z1, const Membership& z2) {
    if (z1.n() != z2.n()) throw std::invalid_argument("ari: membership length mismatch");
    const int n = z1.n();
    const Matrix c = contingency(z1, z2);
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (int a = 0; a < z1.K; ++a) {
        double row = 0.0;
        for (int b = 0; b < z2.K; ++b) {
            sum_cells += choose2(c(a, b));
            row += c(a, b);
        }
        sum_rows += choose2(row);
    }
    for (int b = 0; b < z2.K; ++b) {
        double col = 0.0;
        for (int a = 0; a < z1.K; ++a) col += c(a, b);
        sum_cols += choose2(col);
    }
    const double expected = sum_rows * sum_cols / choose2(static_cast<double>(n));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both partitions trivial
    return (sum_cells - expected) / (max_index - expected);
}

std::vector<int> best_label_permutation(const Membership& z_true, const Membership& z_hat) {
    if (z_true.n() != z_hat.n())
        throw std::invalid_argument("best_label_permutation: length mismatch");
    const int K = std::max(z_true.K, z_hat.K);
    Matrix agree(K, K);
    for (int i = 0; i < z_true.n(); ++i) agree(z_hat.z[i], z_true.z[i]) += 1.0;
    Matrix cost(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) cost(a, b) = -agree(a, b);
    return min_cost_assignment(cost);  // hat label -> true label
}

double misclustering_rate(const Membership& z_true, const Membership& z_hat) {
    if (z_true.n() != z_hat.n()) throw std::invalid_argument("misclustering_rate: length mismatch");
    const std::vector<int> perm = best_label_permutation(z_true, z_hat);
    int disagreements = 0;
    for (int i = 0; i < z_true.n(); ++i)
        if (perm[z_hat.z[i]] != z_true.z[i]) ++disagreements;
    return static_cast<double>(disagreements) / z_true.n();
}

double spectral_norm_error(const CountMatrix& N, const Matrix& expected) {
    if (expected.rows() != N.n || expected.cols() != N.n)
        throw std::invalid_argument("spectral_norm_error: shape mismatch");
    Matrix delta = N.dense();
    for (int i = 0; i < N.n; ++i)
        for (int j = 0; j < N.n; ++j) delta(i, j) -= expected(i, j);
    return spectral_norm(delta);
}

} // namespace dch
