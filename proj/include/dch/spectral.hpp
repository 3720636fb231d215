#pragma once

#include "dch/event_log.hpp"
#include "dch/linalg.hpp"
#include "dch/matrix.hpp"
#include "dch/membership.hpp"

#include <cstdint>
#include <vector>

namespace dch {

// Directed event counts N_T: entry (i,j) is the number of events i -> j in
// [0, T].
struct CountMatrix {
    std::vector<std::int64_t> counts;
    int n = 0;
    double horizon_T = 0.0;

    std::int64_t& at(int i, int j) { return counts[static_cast<std::size_t>(i) * n + j]; }
    std::int64_t at(int i, int j) const { return counts[static_cast<std::size_t>(i) * n + j]; }
    std::int64_t total() const;
    Matrix dense() const;
};

CountMatrix count_matrix(const EventLog& events);

struct SpectralOptions {
    double epsilon = 0.05;       // reported approximation slack, not enforced
    int kmeans_restarts = 10;
    int kmeans_max_iter = 300;
    std::uint64_t seed = 1;
    int dense_svd_limit = 2000;  // above this, randomized truncated SVD
    double zero_row_tol = 1e-12;
};

// Embedding produced by the clustering pipeline: top-K left/right singular
// vectors, their concatenation, and the row-normalized version restricted to
// nonzero rows.
struct SpectralEmbedding {
    Matrix X_L, X_R;
    Matrix X;        // n x 2K
    Matrix X_star;   // kept rows, unit norm
    std::vector<int> kept_rows;
    std::vector<int> zero_rows;
};

SpectralEmbedding spectral_embedding(const CountMatrix& N, int K, const SpectralOptions& opt = {});

// Spectral clustering on the count matrix: top-K SVD, concatenate left and
// right singular vectors, drop zero rows, row-normalize, k-means, and send
// zero rows to the first cluster.
Membership spectral_cluster(const CountMatrix& N, int K, const SpectralOptions& opt = {});

// Hubert-Arabie adjusted Rand index.
double ari(const Membership& z1, const Membership& z2);

// Minimum over label permutations of the disagreement fraction.
double misclustering_rate(const Membership& z_true, const Membership& z_hat);

// Label permutation of z_hat that best matches z_true (maximum agreement).
std::vector<int> best_label_permutation(const Membership& z_true, const Membership& z_hat);

// Largest singular value of N/1 - expected, by power iteration.
double spectral_norm_error(const CountMatrix& N, const Matrix& expected);

} // namespace dch
