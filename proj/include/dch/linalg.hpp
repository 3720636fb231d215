#pragma once

#include "dch/matrix.hpp"

#include <cstdint>
#include <vector>

namespace dch {

struct SVD {
    Matrix U;                            // rows x k, orthonormal columns
    std::vector<double> singular_values; // descending
    Matrix V;                            // cols x k, orthonormal columns
};

// One-sided Jacobi SVD of a dense matrix; deterministic, all singular
// triplets, singular vectors sign-canonicalized so the largest-magnitude
// entry of each column of U is positive.
SVD svd_dense(const Matrix& A, int max_sweeps = 60);

// Randomized truncated SVD (subspace iteration with oversampling), for
// matrices too large for the dense path. Deterministic for a fixed seed.
SVD svd_truncated(const Matrix& A, int rank, std::uint64_t seed, int oversample = 10,
                  int power_iters = 2);

// Largest singular value by power iteration on A^T A.
double spectral_norm(const Matrix& A, double tol = 1e-8, int max_iter = 10000,
                     std::uint64_t seed = 0x5eed);

struct KMeansResult {
    std::vector<int> labels;
    double inertia = 0.0;
    int iterations = 0;
    int restart = 0;
};

// k-means++ seeding with multiple restarts and Lloyd iterations; the best
// restart by within-cluster sum of squares wins, ties by restart index.
// Assignment ties break toward the lowest cluster index.
KMeansResult kmeans(const Matrix& X, int K, int restarts, int max_iter, std::uint64_t seed);

// Exact minimum-cost assignment (Hungarian algorithm) on a square cost
// matrix; returns the column assigned to each row.
std::vector<int> min_cost_assignment(const Matrix& cost);

} // namespace dch
