#include "dch/kernels.hpp"
#include "dch/linalg.hpp"
#include "dch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dch {

namespace {

KMeansResult lloyd_once(const Matrix& X, int K, int max_iter, std::uint64_t seed) {
    const int n = X.rows(), d = X.cols();
    Rng rng(seed);
    Matrix centroids(K, d);

    // k-means++ seeding
    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    {
        const int first = static_cast<int>(rng.next_below(n));
        for (int c = 0; c < d; ++c) centroids(0, c) = X(first, c);
        for (int k = 1; k < K; ++k) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d2 = kernels::sqdist(X.row(i), centroids.row(k - 1), d);
                dist2[i] = std::min(dist2[i], d2);
                total += dist2[i];
            }
            int chosen = 0;
            if (total > 0.0) {
                double target = rng.next_double() * total;
                double acc = 0.0;
                for (int i = 0; i < n; ++i) {
                    acc += dist2[i];
                    if (acc >= target) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                chosen = static_cast<int>(rng.next_below(n));
            }
            for (int c = 0; c < d; ++c) centroids(k, c) = X(chosen, c);
        }
    }

    std::vector<int> labels(n, 0), counts(K);
    KMeansResult res;
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = kernels::sqdist(X.row(i), centroids.row(0), d);
            for (int k = 1; k < K; ++k) {
                const double d2 = kernels::sqdist(X.row(i), centroids.row(k), d);
                if (d2 < best_d) {  // ties keep the lowest index
                    best_d = d2;
                    best = k;
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        res.iterations = iter + 1;
        if (!changed && iter > 0) break;

        std::fill(counts.begin(), counts.end(), 0);
        for (int r = 0; r < K; ++r)
            for (int c = 0; c < d; ++c) centroids(r, c) = 0.0;
        for (int i = 0; i < n; ++i) {
            ++counts[labels[i]];
            kernels::axpy(1.0, X.row(i), centroids.row(labels[i]), d);
        }
        for (int k = 0; k < K; ++k) {
            if (counts[k] > 0) {
                kernels::scal(1.0 / counts[k], centroids.row(k), d);
            } else {
                // reseat an empty cluster on the point farthest from its centroid
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d2 = kernels::sqdist(X.row(i), centroids.row(labels[i]), d);
                    if (d2 > far_d) {
                        far_d = d2;
                        far = i;
                    }
                }
                for (int c = 0; c < d; ++c) centroids(k, c) = X(far, c);
            }
        }
        if (!changed) break;
    }

    res.labels = std::move(labels);
    res.inertia = 0.0;
    for (int i = 0; i < n; ++i)
        res.inertia += kernels::sqdist(X.row(i), centroids.row(res.labels[i]), d);
    return res;
}

} // namespace

KMeansResult kmeans(const Matrix& X, int K, int restarts, int max_iter, std::uint64_t seed) {
    if (K < 1) throw std::invalid_argument("kmeans: K must be >= 1");
    if (X.rows() < K) throw std::invalid_argument("kmeans: fewer points than clusters");
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        KMeansResult cur = lloyd_once(X, K, max_iter, derive_seed(seed, {0x6b6dULL, (std::uint64_t)r}));
        cur.restart = r;
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    return best;
}

std::vector<int> min_cost_assignment(const Matrix& cost) {
    if (cost.rows() != cost.cols()) throw std::invalid_argument("min_cost_assignment: square matrix required");
    const int n = cost.rows();
    // Hungarian algorithm with potentials, O(n^3)
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

} // namespace dch
