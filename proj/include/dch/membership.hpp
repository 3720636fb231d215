#pragma once

#include <stdexcept>
#include <vector>

namespace dch {

// Node-to-community assignment. Labels are 0-based: z[i] in {0, ..., K-1}.
struct Membership {
    std::vector<int> z;
    int K = 0;

    Membership() = default;
    Membership(std::vector<int> labels, int k) : z(std::move(labels)), K(k) { validate(); }

    int n() const { return static_cast<int>(z.size()); }

    void validate() const {
        if (K < 1) throw std::invalid_argument("Membership: K must be >= 1");
        if (static_cast<int>(z.size()) < K)
            throw std::invalid_argument("Membership: need n >= K");
        for (int zi : z)
            if (zi < 0 || zi >= K)
                throw std::invalid_argument("Membership: label out of range");
    }

    std::vector<int> block_sizes() const {
        std::vector<int> sz(K, 0);
        for (int zi : z) ++sz[zi];
        return sz;
    }

    std::vector<std::vector<int>> blocks() const {
        std::vector<std::vector<int>> b(K);
        for (int i = 0; i < n(); ++i) b[z[i]].push_back(i);
        return b;
    }

    // Contiguous near-equal blocks: the first (n mod K) blocks get one extra node.
    static Membership balanced(int n, int K) {
        if (K < 1 || n < K) throw std::invalid_argument("Membership::balanced: need n >= K >= 1");
        std::vector<int> z(n);
        const int base = n / K, extra = n % K;
        int node = 0;
        for (int a = 0; a < K; ++a) {
            const int size = base + (a < extra ? 1 : 0);
            for (int s = 0; s < size; ++s) z[node++] = a;
        }
        return Membership(std::move(z), K);
    }
};

} // namespace dch
