#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace dch {

// SplitMix64. One generator per dyad / block pair / replicate, each derived
// from the master seed by hashing a stream id, so simulations are
// reproducible regardless of execution order.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1], safe as a log argument
    double next_positive() { return 1.0 - next_double(); }

    double exponential(double rate) { return -std::log(next_positive()) / rate; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u = next_positive();
        const double v = next_double();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double theta = 6.283185307179586476925 * v;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // unbiased integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

  private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Documented stream-derivation scheme: fold each id into the seed through
// one SplitMix64 step. derive_seed(s, {a,b}) != derive_seed(s, {b,a}).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) {
    Rng r(base);
    std::uint64_t s = r.next_u64();
    for (std::uint64_t id : ids) {
        Rng ri(s ^ (id + 0x9e3779b97f4a7c15ULL));
        s = ri.next_u64();
    }
    return s;
}

} // namespace dch
