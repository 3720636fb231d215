#include "dch/simulate.hpp"

#include "dch/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace dch {

namespace {

constexpr std::uint64_t kSrTag = 0x5172;
constexpr std::uint64_t kChipTag = 0xc417;
constexpr std::uint64_t kBhmTag = 0xb411;
constexpr std::uint64_t kMulchTag = 0x301c;

void require_horizon(double T) {
    if (!(T > 0.0)) throw std::invalid_argument("simulate: horizon T must be positive");
}

EventLog finalize(std::vector<Event> events, double T, double burn, int n) {
    EventLog log;
    log.n = n;
    log.horizon_T = T;
    if (burn > 0.0) {
        std::vector<Event> kept;
        kept.reserve(events.size());
        for (Event& e : events) {
            if (e.time < burn) continue;
            e.time -= burn;
            kept.push_back(e);
        }
        events = std::move(kept);
    }
    std::sort(events.begin(), events.end(), EventLog::time_order);
    log.events = std::move(events);
    return log;
}

// Bivariate (or univariate when i == j) dyad sampler for the SR intensity.
void simulate_dyad_sr(int i, int j, const SRParams& p, int a, int b, double t_end, Rng rng,
                      std::vector<Event>& out) {
    const double mu0 = p.M(a, b), an0 = p.alpha_n(a, b), ar0 = p.alpha_r(a, b);
    const double bn0 = p.beta_n(a, b), br0 = p.beta_r(a, b);
    const double mu1 = p.M(b, a), an1 = p.alpha_n(b, a), ar1 = p.alpha_r(b, a);
    const double bn1 = p.beta_n(b, a), br1 = p.beta_r(b, a);
    const bool self_pair = i == j;

    double t = 0.0;
    double sn0 = 0.0, sr0 = 0.0, sn1 = 0.0, sr1 = 0.0;
    while (true) {
        const double lam0 = mu0 + an0 * bn0 * sn0 + ar0 * br0 * sr0;
        const double lam1 = self_pair ? 0.0 : mu1 + an1 * bn1 * sn1 + ar1 * br1 * sr1;
        const double bound = lam0 + lam1;
        if (bound <= 0.0) return;
        const double w = rng.exponential(bound);
        t += w;
        if (t > t_end) return;
        sn0 *= std::exp(-bn0 * w);
        sr0 *= std::exp(-br0 * w);
        if (!self_pair) {
            sn1 *= std::exp(-bn1 * w);
            sr1 *= std::exp(-br1 * w);
        }
        const double l0 = mu0 + an0 * bn0 * sn0 + ar0 * br0 * sr0;
        const double l1 = self_pair ? 0.0 : mu1 + an1 * bn1 * sn1 + ar1 * br1 * sr1;
        const double u = rng.next_double() * bound;
        if (u < l0) {
            out.push_back({i, j, t});
            sn0 += 1.0;
            if (self_pair)
                sr0 += 1.0;
            else
                sr1 += 1.0;
        } else if (u < l0 + l1) {
            out.push_back({j, i, t});
            sn1 += 1.0;
            sr0 += 1.0;
        }
    }
}

} // namespace

EventLog simulate_sr(const SRParams& params, const Membership& z, double T, const SimConfig& cfg) {
    params.validate();
    z.validate();
    cfg.validate();
    require_horizon(T);
    if (params.K() != z.K) throw std::invalid_argument("simulate_sr: params/membership K mismatch");
    for (int a = 0; a < z.K; ++a)
        for (int b = a; b < z.K; ++b)
            if (!stability_check(params.alpha_n(a, b), params.alpha_n(b, a), params.alpha_r(a, b),
                                 params.alpha_r(b, a), cfg.sigma_star)
                     .stable)
                throw std::domain_error("simulate_sr: unstable block pair");

    const double t_end = T + cfg.burn_in;
    std::vector<Event> events;
    const int n = z.n();
    for (int i = 0; i < n; ++i) {
        for (int j = i + (cfg.allow_self_edges ? 0 : 1); j < n; ++j) {
            Rng rng(derive_seed(cfg.seed, {kSrTag, (std::uint64_t)i, (std::uint64_t)j}));
            simulate_dyad_sr(i, j, params, z.z[i], z.z[j], t_end, rng, events);
        }
    }
    return finalize(std::move(events), T, cfg.burn_in, n);
}

EventLog simulate_chip(const SRParams& params, const Membership& z, double T,
                       const SimConfig& cfg) {
    params.validate();
    z.validate();
    cfg.validate();
    require_horizon(T);
    if (params.K() != z.K)
        throw std::invalid_argument("simulate_chip: params/membership K mismatch");
    for (int a = 0; a < z.K; ++a)
        for (int b = 0; b < z.K; ++b)
            if (!(params.alpha_n(a, b) <= cfg.sigma_star))
                throw std::domain_error("simulate_chip: unstable pair, alpha_n > sigma*");

    const double t_end = T + cfg.burn_in;
    std::vector<Event> events;
    const int n = z.n();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j && !cfg.allow_self_edges) continue;
            Rng rng(derive_seed(cfg.seed, {kChipTag, (std::uint64_t)i, (std::uint64_t)j}));
            const int a = z.z[i], b = z.z[j];
            const double mu = params.M(a, b), alpha = params.alpha_n(a, b),
                         beta = params.beta_n(a, b);
            double t = 0.0, s = 0.0;
            while (true) {
                const double bound = mu + alpha * beta * s;
                if (bound <= 0.0) break;
                const double w = rng.exponential(bound);
                t += w;
                if (t > t_end) break;
                s *= std::exp(-beta * w);
                const double lam = mu + alpha * beta * s;
                if (rng.next_double() * bound < lam) {
                    events.push_back({i, j, t});
                    s += 1.0;
                }
            }
        }
    }
    return finalize(std::move(events), T, cfg.burn_in, n);
}

EventLog simulate_bhm(const SRParams& params, const Membership& z, double T, const SimConfig& cfg) {
    params.validate();
    z.validate();
    cfg.validate();
    require_horizon(T);
    if (params.K() != z.K) throw std::invalid_argument("simulate_bhm: params/membership K mismatch");
    for (int a = 0; a < z.K; ++a)
        for (int b = 0; b < z.K; ++b)
            if (!(params.alpha_n(a, b) <= cfg.sigma_star))
                throw std::domain_error("simulate_bhm: unstable pair, alpha_n > sigma*");

    const auto blocks = z.blocks();
    const double t_end = T + cfg.burn_in;
    std::vector<Event> events;
    for (int a = 0; a < z.K; ++a) {
        for (int b = 0; b < z.K; ++b) {
            std::vector<std::pair<int, int>> dims;
            for (int i : blocks[a])
                for (int j : blocks[b])
                    if (i != j || cfg.allow_self_edges) dims.emplace_back(i, j);
            if (dims.empty()) continue;
            Rng rng(derive_seed(cfg.seed, {kBhmTag, (std::uint64_t)a, (std::uint64_t)b}));
            const double base = static_cast<double>(dims.size()) * params.M(a, b);
            const double alpha = params.alpha_n(a, b), beta = params.beta_n(a, b);
            double t = 0.0, s = 0.0;
            while (true) {
                const double bound = base + alpha * beta * s;
                if (bound <= 0.0) break;
                const double w = rng.exponential(bound);
                t += w;
                if (t > t_end) break;
                s *= std::exp(-beta * w);
                const double lam = base + alpha * beta * s;
                if (rng.next_double() * bound < lam) {
                    const auto& pr = dims[rng.next_below(dims.size())];
                    events.push_back({pr.first, pr.second, t});
                    s += 1.0;
                }
            }
        }
    }
    return finalize(std::move(events), T, cfg.burn_in, z.n());
}

namespace {

// One unordered block pair of the MULCH model: a multivariate thinning run
// over all ordered pairs in the pair, with one decay accumulator per
// (dimension, excitation type).
struct MulchBlockPair {
    struct Dim {
        int sender, receiver;
        int dir;  // 0: X = (a,b), 1: X = (b,a)
    };
    std::vector<Dim> dims;
    std::vector<int> dim_of_pair;  // (sender * n + receiver) -> dim index, -1 if absent
    double mu[2];
    double alpha[2][6], beta[2][6];
    double base_total = 0.0;
    std::vector<std::array<double, 6>> S;
    double tot[2][6] = {};
};

enum { kN = 0, kR = 1, kTc = 2, kAc = 3, kGr = 4, kAr = 5 };

} // namespace

EventLog simulate_mulch(const MULCHParams& params, const Membership& z, double T,
                        const SimConfig& cfg) {
    params.validate();
    z.validate();
    cfg.validate();
    require_horizon(T);
    if (params.K() != z.K)
        throw std::invalid_argument("simulate_mulch: params/membership K mismatch");
    if (cfg.allow_self_edges)
        throw std::invalid_argument("simulate_mulch: self edges are not supported for MULCH");
    const ExcitationOperator op = build_excitation(params, z, false);
    if (!(op.spectral_radius() <= cfg.sigma_star))
        throw std::domain_error("simulate_mulch: unstable model, rho(Gamma) > sigma*");

    const auto blocks = z.blocks();
    const int n = z.n();
    const double t_end = T + cfg.burn_in;
    std::vector<Event> events;

    for (int a = 0; a < z.K; ++a) {
        for (int b = a; b < z.K; ++b) {
            MulchBlockPair bp;
            bp.dim_of_pair.assign(static_cast<std::size_t>(n) * n, -1);
            auto add_dims = [&](int ba, int bb, int dir) {
                for (int i : blocks[ba])
                    for (int j : blocks[bb]) {
                        if (i == j) continue;
                        bp.dim_of_pair[static_cast<std::size_t>(i) * n + j] =
                            static_cast<int>(bp.dims.size());
                        bp.dims.push_back({i, j, dir});
                    }
            };
            add_dims(a, b, 0);
            if (a != b) add_dims(b, a, 1);
            if (bp.dims.empty()) continue;

            for (int dir = 0; dir < 2; ++dir) {
                const int pa = dir == 0 ? a : b, pb = dir == 0 ? b : a;
                bp.mu[dir] = params.mu(pa, pb);
                bp.alpha[dir][kN] = params.alpha_n(pa, pb);
                bp.alpha[dir][kR] = params.alpha_r(pa, pb);
                bp.alpha[dir][kTc] = params.alpha_tc(pa, pb);
                bp.alpha[dir][kAc] = params.alpha_ac(pa, pb);
                bp.alpha[dir][kGr] = params.alpha_gr(pa, pb);
                bp.alpha[dir][kAr] = params.alpha_ar(pa, pb);
                bp.beta[dir][kN] = params.beta_n(pa, pb);
                bp.beta[dir][kR] = params.beta_r(pa, pb);
                bp.beta[dir][kTc] = params.beta_tc(pa, pb);
                bp.beta[dir][kAc] = params.beta_ac(pa, pb);
                bp.beta[dir][kGr] = params.beta_gr(pa, pb);
                bp.beta[dir][kAr] = params.beta_ar(pa, pb);
            }
            for (const auto& d : bp.dims) bp.base_total += bp.mu[d.dir];
            bp.S.assign(bp.dims.size(), {});

            Rng rng(derive_seed(cfg.seed, {kMulchTag, (std::uint64_t)a, (std::uint64_t)b}));
            double t_sync = 0.0, t_cur = 0.0;
            auto total_intensity = [&](double t) {
                double lam = bp.base_total;
                for (int dir = 0; dir < 2; ++dir)
                    for (int k = 0; k < 6; ++k)
                        if (bp.tot[dir][k] > 0.0)
                            lam += bp.alpha[dir][k] * bp.beta[dir][k] *
                                   std::exp(-bp.beta[dir][k] * (t - t_sync)) * bp.tot[dir][k];
                return lam;
            };

            double bound = total_intensity(0.0);
            while (bound > 0.0) {
                const double w = rng.exponential(bound);
                t_cur += w;
                if (t_cur > t_end) break;
                const double lam = total_intensity(t_cur);
                const double u = rng.next_double() * bound;
                if (u >= lam) {
                    bound = lam;
                    continue;
                }
                // accepted: locate the dimension by cumulative intensity
                int chosen = static_cast<int>(bp.dims.size()) - 1;
                {
                    double decay[2][6];
                    for (int dir = 0; dir < 2; ++dir)
                        for (int k = 0; k < 6; ++k)
                            decay[dir][k] = bp.alpha[dir][k] * bp.beta[dir][k] *
                                            std::exp(-bp.beta[dir][k] * (t_cur - t_sync));
                    double acc = 0.0;
                    for (std::size_t d = 0; d < bp.dims.size(); ++d) {
                        const int dir = bp.dims[d].dir;
                        double lam_d = bp.mu[dir];
                        for (int k = 0; k < 6; ++k) lam_d += decay[dir][k] * bp.S[d][k];
                        acc += lam_d;
                        if (u < acc) {
                            chosen = static_cast<int>(d);
                            break;
                        }
                    }
                }
                const int x = bp.dims[chosen].sender, y = bp.dims[chosen].receiver;
                events.push_back({x, y, t_cur});

                // sync all accumulators to the event time, then add the jump
                for (std::size_t d = 0; d < bp.dims.size(); ++d) {
                    const int dir = bp.dims[d].dir;
                    for (int k = 0; k < 6; ++k)
                        bp.S[d][k] *= std::exp(-bp.beta[dir][k] * (t_cur - t_sync));
                }
                auto bump = [&](int i, int j, int type) {
                    const int d = bp.dim_of_pair[static_cast<std::size_t>(i) * n + j];
                    if (d >= 0) bp.S[d][type] += 1.0;
                };
                bump(x, y, kN);
                bump(y, x, kR);
                for (int yp : blocks[z.z[y]])
                    if (yp != y && yp != x) bump(x, yp, kTc);
                for (int xp : blocks[z.z[x]])
                    if (xp != x && xp != y) bump(xp, y, kAc);
                for (int w2 : blocks[z.z[x]])
                    if (w2 != x && w2 != y) bump(y, w2, kGr);
                for (int v : blocks[z.z[y]])
                    if (v != y && v != x) bump(v, x, kAr);

                for (int dir = 0; dir < 2; ++dir)
                    for (int k = 0; k < 6; ++k) bp.tot[dir][k] = 0.0;
                for (std::size_t d = 0; d < bp.dims.size(); ++d) {
                    const int dir = bp.dims[d].dir;
                    for (int k = 0; k < 6; ++k) bp.tot[dir][k] += bp.S[d][k];
                }
                t_sync = t_cur;
                bound = total_intensity(t_sync);
            }
        }
    }
    return finalize(std::move(events), T, cfg.burn_in, n);
}

EventLog simulate(ModelFamily family, const SRParams& params, const Membership& z, double T,
                  const SimConfig& cfg) {
    switch (family) {
        case ModelFamily::chip: return simulate_chip(params, z, T, cfg);
        case ModelFamily::bhm: return simulate_bhm(params, z, T, cfg);
        case ModelFamily::sr: return simulate_sr(params, z, T, cfg);
        case ModelFamily::mulch:
            throw std::invalid_argument("simulate: MULCH needs MULCHParams");
    }
    throw std::invalid_argument("simulate: unknown family");
}

} // namespace dch
