#include "dch/estimator.hpp"

#include "dch/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dch {

DyadIndex DyadIndex::build(const EventLog& events) {
    events.validate();
    DyadIndex idx;
    idx.n = events.n;
    idx.incident.resize(events.n);
    std::unordered_map<std::uint64_t, int> slot;
    slot.reserve(events.size());
    for (const Event& e : events.events) {
        const int i = std::min(e.sender, e.receiver);
        const int j = std::max(e.sender, e.receiver);
        const std::uint64_t key =
            (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
        auto it = slot.find(key);
        if (it == slot.end()) {
            it = slot.emplace(key, static_cast<int>(idx.dyads.size())).first;
            idx.dyads.push_back({i, j, {}, {}});
            idx.incident[i].push_back(it->second);
            if (j != i) idx.incident[j].push_back(it->second);
        }
        DyadEvents& d = idx.dyads[it->second];
        if (e.sender == d.i)
            d.ij.push_back(e.time);
        else
            d.ji.push_back(e.time);
    }
    return idx;
}

DyadParams dyad_params(const SRParams& p, int block_i, int block_j) {
    DyadParams d;
    d.mu0 = p.M(block_i, block_j);
    d.an0 = p.alpha_n(block_i, block_j);
    d.bn0 = p.beta_n(block_i, block_j);
    d.ar0 = p.alpha_r(block_i, block_j);
    d.br0 = p.beta_r(block_i, block_j);
    d.mu1 = p.M(block_j, block_i);
    d.an1 = p.alpha_n(block_j, block_i);
    d.bn1 = p.beta_n(block_j, block_i);
    d.ar1 = p.alpha_r(block_j, block_i);
    d.br1 = p.beta_r(block_j, block_i);
    return d;
}

namespace {

// alpha * sum over events s <= t1 of the kernel mass inside [t0, t1]:
// events before t0 contribute exp(-b(t0-s)) - exp(-b(t1-s)), events inside
// contribute 1 - exp(-b(t1-s)).
double compensator_term(const std::vector<double>& times, double alpha, double beta,
                        const Window& w) {
    if (alpha == 0.0 || times.empty()) return 0.0;
    const auto pre_end = std::lower_bound(times.begin(), times.end(), w.t0);
    const auto in_end = std::upper_bound(times.begin(), times.end(), w.t1);
    const std::size_t n_pre = static_cast<std::size_t>(pre_end - times.begin());
    const std::size_t n_all = static_cast<std::size_t>(in_end - times.begin());
    const double mid_count = static_cast<double>(n_all - n_pre);
    double s = mid_count;
    s += kernels::sum_exp_decay(times.data(), n_pre, beta, w.t0);
    s -= kernels::sum_exp_decay(times.data(), n_all, beta, w.t1);
    return alpha * s;
}

} // namespace

double dyad_loglik(const std::vector<double>& tij, const std::vector<double>& tji,
                   const DyadParams& p, const Window& w, bool self_pair) {
    if (!(w.t1 >= w.t0)) throw std::invalid_argument("dyad_loglik: invalid window");
    const double len = w.t1 - w.t0;
    double ll = -p.mu0 * len - (self_pair ? 0.0 : p.mu1 * len);

    // compensator: each stream feeds its own self kernel and the opposite
    // direction's reciprocal kernel (its own, for a self pair)
    ll -= compensator_term(tij, p.an0, p.bn0, w);
    ll -= compensator_term(tji, p.an1, p.bn1, w);
    if (self_pair) {
        ll -= compensator_term(tij, p.ar0, p.br0, w);
    } else {
        ll -= compensator_term(tij, p.ar1, p.br1, w);
        ll -= compensator_term(tji, p.ar0, p.br0, w);
    }

    // log-intensity terms with O(1) recursions; simultaneous events see the
    // state strictly before their common timestamp
    double sn0 = 0.0, sr0 = 0.0, sn1 = 0.0, sr1 = 0.0;
    double t_prev = 0.0;
    std::size_t a = 0, b = 0;
    while (a < tij.size() || b < tji.size()) {
        const double ta = a < tij.size() ? tij[a] : std::numeric_limits<double>::infinity();
        const double tb = b < tji.size() ? tji[b] : std::numeric_limits<double>::infinity();
        const double t = std::min(ta, tb);
        if (t > w.t1) break;
        const double dt = t - t_prev;
        sn0 *= std::exp(-p.bn0 * dt);
        sr0 *= std::exp(-p.br0 * dt);
        if (!self_pair) {
            sn1 *= std::exp(-p.bn1 * dt);
            sr1 *= std::exp(-p.br1 * dt);
        }
        t_prev = t;

        int jumps0 = 0, jumps1 = 0;
        while (a < tij.size() && tij[a] == t) {
            if (t >= w.t0) {
                const double lam = p.mu0 + p.an0 * p.bn0 * sn0 + p.ar0 * p.br0 * sr0;
                if (!(lam > 0.0))
                    throw std::domain_error("dyad_loglik: zero intensity at an observed event");
                ll += std::log(lam);
            }
            ++jumps0;
            ++a;
        }
        while (b < tji.size() && tji[b] == t) {
            if (t >= w.t0) {
                const double lam = p.mu1 + p.an1 * p.bn1 * sn1 + p.ar1 * p.br1 * sr1;
                if (!(lam > 0.0))
                    throw std::domain_error("dyad_loglik: zero intensity at an observed event");
                ll += std::log(lam);
            }
            ++jumps1;
            ++b;
        }
        sn0 += jumps0;
        if (self_pair) {
            sr0 += jumps0;
        } else {
            sr1 += jumps0;
            sn1 += jumps1;
            sr0 += jumps1;
        }
    }
    return ll;
}

namespace {

double baseline_total(const Membership& z, const SRParams& params, bool allow_self_edges) {
    const auto sizes = z.block_sizes();
    double total = 0.0;
    for (int a = 0; a < z.K; ++a)
        for (int b = 0; b < z.K; ++b) {
            double cnt = static_cast<double>(sizes[a]) * sizes[b];
            if (a == b) cnt -= allow_self_edges ? 0.0 : sizes[a];
            total += params.M(a, b) * cnt;
        }
    return total;
}

} // namespace

double sr_loglik(const DyadIndex& index, const Membership& z, const SRParams& params,
                 const Window& w, bool allow_self_edges) {
    if (index.n != z.n()) throw std::invalid_argument("sr_loglik: index/membership size mismatch");
    params.validate();
    const double len = w.t1 - w.t0;
    double total = -len * baseline_total(z, params, allow_self_edges);
    for (const DyadEvents& d : index.dyads) {
        const bool self_pair = d.i == d.j;
        const DyadParams p = dyad_params(params, z.z[d.i], z.z[d.j]);
        total += dyad_loglik(d.ij, d.ji, p, w, self_pair);
        total += len * (p.mu0 + (self_pair ? 0.0 : p.mu1));  // counted in the baseline sum already
    }
    return total;
}

double sr_loglik(const EventLog& events, const Membership& z, const SRParams& params,
                 const Window& w, bool allow_self_edges) {
    return sr_loglik(DyadIndex::build(events), z, params, w, allow_self_edges);
}

double node_local_objective(const DyadIndex& index, const Membership& z, const SRParams& params,
                            int node, int candidate, double T, bool allow_self_edges) {
    if (node < 0 || node >= z.n()) throw std::out_of_range("node_local_objective: bad node");
    if (candidate < 0 || candidate >= z.K)
        throw std::out_of_range("node_local_objective: bad candidate label");
    const Window w{0.0, T};
    auto sizes = z.block_sizes();
    --sizes[z.z[node]];  // counts over the other nodes

    double obj = 0.0;
    for (int b = 0; b < z.K; ++b)
        obj -= T * (params.M(candidate, b) + params.M(b, candidate)) * sizes[b];
    if (allow_self_edges) obj -= T * params.M(candidate, candidate);

    for (int di : index.incident[node]) {
        const DyadEvents& d = index.dyads[di];
        const bool self_pair = d.i == d.j;
        const int bi = d.i == node ? candidate : z.z[d.i];
        const int bj = d.j == node ? candidate : z.z[d.j];
        const DyadParams p = dyad_params(params, bi, bj);
        obj += dyad_loglik(d.ij, d.ji, p, w, self_pair);
        obj += T * (p.mu0 + (self_pair ? 0.0 : p.mu1));
    }
    return obj;
}

int refine_sweep(const DyadIndex& index, Membership& z, const SRParams& params, double T,
                 bool allow_self_edges, int* blocked) {
    auto sizes = z.block_sizes();
    int changed = 0;
    for (int i = 0; i < z.n(); ++i) {
        const int current = z.z[i];
        int best = current;
        double best_val = node_local_objective(index, z, params, i, current, T, allow_self_edges);
        for (int a = 0; a < z.K; ++a) {
            if (a == current) continue;
            const double val = node_local_objective(index, z, params, i, a, T, allow_self_edges);
            if (val > best_val) {
                best_val = val;
                best = a;
            }
        }
        if (best != current) {
            if (sizes[current] <= 1) {
                if (blocked) ++*blocked;  // the move would empty a block
                continue;
            }
            z.z[i] = best;
            --sizes[current];
            ++sizes[best];
            ++changed;
        }
    }
    return changed;
}

} // namespace dch
