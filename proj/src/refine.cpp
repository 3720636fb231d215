#include "dch/estimator.hpp"

#include "dch/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dch {

namespace {

struct PairDyads {
    std::vector<int> dyad_indices;
};

} // namespace

SRParams mle_beta(const DyadIndex& index, const Membership& z, const SRParams& gmm_params,
                  const Window& w, const BetaMLEOptions& opt, BetaMLEReport* report) {
    gmm_params.validate();
    if (!(opt.init_beta > 0.0)) throw std::invalid_argument("mle_beta: init_beta must be > 0");
    const int K = z.K;
    SRParams params = gmm_params;
    params.beta_n = Matrix(K, K, opt.init_beta);
    params.beta_r = Matrix(K, K, opt.init_beta);
    if (report) *report = BetaMLEReport{};
    if (opt.fixed) return params;

    // dyads grouped by unordered block pair
    std::vector<std::vector<int>> by_pair(static_cast<std::size_t>(K) * K);
    for (std::size_t d = 0; d < index.dyads.size(); ++d) {
        int a = z.z[index.dyads[d].i], b = z.z[index.dyads[d].j];
        if (a > b) std::swap(a, b);
        by_pair[static_cast<std::size_t>(a) * K + b].push_back(static_cast<int>(d));
    }

    const double log_lo = std::log(opt.lo), log_hi = std::log(opt.hi);
    for (int a = 0; a < K; ++a) {
        for (int b = a; b < K; ++b) {
            const auto& dyads = by_pair[static_cast<std::size_t>(a) * K + b];
            const bool has_n =
                std::max(gmm_params.alpha_n(a, b), gmm_params.alpha_n(b, a)) > 1e-12;
            const bool has_r =
                std::max(gmm_params.alpha_r(a, b), gmm_params.alpha_r(b, a)) > 1e-12;
            if ((!has_n && !has_r) || dyads.empty()) {
                // likelihood is constant in beta: keep the initial value
                if (report) report->non_identifiable_pairs.push_back(a * K + b);
                continue;
            }

            auto pair_loglik = [&](double bn, double br) {
                SRParams local = params;
                local.beta_n(a, b) = local.beta_n(b, a) = bn;
                local.beta_r(a, b) = local.beta_r(b, a) = br;
                double ll = 0.0;
                for (int di : dyads) {
                    const DyadEvents& d = index.dyads[di];
                    ll += dyad_loglik(d.ij, d.ji, dyad_params(local, z.z[d.i], z.z[d.j]), w,
                                      d.i == d.j);
                }
                return ll;
            };

            std::vector<double> x0;
            if (has_n) x0.push_back(std::log(opt.init_beta));
            if (has_r) x0.push_back(std::log(opt.init_beta));
            auto objective = [&](const std::vector<double>& x) {
                for (double v : x)
                    if (v < log_lo || v > log_hi) return 1e50 * (1.0 + std::abs(v));
                std::size_t k = 0;
                const double bn = has_n ? std::exp(x[k++]) : opt.init_beta;
                const double br = has_r ? std::exp(x[k]) : opt.init_beta;
                return -pair_loglik(bn, br);
            };
            NelderMeadResult nm = nelder_mead(objective, x0, 0.7, opt.tol, opt.max_iter);
            std::size_t k = 0;
            if (has_n) {
                const double bn = std::exp(nm.x[k++]);
                params.beta_n(a, b) = params.beta_n(b, a) = bn;
            }
            if (has_r) {
                const double br = std::exp(nm.x[k]);
                params.beta_r(a, b) = params.beta_r(b, a) = br;
            }
        }
    }
    return params;
}

SRParams mle_beta(const EventLog& events, const Membership& z, const SRParams& gmm_params,
                  const BetaMLEOptions& opt, BetaMLEReport* report) {
    return mle_beta(DyadIndex::build(events), z, gmm_params, Window{0.0, events.horizon_T}, opt,
                    report);
}

SRParams estimate_sr_params(const CountMatrix& N, const DyadIndex& index, const Membership& z,
                            const GMMOptions& gmm_opt, const BetaMLEOptions& beta_opt,
                            EstimateReport* report) {
    const int K = z.K;
    const auto sizes = z.block_sizes();
    SRParams p;
    p.M = Matrix(K, K, 1e-10);
    p.alpha_n = Matrix(K, K, 0.0);
    p.alpha_r = Matrix(K, K, 0.0);
    p.beta_n = Matrix(K, K, beta_opt.init_beta);
    p.beta_r = Matrix(K, K, beta_opt.init_beta);
    p.variant = gmm_opt.variant;
    if (report) *report = EstimateReport{};

    // pooled whole-matrix estimate, the fallback for empty block pairs
    bool pooled_ready = false;
    BlockPairTheta pooled;
    auto pooled_theta = [&]() -> const BlockPairTheta& {
        if (!pooled_ready) {
            const Membership one(std::vector<int>(z.n(), 0), 1);
            const BlockPairMoments m = sample_moments(N, one, 0, 0);
            if (m.lambda_ab > 0.0) {
                GMMResult r = gmm_fit(m, gmm_opt);
                pooled = r.theta;
            } else {
                pooled.m_ab = pooled.m_ba = 1e-10;
            }
            pooled_ready = true;
        }
        return pooled;
    };

    auto place = [&](int a, int b, const BlockPairTheta& t) {
        p.M(a, b) = t.m_ab;
        p.M(b, a) = t.m_ba;
        p.alpha_n(a, b) = t.alpha_n_ab;
        p.alpha_n(b, a) = t.alpha_n_ba;
        p.alpha_r(a, b) = t.alpha_r_ab;
        p.alpha_r(b, a) = t.alpha_r_ba;
    };

    for (int a = 0; a < K; ++a) {
        for (int b = a; b < K; ++b) {
            const long pairs = a == b ? static_cast<long>(sizes[a]) * (sizes[a] - 1)
                                      : static_cast<long>(sizes[a]) * sizes[b];
            GMMResult res;
            res.theta.a = a;
            res.theta.b = b;
            if (pairs == 0) {
                BlockPairTheta t = pooled_theta();
                t.a = a;
                t.b = b;
                place(a, b, t);
                res.theta = t;
                res.converged = false;
                if (report) ++report->pooled_fallbacks;
            } else {
                const BlockPairMoments m = sample_moments(N, z, a, b);
                if (!(m.lambda_ab > 0.0) || !(m.lambda_ba > 0.0)) {
                    // a direction with no events at all: Poisson floor
                    BlockPairTheta t;
                    t.a = a;
                    t.b = b;
                    t.m_ab = std::max(m.lambda_ab, 1e-10);
                    t.m_ba = std::max(m.lambda_ba, 1e-10);
                    place(a, b, t);
                    res.theta = t;
                    res.converged = false;
                } else {
                    res = gmm_fit(m, gmm_opt);
                    place(a, b, res.theta);
                }
            }
            if (report) report->gmm.push_back(res);
        }
    }
    p.validate();

    BetaMLEReport beta_report;
    SRParams full = mle_beta(index, z, p, Window{0.0, N.horizon_T}, beta_opt, &beta_report);
    if (report) report->beta = beta_report;
    return full;
}

RefineResult refine(const EventLog& events, const Membership& z_init, const SRParams& params,
                    int K, const RefineOptions& opt) {
    if (z_init.K != K) throw std::invalid_argument("refine: membership K mismatch");
    if (opt.sweeps < 1) throw std::invalid_argument("refine: sweeps must be >= 1");
    params.validate();
    const DyadIndex index = DyadIndex::build(events);
    const CountMatrix N = count_matrix(events);

    RefineResult out;
    out.z = z_init;
    out.params = params;
    const int max_sweeps = opt.until_stable ? 100 : opt.sweeps;
    for (int s = 0; s < max_sweeps; ++s) {
        int blocked = 0;
        const int changed =
            refine_sweep(index, out.z, out.params, events.horizon_T, opt.allow_self_edges,
                         &blocked);
        out.changed += changed;
        out.blocked += blocked;
        ++out.sweeps_run;
        if (opt.reestimate)
            out.params = estimate_sr_params(N, index, out.z, opt.gmm, opt.beta, nullptr);
        if (opt.until_stable && changed == 0) break;
    }
    return out;
}

} // namespace dch
