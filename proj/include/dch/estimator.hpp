#pragma once

#include "dch/event_log.hpp"
#include "dch/excitation.hpp"
#include "dch/membership.hpp"
#include "dch/params.hpp"
#include "dch/spectral.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dch {

// Per-block-pair sample cumulants: mean rates and count (co)variances over
// the n_ab ordered pairs, counts centered by lambda_hat * T and scaled by
// 1 / (T n_ab). For a diagonal pair (a == b) both directions carry the same
// statistics over the n_a (n_a - 1) ordered pairs.
struct BlockPairMoments {
    int a = 0, b = 0;
    double lambda_ab = 0.0, lambda_ba = 0.0;
    double c_abab = 0.0, c_baba = 0.0, c_abba = 0.0;
    int n_ab = 0;
    double T = 0.0;
};

BlockPairMoments sample_moments(const CountMatrix& N, const Membership& z, int a, int b);

// The five restricted-SR parameters of one block pair. For the shared-self
// restriction alpha_n_ab == alpha_n_ba instead; diagonal pairs collapse to
// (m, alpha_n, alpha_r).
struct BlockPairTheta {
    int a = 0, b = 0;
    double m_ab = 0.0, m_ba = 0.0;
    double alpha_n_ab = 0.0, alpha_n_ba = 0.0;
    double alpha_r_ab = 0.0, alpha_r_ba = 0.0;

    StabilityResult stability(double sigma_star = kDefaultSigmaStar) const {
        return stability_check(alpha_n_ab, alpha_n_ba, alpha_r_ab, alpha_r_ba, sigma_star);
    }
    bool feasible(double sigma_star = kDefaultSigmaStar) const;
};

struct PopulationMoments {
    double lambda_ab = 0.0, lambda_ba = 0.0;
    double c_abab = 0.0, c_baba = 0.0, c_abba = 0.0;
};

// Exact first and second integrated cumulants Lambda = R M and
// C = R diag(Lambda) R^T from the closed-form 2x2 inverse R = (I - Gamma)^-1.
PopulationMoments population_moments(const BlockPairTheta& theta);

struct GMMOptions {
    double sigma_star = kDefaultSigmaStar;
    SRVariant variant = SRVariant::restricted_r;
    int starts = 8;
    int max_iter = 2000;
    std::uint64_t seed = 7;
    double objective_tol = 1e-10;  // warning threshold, relative to moment scale
};

struct GMMResult {
    BlockPairTheta theta;
    double objective = 0.0;
    bool converged = true;
    int evaluations = 0;
};

// Least-squares fit of the five moment residuals over the feasible set
// (rho <= sigma* < 1, M > 0, alpha >= 0). Multi-start Nelder-Mead on
// (log M, logit-scaled alpha), infeasible proposals rejected by a spectral
// radius penalty. Non-convergence is reported, not fatal.
GMMResult gmm_fit(const BlockPairMoments& moments, const GMMOptions& opt = {});

struct Window {
    double t0 = 0.0;
    double t1 = 0.0;
};

// Events grouped per unordered dyad, the layout every likelihood pass uses.
struct DyadEvents {
    int i = 0, j = 0;               // i <= j
    std::vector<double> ij, ji;     // sorted times; ji unused when i == j
};

struct DyadIndex {
    int n = 0;
    std::vector<DyadEvents> dyads;
    std::vector<std::vector<int>> incident;  // node -> dyad indices

    static DyadIndex build(const EventLog& events);
};

// Exact SR log-likelihood of one dyad over [t0, t1]; events before t0 enter
// as history through the decayed excitation state.
struct DyadParams {
    double mu0 = 0.0, an0 = 0.0, bn0 = 1.0, ar0 = 0.0, br0 = 1.0;  // i -> j
    double mu1 = 0.0, an1 = 0.0, bn1 = 1.0, ar1 = 0.0, br1 = 1.0;  // j -> i
};

DyadParams dyad_params(const SRParams& p, int block_i, int block_j);
double dyad_loglik(const std::vector<double>& tij, const std::vector<double>& tji,
                   const DyadParams& p, const Window& w, bool self_pair);

// Full SR log-likelihood over a window: baseline exposure for every ordered
// pair plus recursive kernel terms for dyads with events.
double sr_loglik(const EventLog& events, const Membership& z, const SRParams& params,
                 const Window& w, bool allow_self_edges = false);
double sr_loglik(const DyadIndex& index, const Membership& z, const SRParams& params,
                 const Window& w, bool allow_self_edges = false);

struct BetaMLEOptions {
    double init_beta = 1.0;
    double lo = 1e-4, hi = 1e4;
    double tol = 1e-8;
    int max_iter = 500;
    bool fixed = false;  // keep init_beta, skip optimization
};

struct BetaMLEReport {
    std::vector<int> non_identifiable_pairs;  // flattened a*K+b of pairs left at init
    bool converged = true;
};

// Maximizes the likelihood over the decay parameters with the GMM estimates
// of M and the alphas plugged in; one (beta_n, beta_r) per unordered block
// pair, shared across both directions.
SRParams mle_beta(const DyadIndex& index, const Membership& z, const SRParams& gmm_params,
                  const Window& w, const BetaMLEOptions& opt, BetaMLEReport* report = nullptr);
SRParams mle_beta(const EventLog& events, const Membership& z, const SRParams& gmm_params,
                  const BetaMLEOptions& opt, BetaMLEReport* report = nullptr);

// Log-likelihood terms that depend on the label of `node`: both directions
// of every dyad incident to it, under candidate block `candidate`.
double node_local_objective(const DyadIndex& index, const Membership& z, const SRParams& params,
                            int node, int candidate, double T, bool allow_self_edges = false);

struct RefineOptions {
    int sweeps = 1;
    bool until_stable = false;  // keep sweeping while labels change
    bool allow_self_edges = false;
    GMMOptions gmm;
    BetaMLEOptions beta;
    bool reestimate = true;
};

struct RefineResult {
    Membership z;
    SRParams params;
    int changed = 0;
    int blocked = 0;  // moves refused because they would empty a block
    int sweeps_run = 0;
};

// One coordinate-ascent pass over the nodes in index order; `changed` and
// `blocked` are accumulated into the result.
int refine_sweep(const DyadIndex& index, Membership& z, const SRParams& params, double T,
                 bool allow_self_edges, int* blocked);

RefineResult refine(const EventLog& events, const Membership& z_init, const SRParams& params,
                    int K, const RefineOptions& opt = {});

// GMM + beta MLE over all block pairs for a fixed membership. Block pairs
// with no ordered pairs fall back to pooled whole-matrix estimates.
struct EstimateReport {
    std::vector<GMMResult> gmm;  // one per block pair a <= b
    BetaMLEReport beta;
    int pooled_fallbacks = 0;
};

SRParams estimate_sr_params(const CountMatrix& N, const DyadIndex& index, const Membership& z,
                            const GMMOptions& gmm_opt, const BetaMLEOptions& beta_opt,
                            EstimateReport* report = nullptr);

} // namespace dch
