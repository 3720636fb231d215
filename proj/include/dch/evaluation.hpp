#pragma once

#include "dch/estimator.hpp"
#include "dch/event_log.hpp"
#include "dch/membership.hpp"
#include "dch/params.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dch {

// Held-out log-likelihood per event: the SR likelihood over the test window,
// with intensities conditioned on the full history (train plus earlier test
// events), divided by the number of test events.
double test_loglik_per_event(const EventLog& train, const EventLog& test, const SRParams& params,
                             const Membership& z, bool allow_self_edges = false);

// P(event on (i,j) in [t, t+delta] | history before t): the closed-form
// compensator integral mapped through 1 - exp(-x). No event feedback inside
// the interval.
double link_probability(const DyadIndex& history, const SRParams& params, const Membership& z,
                        int i, int j, double t, double delta);
double link_probability(const EventLog& history, const SRParams& params, const Membership& z,
                        int i, int j, double t, double delta);

struct EvalConfig {
    double delta = 1.0;
    int n_intervals = 100;
    std::uint64_t seed = 1;
    double test_start = 0.0;  // intervals sampled in [test_start, horizon - delta]
    // explicit candidate subsets override the automatic large-graph sampling
    std::optional<std::vector<int>> candidate_senders;
    std::optional<std::vector<int>> candidate_receivers;
    int subsample_threshold = 2000;  // above this many nodes, sample candidates
    int subsample_senders = 1000;
    int subsample_receivers = 1000;
};

struct AucResult {
    double mean = 0.0;
    double stddev = 0.0;
    int used_intervals = 0;
    int skipped_intervals = 0;  // all-positive or all-negative label sets
};

// Dynamic link prediction: sample intervals in the test window, score every
// candidate ordered pair by link_probability, label by event occurrence, and
// average the rank-based AUC (ties averaged).
AucResult dynamic_link_auc(const EventLog& events, const SRParams& params, const Membership& z,
                           const EvalConfig& cfg);

// Nodes without any event in the training window are reassigned to the
// largest training block before held-out evaluation.
Membership assign_inactive_to_largest_block(const Membership& z, const EventLog& train);

struct TrendPoint {
    double n = 0, K = 0, T = 0, s = 0;
    double mu_max = 0;
    double ari_mean = 0, ari_se = 0;
    double err_mean = 0, err_se = 0;  // spectral norm of N_T - E N_T
};

struct AxisVerdict {
    std::string axis;            // "n", "T" or "s"
    bool ari_nondecreasing = true;   // within one standard error
    bool ari_nonincreasing = true;
    bool err_nondecreasing = true;
    bool err_strictly_increasing = true;
    int comparisons = 0;
};

struct TrendSummary {
    std::vector<TrendPoint> points;       // with bound_proxy filled
    std::vector<double> bound_proxy;      // K^2 log n log T / (n T mu_max) per point
    std::vector<AxisVerdict> verdicts;
};

// Summarizes a grid of Monte-Carlo results: the theoretical scaling proxy
// per cell plus monotonicity verdicts along each varied axis.
TrendSummary trend_diagnostics(const std::vector<TrendPoint>& points);

} // namespace dch
