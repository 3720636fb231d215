#pragma once

#include "dch/estimator.hpp"
#include "dch/excitation.hpp"
#include "dch/spectral.hpp"

#include <string>
#include <vector>

namespace dch {

struct FitOptions {
    SRVariant variant = SRVariant::restricted_r;
    bool refine = false;
    int refine_sweeps = 1;
    bool estimate_beta = true;
    double init_beta = 1.0;
    SpectralOptions spectral;
    GMMOptions gmm;
    BetaMLEOptions beta;
    std::uint64_t seed = 1;
};

struct FitResult {
    Membership membership;
    SRParams params;
    double train_loglik = 0.0;
    std::vector<GMMResult> gmm;  // per block pair, a <= b row-major
    ModelDiagnostics diag;
    double seconds_cluster = 0.0;
    double seconds_estimate = 0.0;
    double seconds_refine = 0.0;
    int refine_changed = 0;
    int pooled_fallbacks = 0;
};

// Spectral clustering, per-block-pair GMM, beta MLE, optional likelihood
// refinement. With K = 1 the clustering step is skipped.
FitResult fit_pipeline(const EventLog& train, int K, const FitOptions& opt = {});

// Fits every K in the list and evaluates held-out log-likelihood per event;
// ties resolve toward the smaller K.
struct SelectKResult {
    int best_K = 0;
    std::vector<std::pair<int, double>> table;  // (K, test loglik per event)
};

SelectKResult select_K(const EventLog& train, const EventLog& test, const std::vector<int>& K_list,
                       const FitOptions& opt = {});

} // namespace dch
