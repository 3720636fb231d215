#include "dch/pipeline.hpp"

#include "dch/evaluation.hpp"
#include "dch/rng.hpp"

#include <chrono>
#include <limits>
#include <stdexcept>

namespace dch {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

FitResult fit_pipeline(const EventLog& train, int K, const FitOptions& opt) {
    if (K < 1) throw std::invalid_argument("fit_pipeline: K must be >= 1");
    train.validate();

    FitResult out;
    auto t0 = std::chrono::steady_clock::now();
    const CountMatrix N = count_matrix(train);
    if (K == 1) {
        out.membership = Membership(std::vector<int>(train.n, 0), 1);
    } else {
        SpectralOptions sopt = opt.spectral;
        sopt.seed = derive_seed(opt.seed, {0x5c1ULL});
        out.membership = spectral_cluster(N, K, sopt);
    }
    out.seconds_cluster = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const DyadIndex index = DyadIndex::build(train);
    GMMOptions gopt = opt.gmm;
    gopt.variant = opt.variant;
    gopt.seed = derive_seed(opt.seed, {0x63dULL});
    BetaMLEOptions bopt = opt.beta;
    bopt.init_beta = opt.init_beta;
    bopt.fixed = !opt.estimate_beta;
    EstimateReport report;
    out.params = estimate_sr_params(N, index, out.membership, gopt, bopt, &report);
    out.gmm = report.gmm;
    out.pooled_fallbacks = report.pooled_fallbacks;
    out.seconds_estimate = seconds_since(t0);

    if (opt.refine) {
        t0 = std::chrono::steady_clock::now();
        RefineOptions ropt;
        ropt.sweeps = opt.refine_sweeps;
        ropt.gmm = gopt;
        ropt.beta = bopt;
        const RefineResult r = refine(train, out.membership, out.params, K, ropt);
        out.membership = r.z;
        out.params = r.params;
        out.refine_changed = r.changed;
        out.seconds_refine = seconds_since(t0);
    }

    out.train_loglik = sr_loglik(index, out.membership, out.params, Window{0.0, train.horizon_T});
    out.diag = diagnostics(out.params, ModelFamily::sr, out.membership, train.horizon_T);
    return out;
}

SelectKResult select_K(const EventLog& train, const EventLog& test, const std::vector<int>& K_list,
                       const FitOptions& opt) {
    if (K_list.empty()) throw std::invalid_argument("select_K: empty K list");
    SelectKResult out;
    out.best_K = K_list.front();
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int K : K_list) {
        const FitResult fit = fit_pipeline(train, K, opt);
        const Membership z_eval = assign_inactive_to_largest_block(fit.membership, train);
        const double ll = test_loglik_per_event(train, test, fit.params, z_eval);
        out.table.emplace_back(K, ll);
        if (ll > best_ll || (ll == best_ll && K < out.best_K)) {  // ties resolve to smaller K
            best_ll = ll;
            out.best_K = K;
        }
    }
    return out;
}

} // namespace dch
