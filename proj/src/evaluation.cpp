#include "dch/evaluation.hpp"

#include "dch/kernels.hpp"
#include "dch/rng.hpp"
#include "dch/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace dch {

double test_loglik_per_event(const EventLog& train, const EventLog& test, const SRParams& params,
                             const Membership& z, bool allow_self_edges) {
    if (test.empty()) throw std::invalid_argument("test_loglik_per_event: empty test set");
    if (train.n != test.n)
        throw std::invalid_argument("test_loglik_per_event: train/test node count mismatch");
    if (!(test.horizon_T >= train.horizon_T))
        throw std::invalid_argument("test_loglik_per_event: test window must follow train window");

    EventLog combined;
    combined.n = train.n;
    combined.horizon_T = test.horizon_T;
    combined.events.reserve(train.size() + test.size());
    combined.events.insert(combined.events.end(), train.events.begin(), train.events.end());
    combined.events.insert(combined.events.end(), test.events.begin(), test.events.end());
    std::sort(combined.events.begin(), combined.events.end(), EventLog::time_order);

    const Window w{train.horizon_T, test.horizon_T};
    const double ll = sr_loglik(combined, z, params, w, allow_self_edges);
    return ll / static_cast<double>(test.size());
}

namespace {

// integral of the (i,j) intensity over [t, t+delta] given history before t
double intensity_integral(const std::vector<double>& tij, const std::vector<double>& tji,
                          const DyadParams& p, bool self_pair, double t, double delta) {
    auto kernel_mass = [&](const std::vector<double>& times, double alpha, double beta) {
        if (alpha == 0.0 || times.empty()) return 0.0;
        const auto pre_end = std::lower_bound(times.begin(), times.end(), t);
        const std::size_t n_pre = static_cast<std::size_t>(pre_end - times.begin());
        if (n_pre == 0) return 0.0;
        const double at_t = kernels::sum_exp_decay(times.data(), n_pre, beta, t);
        const double at_end = kernels::sum_exp_decay(times.data(), n_pre, beta, t + delta);
        return alpha * (at_t - at_end);
    };
    double integral = p.mu0 * delta;
    integral += kernel_mass(tij, p.an0, p.bn0);
    integral += kernel_mass(self_pair ? tij : tji, p.ar0, p.br0);
    return integral;
}

} // namespace

double link_probability(const DyadIndex& history, const SRParams& params, const Membership& z,
                        int i, int j, double t, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("link_probability: delta must be positive");
    if (i < 0 || j < 0 || i >= z.n() || j >= z.n())
        throw std::out_of_range("link_probability: node out of range");
    const bool self_pair = i == j;
    const DyadParams p = dyad_params(params, z.z[i], z.z[j]);

    static const std::vector<double> kEmpty;
    const std::vector<double>* tij = &kEmpty;
    const std::vector<double>* tji = &kEmpty;
    const int lo = std::min(i, j), hi = std::max(i, j);
    for (int di : history.incident[lo]) {
        const DyadEvents& d = history.dyads[di];
        if (d.i == lo && d.j == hi) {
            tij = i <= j ? &d.ij : &d.ji;
            tji = i <= j ? &d.ji : &d.ij;
            break;
        }
    }
    const double integral = intensity_integral(*tij, *tji, p, self_pair, t, delta);
    return 1.0 - std::exp(-integral);
}

double link_probability(const EventLog& history, const SRParams& params, const Membership& z,
                        int i, int j, double t, double delta) {
    return link_probability(DyadIndex::build(history), params, z, i, j, t, delta);
}

namespace {

double rank_auc(std::vector<std::pair<double, int>>& scored, std::int64_t n_pos,
                std::int64_t n_neg) {
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < scored.size()) {
        std::size_t j = i;
        while (j < scored.size() && scored[j].first == scored[i].first) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (scored[k].second) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

} // namespace

AucResult dynamic_link_auc(const EventLog& events, const SRParams& params, const Membership& z,
                           const EvalConfig& cfg) {
    events.validate();
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("dynamic_link_auc: delta must be positive");
    if (cfg.n_intervals < 1)
        throw std::invalid_argument("dynamic_link_auc: n_intervals must be >= 1");
    const double t_hi = events.horizon_T - cfg.delta;
    if (!(t_hi >= cfg.test_start))
        throw std::invalid_argument("dynamic_link_auc: test window shorter than delta");

    const int n = events.n;
    Rng rng(derive_seed(cfg.seed, {0xa0cULL}));

    // candidate senders/receivers: explicit subsets win, otherwise all nodes,
    // subsampled without replacement on large graphs
    std::vector<int> senders(n), receivers(n);
    for (int i = 0; i < n; ++i) senders[i] = receivers[i] = i;
    if (cfg.candidate_senders) senders = *cfg.candidate_senders;
    if (cfg.candidate_receivers) receivers = *cfg.candidate_receivers;
    if (!cfg.candidate_senders && !cfg.candidate_receivers && n > cfg.subsample_threshold) {
        auto sample = [&](int want) {
            std::vector<int> all(n);
            for (int i = 0; i < n; ++i) all[i] = i;
            for (int i = 0; i < want; ++i) {
                const int j = i + static_cast<int>(rng.next_below(n - i));
                std::swap(all[i], all[j]);
            }
            all.resize(want);
            std::sort(all.begin(), all.end());
            return all;
        };
        senders = sample(std::min(cfg.subsample_senders, n));
        receivers = sample(std::min(cfg.subsample_receivers, n));
    }
    for (const std::vector<int>* cand : {&senders, &receivers})
        for (int v : *cand)
            if (v < 0 || v >= n)
                throw std::out_of_range("dynamic_link_auc: candidate node out of range");

    const DyadIndex index = DyadIndex::build(events);
    std::vector<char> is_receiver(n, 0);
    for (int r : receivers) is_receiver[r] = 1;
    std::vector<char> is_sender(n, 0);
    for (int s : senders) is_sender[s] = 1;

    // block-level base probability for pairs with no history
    std::vector<double> interval_starts(cfg.n_intervals);
    for (int k = 0; k < cfg.n_intervals; ++k)
        interval_starts[k] = cfg.test_start + rng.next_double() * (t_hi - cfg.test_start);

    std::vector<double> aucs;
    int skipped = 0;
    for (int k = 0; k < cfg.n_intervals; ++k) {
        const double t = interval_starts[k];
        Matrix base_prob(z.K, z.K);
        for (int a = 0; a < z.K; ++a)
            for (int b = 0; b < z.K; ++b)
                base_prob(a, b) = 1.0 - std::exp(-params.M(a, b) * cfg.delta);

        // per-dyad corrections for pairs with history before t, and labels
        std::unordered_map<std::uint64_t, double> scores;
        std::set<std::uint64_t> positives;
        auto key = [n](int i, int j) {
            return static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) + j;
        };
        for (const DyadEvents& d : index.dyads) {
            const bool self_pair = d.i == d.j;
            if (self_pair) continue;
            auto score_dir = [&](int i, int j, const std::vector<double>& tij,
                                 const std::vector<double>& tji) {
                if (!is_sender[i] || !is_receiver[j]) return;
                const bool has_history =
                    (!tij.empty() && tij.front() < t) || (!tji.empty() && tji.front() < t);
                if (!has_history) return;
                const DyadParams p = dyad_params(params, z.z[i], z.z[j]);
                scores[key(i, j)] =
                    1.0 - std::exp(-intensity_integral(tij, tji, p, false, t, cfg.delta));
            };
            score_dir(d.i, d.j, d.ij, d.ji);
            score_dir(d.j, d.i, d.ji, d.ij);
            for (double s : d.ij)
                if (s >= t && s <= t + cfg.delta) positives.insert(key(d.i, d.j));
            for (double s : d.ji)
                if (s >= t && s <= t + cfg.delta) positives.insert(key(d.j, d.i));
        }

        std::vector<std::pair<double, int>> scored;
        scored.reserve(senders.size() * receivers.size());
        std::int64_t n_pos = 0, n_neg = 0;
        for (int i : senders) {
            for (int j : receivers) {
                if (i == j) continue;
                const auto it = scores.find(key(i, j));
                const double score =
                    it != scores.end() ? it->second : base_prob(z.z[i], z.z[j]);
                const int label = positives.count(key(i, j)) ? 1 : 0;
                label ? ++n_pos : ++n_neg;
                scored.emplace_back(score, label);
            }
        }
        if (n_pos == 0 || n_neg == 0) {
            ++skipped;
            continue;
        }
        aucs.push_back(rank_auc(scored, n_pos, n_neg));
    }

    AucResult res;
    res.skipped_intervals = skipped;
    res.used_intervals = static_cast<int>(aucs.size());
    if (!aucs.empty()) {
        double mean = 0.0;
        for (double a : aucs) mean += a;
        mean /= aucs.size();
        double var = 0.0;
        for (double a : aucs) var += (a - mean) * (a - mean);
        res.mean = mean;
        res.stddev = aucs.size() > 1 ? std::sqrt(var / (aucs.size() - 1)) : 0.0;
    }
    return res;
}

Membership assign_inactive_to_largest_block(const Membership& z, const EventLog& train) {
    std::vector<char> active(z.n(), 0);
    for (const Event& e : train.events) {
        active[e.sender] = 1;
        active[e.receiver] = 1;
    }
    std::vector<int> sizes(z.K, 0);
    for (int i = 0; i < z.n(); ++i)
        if (active[i]) ++sizes[z.z[i]];
    int largest = 0;
    for (int a = 1; a < z.K; ++a)
        if (sizes[a] > sizes[largest]) largest = a;
    Membership out = z;
    for (int i = 0; i < z.n(); ++i)
        if (!active[i]) out.z[i] = largest;
    return out;
}

TrendSummary trend_diagnostics(const std::vector<TrendPoint>& points) {
    if (points.size() < 1) throw std::invalid_argument("trend_diagnostics: no points");
    TrendSummary out;
    out.points = points;
    for (const TrendPoint& p : points) {
        const double proxy = p.mu_max > 0.0
                                 ? p.K * p.K * std::log(p.n) * std::log(p.T) / (p.n * p.T * p.mu_max)
                                 : std::numeric_limits<double>::quiet_NaN();
        out.bound_proxy.push_back(proxy);
    }
    if (points.size() < 2) return out;

    struct AxisSpec {
        const char* name;
        double TrendPoint::*field;
    };
    const AxisSpec axes[] = {{"n", &TrendPoint::n}, {"T", &TrendPoint::T}, {"s", &TrendPoint::s}};
    for (const AxisSpec& ax : axes) {
        // group points sharing all other coordinates, then compare neighbors
        AxisVerdict verdict;
        verdict.axis = ax.name;
        std::map<std::tuple<double, double, double, double>, std::vector<const TrendPoint*>> groups;
        for (const TrendPoint& p : points) {
            auto coord = [&](double TrendPoint::*f) { return f == ax.field ? 0.0 : p.*f; };
            groups[{coord(&TrendPoint::n), coord(&TrendPoint::K), coord(&TrendPoint::T),
                    coord(&TrendPoint::s)}]
                .push_back(&p);
        }
        for (auto& [coords, grp] : groups) {
            if (grp.size() < 2) continue;
            std::sort(grp.begin(), grp.end(),
                      [&](const TrendPoint* a, const TrendPoint* b) { return a->*(ax.field) < b->*(ax.field); });
            for (std::size_t i = 0; i + 1 < grp.size(); ++i) {
                const TrendPoint* lo = grp[i];
                const TrendPoint* hi = grp[i + 1];
                const double ari_tol = std::hypot(lo->ari_se, hi->ari_se);
                const double err_tol = std::hypot(lo->err_se, hi->err_se);
                ++verdict.comparisons;
                if (hi->ari_mean < lo->ari_mean - ari_tol) verdict.ari_nondecreasing = false;
                if (hi->ari_mean > lo->ari_mean + ari_tol) verdict.ari_nonincreasing = false;
                if (hi->err_mean < lo->err_mean - err_tol) verdict.err_nondecreasing = false;
                if (!(hi->err_mean > lo->err_mean)) verdict.err_strictly_increasing = false;
            }
        }
        if (verdict.comparisons > 0) out.verdicts.push_back(verdict);
    }
    return out;
}

} // namespace dch
