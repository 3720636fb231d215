#include "dch/estimator.hpp"

#include "dch/optim.hpp"
#include "dch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dch {

bool BlockPairTheta::feasible(double sigma_star) const {
    if (!(m_ab > 0.0) || !(m_ba > 0.0)) return false;
    if (alpha_n_ab < 0.0 || alpha_n_ba < 0.0 || alpha_r_ab < 0.0 || alpha_r_ba < 0.0) return false;
    return stability(sigma_star).stable;
}

BlockPairMoments sample_moments(const CountMatrix& N, const Membership& z, int a, int b) {
    if (a < 0 || b < 0 || a >= z.K || b >= z.K)
        throw std::invalid_argument("sample_moments: block label out of range");
    if (a > b) std::swap(a, b);
    const auto blocks = z.blocks();
    BlockPairMoments m;
    m.a = a;
    m.b = b;
    m.T = N.horizon_T;
    if (!(m.T > 0.0)) throw std::invalid_argument("sample_moments: horizon must be positive");

    std::vector<std::pair<std::int64_t, std::int64_t>> counts;  // (N_ij, N_ji), X(i,j) = (a,b)
    if (a == b) {
        for (int i : blocks[a])
            for (int j : blocks[a])
                if (i != j) counts.emplace_back(N.at(i, j), N.at(j, i));
    } else {
        for (int i : blocks[a])
            for (int j : blocks[b]) counts.emplace_back(N.at(i, j), N.at(j, i));
    }
    if (counts.empty()) throw std::invalid_argument("sample_moments: empty block pair");
    m.n_ab = static_cast<int>(counts.size());

    double sum_ab = 0.0, sum_ba = 0.0;
    for (const auto& c : counts) {
        sum_ab += static_cast<double>(c.first);
        sum_ba += static_cast<double>(c.second);
    }
    const double denom = m.T * m.n_ab;
    m.lambda_ab = sum_ab / denom;
    m.lambda_ba = sum_ba / denom;
    const double center_ab = m.lambda_ab * m.T, center_ba = m.lambda_ba * m.T;
    for (const auto& c : counts) {
        const double d_ab = static_cast<double>(c.first) - center_ab;
        const double d_ba = static_cast<double>(c.second) - center_ba;
        m.c_abab += d_ab * d_ab;
        m.c_baba += d_ba * d_ba;
        m.c_abba += d_ab * d_ba;
    }
    m.c_abab /= denom;
    m.c_baba /= denom;
    m.c_abba /= denom;
    return m;
}

PopulationMoments population_moments(const BlockPairTheta& theta) {
    const double a00 = theta.alpha_n_ab, a01 = theta.alpha_r_ab;
    const double a10 = theta.alpha_r_ba, a11 = theta.alpha_n_ba;
    const StabilityResult st = stability_check(a00, a11, a01, a10, 1.0 - 1e-12);
    if (!st.stable) throw std::domain_error("population_moments: rho(Gamma) >= 1");
    const double det = (1.0 - a00) * (1.0 - a11) - a01 * a10;
    const double r00 = (1.0 - a11) / det, r01 = a01 / det;
    const double r10 = a10 / det, r11 = (1.0 - a00) / det;

    PopulationMoments p;
    p.lambda_ab = r00 * theta.m_ab + r01 * theta.m_ba;
    p.lambda_ba = r10 * theta.m_ab + r11 * theta.m_ba;
    p.c_abab = r00 * r00 * p.lambda_ab + r01 * r01 * p.lambda_ba;
    p.c_baba = r10 * r10 * p.lambda_ab + r11 * r11 * p.lambda_ba;
    p.c_abba = r00 * r10 * p.lambda_ab + r01 * r11 * p.lambda_ba;
    return p;
}

namespace {

double logistic(double q) { return 1.0 / (1.0 + std::exp(-q)); }

double logit_of(double alpha, double sigma_star) {
    const double p = std::clamp(alpha / sigma_star, 1e-9, 1.0 - 1e-9);
    return std::log(p / (1.0 - p));
}

// Cumulant inversion for the shared-reciprocal restriction: with Gamma
// symmetric, B = D^1/2 R D^1/2 satisfies B^2 = D^1/2 C D^1/2 with
// D = diag(Lambda), so R follows from a 2x2 PSD square root. Used as a
// warm start, never as the estimator itself.
bool invert_cumulants(const BlockPairMoments& m, double sigma_star, BlockPairTheta* out) {
    const double l0 = m.lambda_ab, l1 = m.lambda_ba;
    if (!(l0 > 0.0) || !(l1 > 0.0)) return false;
    double c00 = m.c_abab, c11 = m.c_baba, cx = m.c_abba;
    if (!(c00 > 0.0) || !(c11 > 0.0)) return false;
    const double max_cx = std::sqrt(c00 * c11) * (1.0 - 1e-12);
    cx = std::clamp(cx, -max_cx, max_cx);

    const double y00 = l0 * c00, y11 = l1 * c11, y01 = std::sqrt(l0 * l1) * cx;
    const double dety = y00 * y11 - y01 * y01;
    if (dety < 0.0) return false;
    const double s = std::sqrt(dety);
    const double denom = std::sqrt(y00 + y11 + 2.0 * s);
    if (!(denom > 0.0)) return false;
    const double b00 = (y00 + s) / denom, b11 = (y11 + s) / denom, b01 = y01 / denom;

    const double r00 = b00 / l0, r11 = b11 / l1, r01 = b01 / std::sqrt(l0 * l1);
    const double detr = r00 * r11 - r01 * r01;
    if (!(detr > 0.0)) return false;
    // Gamma = I - R^{-1}
    const double g00 = 1.0 - r11 / detr;
    const double g11 = 1.0 - r00 / detr;
    const double g01 = r01 / detr;

    out->alpha_n_ab = std::clamp(g00, 0.0, sigma_star * (1.0 - 1e-9));
    out->alpha_n_ba = std::clamp(g11, 0.0, sigma_star * (1.0 - 1e-9));
    double ar = std::max(g01, 0.0);
    out->alpha_r_ab = out->alpha_r_ba = ar;
    // joint feasibility: rho scales linearly under uniform alpha scaling
    const double rho = out->stability(sigma_star).rho;
    if (rho > sigma_star && rho > 0.0) {
        const double scale = 0.98 * sigma_star / rho;
        out->alpha_n_ab *= scale;
        out->alpha_n_ba *= scale;
        out->alpha_r_ab *= scale;
        out->alpha_r_ba *= scale;
    }
    // M = (I - Gamma) Lambda
    out->m_ab = std::max((1.0 - out->alpha_n_ab) * l0 - out->alpha_r_ab * l1, 1e-12);
    out->m_ba = std::max((1.0 - out->alpha_n_ba) * l1 - out->alpha_r_ab * l0, 1e-12);
    return true;
}

} // namespace

GMMResult gmm_fit(const BlockPairMoments& moments, const GMMOptions& opt) {
    if (!(moments.lambda_ab > 0.0) || !(moments.lambda_ba > 0.0))
        throw std::invalid_argument("gmm_fit: sample rates must be strictly positive");
    for (double v : {moments.lambda_ab, moments.lambda_ba, moments.c_abab, moments.c_baba,
                     moments.c_abba})
        if (!std::isfinite(v)) throw std::invalid_argument("gmm_fit: non-finite moment");
    if (opt.variant == SRVariant::full)
        throw std::invalid_argument("gmm_fit: only the restricted variants are identified");

    const bool diagonal = moments.a == moments.b;
    const double ss = opt.sigma_star;
    // free coordinates: (log m_ab, log m_ba, q1, q2, q3) with the variant
    // deciding which alphas the qs drive; diagonal pairs use (log m, q_n, q_r)
    const int dim = diagonal ? 3 : 5;

    auto unpack = [&](const std::vector<double>& x) {
        BlockPairTheta t;
        t.a = moments.a;
        t.b = moments.b;
        if (diagonal) {
            t.m_ab = t.m_ba = std::exp(x[0]);
            t.alpha_n_ab = t.alpha_n_ba = ss * logistic(x[1]);
            t.alpha_r_ab = t.alpha_r_ba = ss * logistic(x[2]);
        } else {
            t.m_ab = std::exp(x[0]);
            t.m_ba = std::exp(x[1]);
            if (opt.variant == SRVariant::restricted_r) {
                t.alpha_n_ab = ss * logistic(x[2]);
                t.alpha_n_ba = ss * logistic(x[3]);
                t.alpha_r_ab = t.alpha_r_ba = ss * logistic(x[4]);
            } else {
                t.alpha_n_ab = t.alpha_n_ba = ss * logistic(x[2]);
                t.alpha_r_ab = ss * logistic(x[3]);
                t.alpha_r_ba = ss * logistic(x[4]);
            }
        }
        return t;
    };

    auto pack = [&](const BlockPairTheta& t) {
        std::vector<double> x(dim);
        if (diagonal) {
            x[0] = std::log(std::max(t.m_ab, 1e-300));
            x[1] = logit_of(t.alpha_n_ab, ss);
            x[2] = logit_of(t.alpha_r_ab, ss);
        } else {
            x[0] = std::log(std::max(t.m_ab, 1e-300));
            x[1] = std::log(std::max(t.m_ba, 1e-300));
            if (opt.variant == SRVariant::restricted_r) {
                x[2] = logit_of(t.alpha_n_ab, ss);
                x[3] = logit_of(t.alpha_n_ba, ss);
                x[4] = logit_of(t.alpha_r_ab, ss);
            } else {
                x[2] = logit_of(t.alpha_n_ab, ss);
                x[3] = logit_of(t.alpha_r_ab, ss);
                x[4] = logit_of(t.alpha_r_ba, ss);
            }
        }
        return x;
    };

    auto objective = [&](const std::vector<double>& x) {
        const BlockPairTheta t = unpack(x);
        const double rho = t.stability(ss).rho;
        if (rho > ss) return 1e50 * (1.0 + rho - ss);
        const PopulationMoments p = population_moments(t);
        const double r1 = p.lambda_ab - moments.lambda_ab;
        const double r2 = p.lambda_ba - moments.lambda_ba;
        const double r3 = p.c_abab - moments.c_abab;
        const double r4 = p.c_baba - moments.c_baba;
        const double r5 = p.c_abba - moments.c_abba;
        if (diagonal) return r1 * r1 + r3 * r3 + r5 * r5;
        return r1 * r1 + r2 * r2 + r3 * r3 + r4 * r4 + r5 * r5;
    };

    std::vector<std::vector<double>> starts;
    if (opt.variant == SRVariant::restricted_r) {
        BlockPairTheta warm;
        warm.a = moments.a;
        warm.b = moments.b;
        if (invert_cumulants(moments, ss, &warm)) starts.push_back(pack(warm));
    }
    {
        BlockPairTheta poisson;
        poisson.m_ab = moments.lambda_ab;
        poisson.m_ba = moments.lambda_ba;
        poisson.alpha_n_ab = poisson.alpha_n_ba = 0.0;
        poisson.alpha_r_ab = poisson.alpha_r_ba = 0.0;
        starts.push_back(pack(poisson));
    }
    Rng rng(derive_seed(opt.seed, {0x63d3ULL, (std::uint64_t)moments.a, (std::uint64_t)moments.b}));
    while (static_cast<int>(starts.size()) < opt.starts) {
        BlockPairTheta t;
        t.alpha_n_ab = 0.8 * ss * rng.next_double();
        t.alpha_n_ba = diagonal ? t.alpha_n_ab : 0.8 * ss * rng.next_double();
        const double r_cap = std::sqrt((ss - t.alpha_n_ab) * (ss - t.alpha_n_ba));
        t.alpha_r_ab = t.alpha_r_ba = 0.8 * r_cap * rng.next_double();
        t.m_ab = moments.lambda_ab * (0.25 + 1.5 * rng.next_double());
        t.m_ba = diagonal ? t.m_ab : moments.lambda_ba * (0.25 + 1.5 * rng.next_double());
        starts.push_back(pack(t));
    }

    GMMResult best;
    best.objective = std::numeric_limits<double>::infinity();
    int evals = 0;
    for (const auto& x0 : starts) {
        NelderMeadResult nm = nelder_mead(objective, x0, 0.5, 1e-16, opt.max_iter);
        evals += nm.evaluations;
        if (nm.fx < best.objective) {
            best.objective = nm.fx;
            best.theta = unpack(nm.x);
        }
    }
    best.evaluations = evals;

    const double scale = moments.lambda_ab * moments.lambda_ab +
                         moments.lambda_ba * moments.lambda_ba + moments.c_abab * moments.c_abab +
                         moments.c_baba * moments.c_baba + moments.c_abba * moments.c_abba;
    best.converged = best.objective <= std::max(1e-18, opt.objective_tol * scale);
    return best;
}

} // namespace dch
