#include "dch/excitation.hpp"

#include "dch/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dch {

namespace {

double rho_2x2(double p, double q, double r, double s) {
    // nonnegative [[p,q],[r,s]] has real eigenvalues; the dominant one is
    // (p+s)/2 + sqrt(((p-s)/2)^2 + q r) and it dominates in modulus
    const double half_sum = 0.5 * (p + s);
    const double half_diff = 0.5 * (p - s);
    return half_sum + std::sqrt(half_diff * half_diff + q * r);
}

SubBlock make_sub(BlockPattern kind, double scalar, double row_sum, double col_sum) {
    SubBlock sb;
    sb.kind = kind;
    sb.scalar = scalar;
    sb.row_sum = row_sum;
    sb.col_sum = col_sum;
    return sb;
}

void fill_reduced(BlockPairStructure& bp) {
    bp.reduced[0][0] = bp.sub[0][0].row_sum;
    bp.reduced[0][1] = bp.sub[0][1].row_sum;
    bp.reduced[1][0] = bp.sub[1][0].row_sum;
    bp.reduced[1][1] = bp.sub[1][1].row_sum;
    if (bp.a == bp.b)
        bp.rho = bp.reduced[0][0];
    else
        bp.rho = rho_2x2(bp.reduced[0][0], bp.reduced[0][1], bp.reduced[1][0], bp.reduced[1][1]);
}

int within_dim(int m, bool self_edges) { return self_edges ? m * m : m * (m - 1); }

} // namespace

StabilityResult stability_check(double alpha_n_ab, double alpha_n_ba, double alpha_r_ab,
                                double alpha_r_ba, double sigma_star) {
    for (double v : {alpha_n_ab, alpha_n_ba, alpha_r_ab, alpha_r_ba})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("stability_check: alphas must be finite and nonnegative");
    StabilityResult res;
    res.rho = rho_2x2(alpha_n_ab, alpha_r_ab, alpha_r_ba, alpha_n_ba);
    res.stable = res.rho <= sigma_star && sigma_star < 1.0;
    return res;
}

ExcitationOperator::ExcitationOperator(ModelFamily family, Membership z,
                                       std::vector<BlockPairStructure> pairs,
                                       bool allow_self_edges)
    : family_(family), z_(std::move(z)), pairs_(std::move(pairs)),
      allow_self_edges_(allow_self_edges) {
    for (const auto& bp : pairs_) {
        if (bp.dim_ab + bp.dim_ba == 0) continue;
        sigma_ = std::max(sigma_, bp.rho);
        gamma_max_ = std::max(gamma_max_, bp.sub[0][0].row_sum);
        if (bp.a != bp.b) {
            gamma_max_ = std::max({gamma_max_, bp.sub[0][1].row_sum, bp.sub[1][0].row_sum,
                                   bp.sub[1][1].row_sum});
        }
    }
}

const BlockPairStructure& ExcitationOperator::block_pair(int a, int b) const {
    if (a > b) std::swap(a, b);
    for (const auto& bp : pairs_)
        if (bp.a == a && bp.b == b) return bp;
    throw std::out_of_range("ExcitationOperator: no such block pair");
}

Matrix ExcitationOperator::stationary_rates(const Matrix& M) const {
    if (M.rows() != K() || M.cols() != K())
        throw std::invalid_argument("stationary_rates: baseline matrix must be K x K");
    if (sigma_ >= 1.0)
        throw std::domain_error("stationary_rates: unstable model, rho(Gamma) >= 1");
    Matrix rates(K(), K());
    for (const auto& bp : pairs_) {
        if (bp.a == bp.b) {
            if (bp.dim_ab == 0) continue;
            rates(bp.a, bp.a) = M(bp.a, bp.a) / (1.0 - bp.reduced[0][0]);
        } else {
            if (bp.dim_ab == 0 || bp.dim_ba == 0) continue;
            // (I - G) x = (M_ab, M_ba) with G the 2x2 reduced matrix
            const double g00 = bp.reduced[0][0], g01 = bp.reduced[0][1];
            const double g10 = bp.reduced[1][0], g11 = bp.reduced[1][1];
            const double det = (1.0 - g00) * (1.0 - g11) - g01 * g10;
            rates(bp.a, bp.b) = ((1.0 - g11) * M(bp.a, bp.b) + g01 * M(bp.b, bp.a)) / det;
            rates(bp.b, bp.a) = (g10 * M(bp.a, bp.b) + (1.0 - g00) * M(bp.b, bp.a)) / det;
        }
    }
    return rates;
}

ExcitationOperator build_excitation(const SRParams& params, ModelFamily family,
                                    const Membership& z, bool allow_self_edges) {
    if (family == ModelFamily::mulch)
        throw std::invalid_argument("build_excitation: MULCH needs MULCHParams");
    params.validate();
    z.validate();
    if (params.K() != z.K)
        throw std::invalid_argument("build_excitation: params K does not match membership K");

    const auto sizes = z.block_sizes();
    std::vector<BlockPairStructure> pairs;
    for (int a = 0; a < z.K; ++a) {
        for (int b = a; b < z.K; ++b) {
            BlockPairStructure bp;
            bp.a = a;
            bp.b = b;
            if (a == b) {
                bp.dim_ab = within_dim(sizes[a], allow_self_edges);
                bp.dim_ba = 0;
                const double an = params.alpha_n(a, a), ar = params.alpha_r(a, a);
                switch (family) {
                    case ModelFamily::chip:
                        bp.sub[0][0] = make_sub(BlockPattern::diagonal, an, an, an);
                        break;
                    case ModelFamily::bhm: {
                        const double per = bp.dim_ab > 0 ? an / bp.dim_ab : 0.0;
                        bp.sub[0][0] = make_sub(BlockPattern::uniform, per, an, an);
                        break;
                    }
                    default:  // sr
                        bp.sub[0][0] =
                            make_sub(BlockPattern::self_reciprocal, an, an + ar, an + ar);
                }
            } else {
                bp.dim_ab = sizes[a] * sizes[b];
                bp.dim_ba = bp.dim_ab;
                const double an_ab = params.alpha_n(a, b), an_ba = params.alpha_n(b, a);
                const double ar_ab = params.alpha_r(a, b), ar_ba = params.alpha_r(b, a);
                switch (family) {
                    case ModelFamily::chip:
                        bp.sub[0][0] = make_sub(BlockPattern::diagonal, an_ab, an_ab, an_ab);
                        bp.sub[1][1] = make_sub(BlockPattern::diagonal, an_ba, an_ba, an_ba);
                        break;
                    case ModelFamily::bhm:
                        bp.sub[0][0] = make_sub(BlockPattern::uniform,
                                                bp.dim_ab > 0 ? an_ab / bp.dim_ab : 0.0, an_ab,
                                                an_ab);
                        bp.sub[1][1] = make_sub(BlockPattern::uniform,
                                                bp.dim_ba > 0 ? an_ba / bp.dim_ba : 0.0, an_ba,
                                                an_ba);
                        break;
                    default:  // sr: diagonal self part, reciprocal permutation cross part
                        bp.sub[0][0] = make_sub(BlockPattern::diagonal, an_ab, an_ab, an_ab);
                        bp.sub[0][1] = make_sub(BlockPattern::self_reciprocal, ar_ab, ar_ab, ar_ab);
                        bp.sub[1][0] = make_sub(BlockPattern::self_reciprocal, ar_ba, ar_ba, ar_ba);
                        bp.sub[1][1] = make_sub(BlockPattern::diagonal, an_ba, an_ba, an_ba);
                }
            }
            fill_reduced(bp);
            pairs.push_back(bp);
        }
    }
    return ExcitationOperator(family, z, std::move(pairs), allow_self_edges);
}

ExcitationOperator build_excitation(const MULCHParams& params, const Membership& z,
                                    bool allow_self_edges) {
    params.validate();
    z.validate();
    if (params.K() != z.K)
        throw std::invalid_argument("build_excitation: params K does not match membership K");
    if (allow_self_edges)
        throw std::invalid_argument(
            "build_excitation: MULCH excitation patterns require allow_self_edges = false");

    const auto sizes = z.block_sizes();
    std::vector<BlockPairStructure> pairs;
    for (int a = 0; a < z.K; ++a) {
        for (int b = a; b < z.K; ++b) {
            BlockPairStructure bp;
            bp.a = a;
            bp.b = b;
            if (a == b) {
                const int m = sizes[a];
                bp.dim_ab = within_dim(m, false);
                bp.dim_ba = 0;
                // every non-self, non-reciprocal pair in the block contributes
                // through exactly one of tc/ac/gr/ar, m-2 sources each
                const double others = std::max(0, m - 2) *
                                      (params.alpha_tc(a, a) + params.alpha_ac(a, a) +
                                       params.alpha_gr(a, a) + params.alpha_ar(a, a));
                const double g = params.alpha_n(a, a) + params.alpha_r(a, a) + others;
                bp.sub[0][0] = make_sub(BlockPattern::mulch_mix, g, g, g);
            } else {
                const int ma = sizes[a], mb = sizes[b];
                bp.dim_ab = ma * mb;
                bp.dim_ba = ma * mb;
                const double g00 = params.alpha_n(a, b) + (mb - 1) * params.alpha_tc(a, b) +
                                   (ma - 1) * params.alpha_ac(a, b);
                const double g01 = params.alpha_r(a, b) + (mb - 1) * params.alpha_gr(a, b) +
                                   (ma - 1) * params.alpha_ar(a, b);
                const double g10 = params.alpha_r(b, a) + (ma - 1) * params.alpha_gr(b, a) +
                                   (mb - 1) * params.alpha_ar(b, a);
                const double g11 = params.alpha_n(b, a) + (ma - 1) * params.alpha_tc(b, a) +
                                   (mb - 1) * params.alpha_ac(b, a);
                bp.sub[0][0] = make_sub(BlockPattern::mulch_mix, g00, g00, g00);
                bp.sub[0][1] = make_sub(BlockPattern::mulch_mix, g01, g01, g01);
                bp.sub[1][0] = make_sub(BlockPattern::mulch_mix, g10, g10, g10);
                bp.sub[1][1] = make_sub(BlockPattern::mulch_mix, g11, g11, g11);
            }
            fill_reduced(bp);
            pairs.push_back(bp);
        }
    }
    return ExcitationOperator(ModelFamily::mulch, z, std::move(pairs), allow_self_edges);
}

namespace {

Matrix rates_to_counts(const ExcitationOperator& op, const Matrix& rates, double T) {
    const Membership& z = op.membership();
    const int n = z.n();
    Matrix out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j && !op.allow_self_edges()) continue;
            out(i, j) = rates(z.z[i], z.z[j]) * T;
        }
    return out;
}

ModelDiagnostics diagnostics_impl(const ExcitationOperator& op, const Matrix& M, double T) {
    ModelDiagnostics d;
    d.sigma_star = op.spectral_radius();
    d.gamma_max = op.gamma_max();
    for (int a = 0; a < M.rows(); ++a)
        for (int b = 0; b < M.cols(); ++b) d.mu_max = std::max(d.mu_max, M(a, b));

    const Matrix rates = op.stationary_rates(M);  // throws when unstable
    const Membership& z = op.membership();
    const auto sizes = z.block_sizes();
    const int K = z.K;
    const int n = z.n();

    // lambda_K of E N_T / T: the block-constant population matrix Z B Z^T has
    // the same nonzero singular values as D B D with D = diag(sqrt(n_a))
    Matrix dbd(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b)
            dbd(a, b) = std::sqrt(static_cast<double>(sizes[a])) * rates(a, b) *
                        std::sqrt(static_cast<double>(sizes[b]));
    SVD s = svd_dense(dbd);
    d.lambda_K = K <= static_cast<int>(s.singular_values.size()) ? s.singular_values[K - 1] : 0.0;

    // two-level separation h, defined when within/between parameters collapse
    // to single (gamma, mu) values
    d.h_value = std::numeric_limits<double>::quiet_NaN();
    if (K >= 2) {
        bool two_level = true;
        const double g1 = op.block_pair(0, 0).sub[0][0].row_sum;
        const double mu1 = M(0, 0);
        double g2 = 0.0, mu2 = 0.0;
        bool have_between = false;
        for (const auto& bp : op.block_pairs()) {
            if (bp.a == bp.b) {
                if (std::abs(bp.sub[0][0].row_sum - g1) > 1e-12 ||
                    std::abs(M(bp.a, bp.a) - mu1) > 1e-15)
                    two_level = false;
            } else {
                const double row_ab = bp.reduced[0][0] + bp.reduced[0][1];
                const double row_ba = bp.reduced[1][0] + bp.reduced[1][1];
                if (!have_between) {
                    g2 = row_ab;
                    mu2 = M(bp.a, bp.b);
                    have_between = true;
                }
                if (std::abs(row_ab - g2) > 1e-12 || std::abs(row_ba - g2) > 1e-12 ||
                    std::abs(M(bp.a, bp.b) - mu2) > 1e-15 || std::abs(M(bp.b, bp.a) - mu2) > 1e-15)
                    two_level = false;
            }
        }
        if (two_level && have_between) {
            const double t1 = 1.0 / (1.0 - g1);
            const double t2 = mu2 / mu1 / (1.0 - g2);
            d.h_value = (t1 - t2) * (t1 - t2);
        }
    }

    d.bound_proxy = static_cast<double>(K) * K * std::log(static_cast<double>(n)) * std::log(T) /
                    (static_cast<double>(n) * T * d.mu_max);
    return d;
}

} // namespace

Matrix expected_count_matrix(const SRParams& params, ModelFamily family, const Membership& z,
                             double T, bool allow_self_edges) {
    const ExcitationOperator op = build_excitation(params, family, z, allow_self_edges);
    return rates_to_counts(op, op.stationary_rates(params.M), T);
}

Matrix expected_count_matrix(const MULCHParams& params, const Membership& z, double T,
                             bool allow_self_edges) {
    const ExcitationOperator op = build_excitation(params, z, allow_self_edges);
    return rates_to_counts(op, op.stationary_rates(params.mu), T);
}

ModelDiagnostics diagnostics(const SRParams& params, ModelFamily family, const Membership& z,
                             double T) {
    const ExcitationOperator op = build_excitation(params, family, z, false);
    return diagnostics_impl(op, params.M, T);
}

ModelDiagnostics diagnostics(const MULCHParams& params, const Membership& z, double T) {
    const ExcitationOperator op = build_excitation(params, z, false);
    return diagnostics_impl(op, params.mu, T);
}

std::vector<std::pair<int, int>> pair_ordering(const Membership& z, bool allow_self_edges) {
    const auto blocks = z.blocks();
    std::vector<std::pair<int, int>> order;
    for (int a = 0; a < z.K; ++a) {
        for (int b = a; b < z.K; ++b) {
            if (a == b) {
                for (int i : blocks[a])
                    for (int j : blocks[a])
                        if (i != j || allow_self_edges) order.emplace_back(i, j);
            } else {
                for (int i : blocks[a])
                    for (int j : blocks[b]) order.emplace_back(i, j);
                for (int j : blocks[b])
                    for (int i : blocks[a]) order.emplace_back(j, i);
            }
        }
    }
    return order;
}

} // namespace dch
