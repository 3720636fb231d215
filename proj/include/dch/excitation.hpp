#pragma once

#include "dch/matrix.hpp"
#include "dch/membership.hpp"
#include "dch/params.hpp"

#include <vector>

namespace dch {

// Feasibility threshold on the spectral radius used by stability checks and
// the GMM feasible set. The theory only requires a fixed constant < 1.
inline constexpr double kDefaultSigmaStar = 0.99;

struct StabilityResult {
    double rho = 0.0;
    bool stable = false;
};

// Spectral radius of the 2x2 excitation block
//   [ alpha_n_ab  alpha_r_ab ]
//   [ alpha_r_ba  alpha_n_ba ]
// together with the decision rho <= sigma_star. Closed form; equivalent to
// the parameter inequalities of the restricted-SR stability condition.
StabilityResult stability_check(double alpha_n_ab, double alpha_n_ba, double alpha_r_ab,
                                double alpha_r_ba, double sigma_star = kDefaultSigmaStar);

enum class BlockPattern { zero, diagonal, uniform, self_reciprocal, mulch_mix };

struct SubBlock {
    BlockPattern kind = BlockPattern::zero;
    double scalar = 0.0;   // pattern weight (diagonal value, uniform total, ...)
    double row_sum = 0.0;  // identical across rows of the sub-block
    double col_sum = 0.0;  // identical across columns
};

// One block pair {a, b} of the block-diagonal excitation matrix. For a < b
// the four sub-blocks are indexed [target dir][source dir] with direction 0
// meaning (a,b) and 1 meaning (b,a); for a == b only sub[0][0] is used.
struct BlockPairStructure {
    int a = 0, b = 0;
    int dim_ab = 0;  // ordered pairs with X = (a,b)
    int dim_ba = 0;  // ordered pairs with X = (b,a); 0 when a == b
    SubBlock sub[2][2];
    double reduced[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // sub-block row sums
    double rho = 0.0;
};

// Structured representation of the n^2 x n^2 excitation matrix. Never
// materialized densely; row/column sums, the spectral radius, and solves
// against (I - Gamma) are all answered from the per-block-pair patterns,
// using the fact that every sub-block has identical row and column sums.
class ExcitationOperator {
  public:
    ExcitationOperator(ModelFamily family, Membership z, std::vector<BlockPairStructure> pairs,
                       bool allow_self_edges);

    ModelFamily family() const { return family_; }
    const Membership& membership() const { return z_; }
    int K() const { return z_.K; }
    int n() const { return z_.n(); }
    bool allow_self_edges() const { return allow_self_edges_; }
    const std::vector<BlockPairStructure>& block_pairs() const { return pairs_; }
    const BlockPairStructure& block_pair(int a, int b) const;  // a <= b

    // sigma* = rho(Gamma); exact, from the reduced per-pair matrices.
    double spectral_radius() const { return sigma_; }

    // max over block pairs and sub-blocks of the (identical) row/column sum
    double gamma_max() const { return gamma_max_; }

    // Per-ordered-pair stationary rates vec^{-1}(R vec(mu)) as a K x K
    // matrix, with baselines M. Throws std::domain_error when rho >= 1.
    Matrix stationary_rates(const Matrix& M) const;

  private:
    ModelFamily family_;
    Membership z_;
    std::vector<BlockPairStructure> pairs_;
    bool allow_self_edges_;
    double sigma_ = 0.0;
    double gamma_max_ = 0.0;
};

ExcitationOperator build_excitation(const SRParams& params, ModelFamily family,
                                    const Membership& z, bool allow_self_edges = false);
ExcitationOperator build_excitation(const MULCHParams& params, const Membership& z,
                                    bool allow_self_edges = false);

// E N_T = vec^{-1}(R vec(mu) T) as an n x n matrix; the diagonal is zero
// when self edges are disabled.
Matrix expected_count_matrix(const SRParams& params, ModelFamily family, const Membership& z,
                             double T, bool allow_self_edges = false);
Matrix expected_count_matrix(const MULCHParams& params, const Membership& z, double T,
                             bool allow_self_edges = false);

struct ModelDiagnostics {
    double sigma_star = 0.0;   // rho(Gamma)
    double gamma_max = 0.0;
    double mu_max = 0.0;       // max baseline entry
    double lambda_K = 0.0;     // K-th singular value of E N_T / T
    double h_value = 0.0;      // separation ((1-g1)^-1 - (1-g2)^-1 mu2/mu1)^2, NaN if not two-level
    double bound_proxy = 0.0;  // K^2 log n log T / (n T mu_max)
};

ModelDiagnostics diagnostics(const SRParams& params, ModelFamily family, const Membership& z,
                             double T);
ModelDiagnostics diagnostics(const MULCHParams& params, const Membership& z, double T);

// The fixed ordering A of directed node pairs from which vec/vec^-1 are
// defined: block pairs (a,b) with a <= b in lexicographic order; within a
// block pair, pairs with X=(a,b) lexicographically by (sender, receiver),
// then pairs with X=(b,a).
std::vector<std::pair<int, int>> pair_ordering(const Membership& z, bool allow_self_edges = false);

} // namespace dch
