#pragma once

#include "dch/matrix.hpp"

#include <stdexcept>
#include <string>

namespace dch {

enum class ModelFamily { chip, bhm, sr, mulch };

enum class SRVariant { full, restricted_r, restricted_n };

std::string to_string(ModelFamily f);
std::string to_string(SRVariant v);
ModelFamily model_family_from_string(const std::string& s);
SRVariant sr_variant_from_string(const std::string& s);

// Block-level parameters for the CHIP / BHM / SR families. CHIP and BHM use
// only (M, alpha_n, beta_n); SR adds the reciprocal kernel. Baselines M and
// decays beta are rates per unit time, the alphas are branching counts.
struct SRParams {
    Matrix M;        // K x K, strictly positive
    Matrix alpha_n;  // K x K, nonnegative
    Matrix alpha_r;  // K x K, nonnegative
    Matrix beta_n;   // K x K, strictly positive
    Matrix beta_r;   // K x K, strictly positive
    SRVariant variant = SRVariant::full;

    int K() const { return M.rows(); }
    void validate() const;

    // Uniform parameters across a diagonal/off-diagonal split, the shape used
    // throughout the simulation studies.
    static SRParams two_level(int K, double mu_in, double an_in, double ar_in, double bn_in,
                              double br_in, double mu_out, double an_out, double ar_out,
                              double bn_out, double br_out,
                              SRVariant variant = SRVariant::restricted_r);
};

// Block-level parameters for the MULCH family: six excitation types, each
// with its own jump-size and decay matrix.
struct MULCHParams {
    Matrix mu;
    Matrix alpha_n, alpha_r, alpha_tc, alpha_ac, alpha_gr, alpha_ar;
    Matrix beta_n, beta_r, beta_tc, beta_ac, beta_gr, beta_ar;

    int K() const { return mu.rows(); }
    void validate() const;

    // Simplified symmetric MULCH: one parameter set within blocks, one
    // between, equal decay everywhere.
    static MULCHParams simplified_symmetric(int K, double mu1, double an1, double ar1,
                                            double other1, double mu2, double an2, double ar2,
                                            double other2, double beta);
};

} // namespace dch
