#include "dch/params.hpp"

#include <cmath>

namespace dch {

namespace {

void check_square(const Matrix& m, int K, const char* name) {
    if (m.rows() != K || m.cols() != K)
        throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(K) + "x" +
                                    std::to_string(K) + " matrix");
}

void check_entries(const Matrix& m, bool strictly_positive, const char* name) {
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            if (!std::isfinite(v) || v < 0.0 || (strictly_positive && v <= 0.0))
                throw std::invalid_argument(std::string(name) + ": entries must be " +
                                            (strictly_positive ? "finite and > 0" : "finite and >= 0"));
        }
}

} // namespace

std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::chip: return "chip";
        case ModelFamily::bhm: return "bhm";
        case ModelFamily::sr: return "sr";
        case ModelFamily::mulch: return "mulch";
    }
    return "?";
}

std::string to_string(SRVariant v) {
    switch (v) {
        case SRVariant::full: return "full";
        case SRVariant::restricted_r: return "restricted_r";
        case SRVariant::restricted_n: return "restricted_n";
    }
    return "?";
}

ModelFamily model_family_from_string(const std::string& s) {
    if (s == "chip") return ModelFamily::chip;
    if (s == "bhm") return ModelFamily::bhm;
    if (s == "sr") return ModelFamily::sr;
    if (s == "mulch") return ModelFamily::mulch;
    throw std::invalid_argument("unknown model family: " + s);
}

SRVariant sr_variant_from_string(const std::string& s) {
    if (s == "full") return SRVariant::full;
    if (s == "restricted_r") return SRVariant::restricted_r;
    if (s == "restricted_n") return SRVariant::restricted_n;
    throw std::invalid_argument("unknown SR variant: " + s);
}

void SRParams::validate() const {
    const int k = K();
    if (k < 1) throw std::invalid_argument("SRParams: empty parameter matrices");
    check_square(M, k, "M");
    check_square(alpha_n, k, "alpha_n");
    check_square(alpha_r, k, "alpha_r");
    check_square(beta_n, k, "beta_n");
    check_square(beta_r, k, "beta_r");
    check_entries(M, true, "M");
    check_entries(alpha_n, false, "alpha_n");
    check_entries(alpha_r, false, "alpha_r");
    check_entries(beta_n, true, "beta_n");
    check_entries(beta_r, true, "beta_r");
    if (variant == SRVariant::restricted_r || variant == SRVariant::restricted_n) {
        const Matrix& m = variant == SRVariant::restricted_r ? alpha_r : alpha_n;
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b)
                if (m(a, b) != m(b, a))
                    throw std::invalid_argument("SRParams: restricted variant requires a symmetric " +
                                                std::string(variant == SRVariant::restricted_r
                                                                ? "alpha_r"
                                                                : "alpha_n"));
    }
}

SRParams SRParams::two_level(int K, double mu_in, double an_in, double ar_in, double bn_in,
                             double br_in, double mu_out, double an_out, double ar_out,
                             double bn_out, double br_out, SRVariant variant) {
    SRParams p;
    p.M = Matrix(K, K, mu_out);
    p.alpha_n = Matrix(K, K, an_out);
    p.alpha_r = Matrix(K, K, ar_out);
    p.beta_n = Matrix(K, K, bn_out);
    p.beta_r = Matrix(K, K, br_out);
    for (int a = 0; a < K; ++a) {
        p.M(a, a) = mu_in;
        p.alpha_n(a, a) = an_in;
        p.alpha_r(a, a) = ar_in;
        p.beta_n(a, a) = bn_in;
        p.beta_r(a, a) = br_in;
    }
    p.variant = variant;
    p.validate();
    return p;
}

void MULCHParams::validate() const {
    const int k = K();
    if (k < 1) throw std::invalid_argument("MULCHParams: empty parameter matrices");
    check_square(mu, k, "mu");
    check_entries(mu, true, "mu");
    for (const auto* m : {&alpha_n, &alpha_r, &alpha_tc, &alpha_ac, &alpha_gr, &alpha_ar}) {
        check_square(*m, k, "alpha");
        check_entries(*m, false, "alpha");
    }
    for (const auto* m : {&beta_n, &beta_r, &beta_tc, &beta_ac, &beta_gr, &beta_ar}) {
        check_square(*m, k, "beta");
        check_entries(*m, true, "beta");
    }
}

MULCHParams MULCHParams::simplified_symmetric(int K, double mu1, double an1, double ar1,
                                              double other1, double mu2, double an2, double ar2,
                                              double other2, double beta) {
    MULCHParams p;
    auto two = [&](double in, double out) {
        Matrix m(K, K, out);
        for (int a = 0; a < K; ++a) m(a, a) = in;
        return m;
    };
    p.mu = two(mu1, mu2);
    p.alpha_n = two(an1, an2);
    p.alpha_r = two(ar1, ar2);
    p.alpha_tc = two(other1, other2);
    p.alpha_ac = two(other1, other2);
    p.alpha_gr = two(other1, other2);
    p.alpha_ar = two(other1, other2);
    Matrix b(K, K, beta);
    p.beta_n = b;
    p.beta_r = b;
    p.beta_tc = b;
    p.beta_ac = b;
    p.beta_gr = b;
    p.beta_ar = b;
    p.validate();
    return p;
}

} // namespace dch
