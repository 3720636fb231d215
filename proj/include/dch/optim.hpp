#pragma once

#include <functional>
#include <vector>

namespace dch {

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int evaluations = 0;
};

// Derivative-free simplex minimizer with one refinement restart around the
// incumbent. The best vertex is never discarded, so the result is no worse
// than the starting point.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, double step, double tol_f = 1e-12,
                             int max_iter = 2000);

} // namespace dch
