#include "dch/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dch {

namespace {

NelderMeadResult run_simplex(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& x0, double step, double tol_f,
                             int max_iter, int* evals) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
    for (std::size_t i = 0; i <= n; ++i) {
        fv[i] = f(pts[i]);
        ++*evals;
    }

    std::vector<std::size_t> ord(n + 1);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::iota(ord.begin(), ord.end(), std::size_t{0});
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = ord[0], worst = ord[n], second = ord[n - 1];
        if (fv[worst] - fv[best] <= tol_f * (std::abs(fv[best]) + tol_f)) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[k][d];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t d = 0; d < n; ++d)
                p[d] = centroid[d] + coef * (pts[worst][d] - centroid[d]);
            return p;
        };

        std::vector<double> refl = blend(-1.0);
        const double f_refl = f(refl);
        ++*evals;
        if (f_refl < fv[ord[0]]) {
            std::vector<double> expa = blend(-2.0);
            const double f_expa = f(expa);
            ++*evals;
            if (f_expa < f_refl) {
                pts[worst] = std::move(expa);
                fv[worst] = f_expa;
            } else {
                pts[worst] = std::move(refl);
                fv[worst] = f_refl;
            }
        } else if (f_refl < fv[second]) {
            pts[worst] = std::move(refl);
            fv[worst] = f_refl;
        } else {
            std::vector<double> contr = blend(f_refl < fv[worst] ? -0.5 : 0.5);
            const double f_contr = f(contr);
            ++*evals;
            if (f_contr < std::min(f_refl, fv[worst])) {
                pts[worst] = std::move(contr);
                fv[worst] = f_contr;
            } else {
                for (std::size_t k = 0; k <= n; ++k) {  // shrink toward best
                    if (k == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        pts[k][d] = pts[best][d] + 0.5 * (pts[k][d] - pts[best][d]);
                    fv[k] = f(pts[k]);
                    ++*evals;
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k <= n; ++k)
        if (fv[k] < fv[best]) best = k;
    NelderMeadResult res;
    res.x = pts[best];
    res.fx = fv[best];
    return res;
}

} // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, double step, double tol_f, int max_iter) {
    int evals = 0;
    NelderMeadResult first = run_simplex(f, x0, step, tol_f, max_iter, &evals);
    NelderMeadResult second = run_simplex(f, first.x, 0.1 * step, tol_f, max_iter / 2, &evals);
    NelderMeadResult& best = second.fx <= first.fx ? second : first;
    best.evaluations = evals;
    return best;
}

} // namespace dch
