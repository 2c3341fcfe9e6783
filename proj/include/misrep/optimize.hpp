#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace misrep {

struct NelderMeadOptions {
    double initial_step = 0.1;
    /// Relative spread of objective values across the simplex.
    double ftol = 1e-8;
    /// Largest coordinate distance from the best vertex.
    double xtol = 1e-7;
    std::size_t max_iterations = 500;
};

struct OptimResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    /// Best objective value after each iteration.
    std::vector<double> trace;
};

/// Derivative-free minimization (Nelder-Mead simplex). Non-finite objective
/// values are treated as +infinity so the search retreats from them.
template <class F>
OptimResult nelder_mead(F&& objective, std::vector<double> x0, const NelderMeadOptions& opt = {}) {
    const std::size_t dim = x0.size();
    OptimResult res;
    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    if (dim == 0) {
        res.value = eval(x0);
        res.x = std::move(x0);
        res.converged = true;
        return res;
    }

    std::vector<std::vector<double>> simplex(dim + 1, x0);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += opt.initial_step;
    std::vector<double> fv(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) fv[i] = eval(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);

    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> s2(dim + 1);
        std::vector<double> f2(dim + 1);
        for (std::size_t i = 0; i <= dim; ++i) {
            s2[i] = std::move(simplex[order[i]]);
            f2[i] = fv[order[i]];
        }
        simplex = std::move(s2);
        fv = std::move(f2);
    };

    auto converged = [&] {
        const double spread = fv[dim] - fv[0];
        if (!std::isfinite(spread)) return false;
        if (spread > opt.ftol * (std::abs(fv[0]) + 1e-12)) return false;
        double diam = 0.0;
        for (std::size_t i = 1; i <= dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) diam = std::max(diam, std::abs(simplex[i][j] - simplex[0][j]));
        return diam <= opt.xtol;
    };

    sort_simplex();
    while (res.iterations < opt.max_iterations) {
        if (converged()) {
            res.converged = true;
            break;
        }
        ++res.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j] / static_cast<double>(dim);

        for (std::size_t j = 0; j < dim; ++j) trial[j] = centroid[j] + (centroid[j] - simplex[dim][j]);
        const double fr = eval(trial);

        if (fr < fv[0]) {
            for (std::size_t j = 0; j < dim; ++j) trial2[j] = centroid[j] + 2.0 * (centroid[j] - simplex[dim][j]);
            const double fe = eval(trial2);
            if (fe < fr) {
                simplex[dim] = trial2;
                fv[dim] = fe;
            } else {
                simplex[dim] = trial;
                fv[dim] = fr;
            }
        } else if (fr < fv[dim - 1]) {
            simplex[dim] = trial;
            fv[dim] = fr;
        } else {
            const bool outside = fr < fv[dim];
            for (std::size_t j = 0; j < dim; ++j)
                trial2[j] = outside ? centroid[j] + 0.5 * (trial[j] - centroid[j])
                                    : centroid[j] + 0.5 * (simplex[dim][j] - centroid[j]);
            const double fc = eval(trial2);
            if (fc < std::min(fr, fv[dim])) {
                simplex[dim] = trial2;
                fv[dim] = fc;
            } else {
                for (std::size_t i = 1; i <= dim; ++i) {
                    for (std::size_t j = 0; j < dim; ++j)
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    fv[i] = eval(simplex[i]);
                }
            }
        }
        sort_simplex();
        res.trace.push_back(fv[0]);
    }
    if (!res.converged && converged()) res.converged = true;
    res.x = simplex[0];
    res.value = fv[0];
    return res;
}

}  // namespace misrep
