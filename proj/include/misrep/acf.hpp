#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "misrep/error.hpp"
#include "misrep/series.hpp"

namespace misrep {

/// Biased-denominator sample autocorrelations rho(0..max_lag). Missing
/// entries are excluded pairwise; every lag shares the denominator
/// sum (y_t - mean)^2 over observed t, so the estimate is scale invariant.
inline std::vector<double> sample_autocorrelation(std::span<const double> y, std::size_t max_lag) {
    double sum = 0.0;
    std::size_t n_obs = 0;
    for (double v : y)
        if (!is_missing(v)) {
            sum += v;
            ++n_obs;
        }
    if (n_obs == 0) throw DataError("no observed values");
    const double mean = sum / static_cast<double>(n_obs);
    double denom = 0.0;
    for (double v : y)
        if (!is_missing(v)) denom += (v - mean) * (v - mean);
    if (!(denom > 0.0)) throw DataError("constant series has zero variance");

    std::vector<double> rho(max_lag + 1, 0.0);
    rho[0] = 1.0;
    for (std::size_t k = 1; k <= max_lag && k < y.size(); ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t + k < y.size(); ++t) {
            const double a = y[t], b = y[t + k];
            if (!is_missing(a) && !is_missing(b)) s += (a - mean) * (b - mean);
        }
        rho[k] = s / denom;
    }
    return rho;
}

}  // namespace misrep
