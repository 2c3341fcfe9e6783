#pragma once

// Parametric bootstrap: simulate new observed series from a fitted model,
// re-estimate each, and summarize the spread of the estimates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "misrep/error.hpp"
#include "misrep/misreport.hpp"
#include "misrep/parallel.hpp"
#include "misrep/rng.hpp"

namespace misrep {

struct ParameterSummary {
    std::string name;
    double point = 0.0;
    double boot_mean = 0.0;
    double boot_se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct BootstrapSummary {
    std::vector<ParameterSummary> parameters;
    std::size_t replicates_requested = 0;
    std::size_t replicates_converged = 0;
    double level = 0.95;
    bool reliable = true;
    std::vector<std::string> warnings;
    /// Estimates of converged replicates, one row per parameter, in replicate order.
    std::vector<std::vector<double>> draws;

    const ParameterSummary* find(const std::string& name) const {
        for (const auto& p : parameters)
            if (p.name == name) return &p;
        return nullptr;
    }
};

enum class SeedPolicy {
    /// Replicate b uses derive_seed(seed, b).
    split,
    /// Every replicate uses the master seed (degenerate check only).
    identical,
};

struct BootstrapOptions {
    std::size_t replicates = 500;
    std::uint64_t seed = 0;
    double level = 0.95;
    std::size_t threads = 1;
    EstimateOptions estimate;
    SeedPolicy seed_policy = SeedPolicy::split;
};

/// Empirical quantile of sorted data, Hazen convention: position
/// h = N p + 1/2 (1-based), linear interpolation between neighbouring order
/// statistics, clamped to the sample range. For N = 500 the 2.5% and 97.5%
/// quantiles are exactly the 13th and 488th order statistics.
inline double percentile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double N = static_cast<double>(sorted.size());
    double h = std::clamp(N * p + 0.5, 1.0, N);
    // (1 - level) / 2 is rarely exact in binary; snap rounding noise so that
    // integer positions return the order statistic itself.
    if (std::abs(h - std::round(h)) < 1e-9 * N) h = std::round(h);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (lo >= sorted.size()) return sorted.back();
    return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

/// alpha1.., theta1.., mu_eps, sigma2_eps, q, omega
inline std::vector<std::string> parameter_names(ArmaOrder order) {
    std::vector<std::string> names;
    for (std::size_t j = 1; j <= order.p; ++j) names.push_back("alpha" + std::to_string(j));
    for (std::size_t j = 1; j <= order.r; ++j) names.push_back("theta" + std::to_string(j));
    names.insert(names.end(), {"mu_eps", "sigma2_eps", "q", "omega"});
    return names;
}

inline std::vector<double> parameter_vector(const MisreportModel& m) {
    std::vector<double> v(m.arma.alpha);
    v.insert(v.end(), m.arma.theta.begin(), m.arma.theta.end());
    v.insert(v.end(), {m.arma.mu_eps, m.arma.sigma2_eps, m.q, m.omega});
    return v;
}

inline ParameterSummary summarize_draws(std::string name, double point, std::vector<double> draws, double level) {
    ParameterSummary s;
    s.name = std::move(name);
    s.point = point;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (draws.empty()) {
        s.boot_mean = s.boot_se = s.ci_low = s.ci_high = nan;
        return s;
    }
    s.boot_mean = stats::mean(draws);
    s.boot_se = stats::sample_sd(draws);
    std::sort(draws.begin(), draws.end());
    s.ci_low = percentile(draws, (1.0 - level) / 2.0);
    s.ci_high = percentile(draws, (1.0 + level) / 2.0);
    return s;
}

/// Re-derives every interval at a new confidence level from stored draws.
inline BootstrapSummary with_level(BootstrapSummary summary, double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
    summary.level = level;
    for (std::size_t k = 0; k < summary.parameters.size(); ++k) {
        auto& p = summary.parameters[k];
        p = summarize_draws(p.name, p.point, summary.draws[k], level);
    }
    return summary;
}

inline BootstrapSummary parametric_bootstrap(const FitResult& fit, std::size_t n, const BootstrapOptions& opt = {}) {
    if (!fit.converged) throw InvalidArgument("bootstrap needs a converged fit");
    if (opt.replicates < 2) throw InvalidArgument("bootstrap needs at least 2 replicates");
    if (!(opt.level > 0.0 && opt.level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
    if (n == 0) throw InvalidArgument("replicate length must be at least 1");
    require_valid(fit.model);

    const ArmaOrder order = fit.model.arma.order();
    const auto names = parameter_names(order);
    std::vector<std::optional<std::vector<double>>> results(opt.replicates);

    parallel_for(opt.replicates, opt.threads, [&](std::size_t b) {
        const std::uint64_t seed = opt.seed_policy == SeedPolicy::split ? derive_seed(opt.seed, b) : opt.seed;
        try {
            const auto sample = simulate_observed(fit.model, n, seed);
            const auto est = estimate(sample.y, order, opt.estimate);
            if (est.converged) results[b] = parameter_vector(est.model);
        } catch (const Error&) {
            // counted as non-converged
        }
    });

    BootstrapSummary out;
    out.level = opt.level;
    out.replicates_requested = opt.replicates;
    out.draws.assign(names.size(), {});
    for (const auto& r : results) {
        if (!r) continue;
        ++out.replicates_converged;
        for (std::size_t k = 0; k < names.size(); ++k) out.draws[k].push_back((*r)[k]);
    }
    const auto point = parameter_vector(fit.model);
    for (std::size_t k = 0; k < names.size(); ++k)
        out.parameters.push_back(summarize_draws(names[k], point[k], out.draws[k], opt.level));

    const std::size_t failed = out.replicates_requested - out.replicates_converged;
    if (5 * failed > out.replicates_requested) {
        out.reliable = false;
        out.warnings.push_back(std::to_string(failed) + " of " + std::to_string(out.replicates_requested) +
                               " replicates did not converge; intervals may be unreliable");
    }
    return out;
}

}  // namespace misrep
