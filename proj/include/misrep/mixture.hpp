#pragma once

// Two-component univariate Gaussian mixtures fitted by EM.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "misrep/error.hpp"
#include "misrep/rng.hpp"
#include "misrep/series.hpp"

namespace misrep {

/// w1 N(m1, s1^2) + (1 - w1) N(m2, s2^2).
struct MixtureParams {
    double w1 = 0.5;
    double m1 = 0.0;
    double m2 = 0.0;
    double s1 = 1.0;
    double s2 = 1.0;

    double w2() const noexcept { return 1.0 - w1; }
};

/// Posterior probability that each value belongs to component 2.
struct Responsibilities {
    std::vector<double> posterior;
};

struct MixtureFit {
    MixtureParams params;
    Responsibilities responsibilities;
    double loglik = 0.0;
    /// Observed-data log-likelihood at every EM iteration of the retained run.
    std::vector<double> loglik_trace;
    std::size_t iterations = 0;
    bool converged = false;
    /// Runs discarded because a component collapsed.
    std::size_t collapsed_runs = 0;
};

struct EmOptions {
    std::size_t max_iterations = 1000;
    double tolerance = 1e-8;  // relative log-likelihood change
    std::size_t restarts = 5;
    std::uint64_t seed = 0x6d69787475726521ULL;
    std::optional<MixtureParams> init;
};

struct WeightFit {
    double w1 = 0.5;
    Responsibilities responsibilities;
    double loglik = 0.0;
    std::size_t iterations = 0;
};

inline constexpr double weight_floor = 1e-6;
inline constexpr double variance_floor_ratio = 1e-10;

namespace detail {

inline double log_normal_pdf(double x, double m, double s) {
    const double z = (x - m) / s;
    return -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// (log p1, log p2) of the weighted component densities.
inline std::pair<double, double> weighted_log_densities(double x, const MixtureParams& mp) {
    return {std::log(mp.w1) + log_normal_pdf(x, mp.m1, mp.s1), std::log(mp.w2()) + log_normal_pdf(x, mp.m2, mp.s2)};
}

inline double log_sum_exp(double a, double b) {
    const double hi = std::max(a, b);
    if (!std::isfinite(hi)) return hi;
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

/// E-step: fills posterior of component 2 and returns the log-likelihood.
inline double e_step(std::span<const double> x, const MixtureParams& mp, std::vector<double>& post) {
    post.resize(x.size());
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto [l1, l2] = weighted_log_densities(x[i], mp);
        post[i] = 1.0 / (1.0 + std::exp(l1 - l2));
        ll += log_sum_exp(l1, l2);
    }
    return ll;
}

struct EmRun {
    MixtureParams params;
    std::vector<double> trace;
    std::size_t iterations = 0;
    bool converged = false;
    bool collapsed = false;
};

/// EM on standardized data (unit variance), so the floor is absolute here.
inline EmRun run_em(std::span<const double> z, MixtureParams mp, const EmOptions& opt) {
    EmRun run;
    const double var_floor = variance_floor_ratio;
    const double n = static_cast<double>(z.size());
    std::vector<double> post;
    double ll = e_step(z, mp, post);
    run.trace.push_back(ll);
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        double r2 = 0.0, sx2 = 0.0, sx1 = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            r2 += post[i];
            sx2 += post[i] * z[i];
            sx1 += (1.0 - post[i]) * z[i];
        }
        const double r1 = n - r2;
        if (r1 <= 0.0 || r2 <= 0.0) {
            run.collapsed = true;
            break;
        }
        MixtureParams next;
        next.w1 = std::clamp(r1 / n, weight_floor, 1.0 - weight_floor);
        next.m1 = sx1 / r1;
        next.m2 = sx2 / r2;
        double v1 = 0.0, v2 = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            v1 += (1.0 - post[i]) * (z[i] - next.m1) * (z[i] - next.m1);
            v2 += post[i] * (z[i] - next.m2) * (z[i] - next.m2);
        }
        v1 /= r1;
        v2 /= r2;
        if (!(v1 > var_floor) || !(v2 > var_floor)) {
            run.collapsed = true;
            break;
        }
        next.s1 = std::sqrt(v1);
        next.s2 = std::sqrt(v2);
        mp = next;
        const double ll_new = e_step(z, mp, post);
        run.trace.push_back(ll_new);
        run.iterations = it + 1;
        const double change = std::abs(ll_new - ll) / std::max(std::abs(ll), 1e-300);
        ll = ll_new;
        if (change < opt.tolerance) {
            run.converged = true;
            break;
        }
    }
    run.params = mp;
    return run;
}

inline MixtureParams median_split_init(std::span<const double> z) {
    std::vector<double> s(z.begin(), z.end());
    std::sort(s.begin(), s.end());
    const std::size_t half = s.size() / 2;
    std::span<const double> lo(s.data(), half), hi(s.data() + half, s.size() - half);
    MixtureParams mp;
    mp.w1 = 0.5;
    mp.m1 = stats::mean(lo);
    mp.m2 = stats::mean(hi);
    mp.s1 = std::max(std::sqrt(stats::variance(lo)), 1e-3);
    mp.s2 = std::max(std::sqrt(stats::variance(hi)), 1e-3);
    return mp;
}

inline MixtureParams random_init(std::span<const double> z, Engine& eng) {
    std::uniform_int_distribution<std::size_t> pick(0, z.size() - 1);
    std::uniform_real_distribution<double> unit(0.2, 0.8);
    double a = z[pick(eng)], b = z[pick(eng)];
    for (int tries = 0; tries < 20 && a == b; ++tries) b = z[pick(eng)];
    MixtureParams mp;
    mp.w1 = unit(eng);
    mp.m1 = std::min(a, b);
    mp.m2 = std::max(a, b);
    mp.s1 = 0.5;
    mp.s2 = 0.5;
    return mp;
}

inline MixtureParams perturb(MixtureParams mp, Engine& eng) {
    std::normal_distribution<double> jitter(0.0, 0.25);
    mp.m1 += jitter(eng);
    mp.m2 += jitter(eng);
    mp.s1 = std::max(mp.s1 * std::exp(jitter(eng)), 0.05);
    mp.s2 = std::max(mp.s2 * std::exp(jitter(eng)), 0.05);
    mp.w1 = std::clamp(mp.w1 + 0.5 * jitter(eng), 0.1, 0.9);
    return mp;
}

struct Standardizer {
    double center = 0.0;
    double scale = 1.0;

    explicit Standardizer(std::span<const double> x) {
        center = stats::mean(x);
        scale = std::sqrt(stats::variance(x));
    }
    MixtureParams to_std(MixtureParams mp) const {
        mp.m1 = (mp.m1 - center) / scale;
        mp.m2 = (mp.m2 - center) / scale;
        mp.s1 /= scale;
        mp.s2 /= scale;
        return mp;
    }
    MixtureParams from_std(MixtureParams mp) const {
        mp.m1 = mp.m1 * scale + center;
        mp.m2 = mp.m2 * scale + center;
        mp.s1 *= scale;
        mp.s2 *= scale;
        return mp;
    }
};

inline void check_values(std::span<const double> values) {
    if (values.size() < 10) throw InvalidArgument("mixture fit needs at least 10 values");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("mixture values must be finite");
}

}  // namespace detail

/// Posterior probability of component 2 for a single value.
inline double posterior(double x, const MixtureParams& mp) {
    const auto [l1, l2] = detail::weighted_log_densities(x, mp);
    return 1.0 / (1.0 + std::exp(l1 - l2));
}

inline double mixture_loglik(std::span<const double> values, const MixtureParams& mp) {
    double ll = 0.0;
    for (double x : values) {
        const auto [l1, l2] = detail::weighted_log_densities(x, mp);
        ll += detail::log_sum_exp(l1, l2);
    }
    return ll;
}

/// Maximum log-likelihood of a single normal (biased ML variance).
inline double single_normal_loglik(std::span<const double> values) {
    const double v = stats::variance(values);
    const double n = static_cast<double>(values.size());
    return -0.5 * n * (std::log(2.0 * std::numbers::pi * v) + 1.0);
}

/// Unconstrained two-component fit. Candidate starts: `init` (or a median
/// split), plus `restarts` random starts; the best final likelihood wins.
/// Runs in which a component collapses are discarded; a collapsed primary
/// start is retried from perturbed copies. Works on standardized data, so the
/// fit is location/scale equivariant.
inline MixtureFit em_fit(std::span<const double> values, const EmOptions& opt = {}) {
    detail::check_values(values);
    const detail::Standardizer sd(values);
    if (!(sd.scale > 0.0)) throw InvalidArgument("mixture values are all identical");
    std::vector<double> z(values.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (values[i] - sd.center) / sd.scale;

    auto eng = make_engine(opt.seed);
    MixtureFit out;
    std::optional<detail::EmRun> best;
    double best_ll = -std::numeric_limits<double>::infinity();
    auto consider = [&](detail::EmRun run) {
        if (run.collapsed) {
            ++out.collapsed_runs;
            return false;
        }
        const double ll = run.trace.back();
        if (!best || ll > best_ll) {
            best_ll = ll;
            best = std::move(run);
        }
        return true;
    };

    const MixtureParams primary = opt.init ? sd.to_std(*opt.init) : detail::median_split_init(z);
    if (!consider(detail::run_em(z, primary, opt))) {
        for (std::size_t k = 0; k < 5; ++k)
            if (consider(detail::run_em(z, detail::perturb(primary, eng), opt))) break;
    }
    for (std::size_t k = 0; k < opt.restarts; ++k) consider(detail::run_em(z, detail::random_init(z, eng), opt));

    if (!best)
        throw DegenerateMixture("mixture component variance collapsed to zero in every start (" +
                                std::to_string(out.collapsed_runs) + " runs)");

    const double shift = static_cast<double>(values.size()) * std::log(sd.scale);
    out.params = sd.from_std(best->params);
    out.iterations = best->iterations;
    out.converged = best->converged;
    for (double ll : best->trace) out.loglik_trace.push_back(ll - shift);
    out.loglik = out.loglik_trace.back();
    detail::e_step(z, best->params, out.responsibilities.posterior);
    return out;
}

/// Mixture components with fixed means and standard deviations.
struct MixtureComponents {
    double m1 = 0.0;
    double s1 = 1.0;
    double m2 = 0.0;
    double s2 = 1.0;
};

/// ML weight of component 1 with the components held fixed. At convergence
/// 1 - w1 equals the mean posterior of component 2.
inline WeightFit em_fit_weights_only(std::span<const double> values, const MixtureComponents& fixed,
                                     double initial_w1 = 0.5, std::size_t max_iterations = 1000) {
    detail::check_values(values);
    if (!(fixed.s1 > 0.0) || !(fixed.s2 > 0.0)) throw InvalidArgument("component standard deviations must be positive");
    if (fixed.m1 == fixed.m2 && fixed.s1 == fixed.s2)
        throw NonIdentifiable("identical mixture components: the weight is not identifiable (as with omega = 1 or q = 1)");

    // The per-value log density ratio does not change across iterations.
    std::vector<double> log_ratio(values.size());
    double base = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double l1 = detail::log_normal_pdf(values[i], fixed.m1, fixed.s1);
        const double l2 = detail::log_normal_pdf(values[i], fixed.m2, fixed.s2);
        log_ratio[i] = l1 - l2;
        base += l2;
    }
    const double n = static_cast<double>(values.size());
    WeightFit out;
    double w1 = std::clamp(initial_w1, weight_floor, 1.0 - weight_floor);
    std::vector<double>& post = out.responsibilities.posterior;
    post.resize(values.size());
    for (std::size_t it = 0; it < max_iterations; ++it) {
        const double lw = std::log(w1) - std::log1p(-w1);
        double sum = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            post[i] = 1.0 / (1.0 + std::exp(log_ratio[i] + lw));
            sum += post[i];
        }
        const double next = std::clamp(1.0 - sum / n, weight_floor, 1.0 - weight_floor);
        out.iterations = it + 1;
        const bool done = std::abs(next - w1) < 1e-12;
        w1 = next;
        if (done) break;
    }
    const double lw = std::log(w1) - std::log1p(-w1);
    double ll = base;
    for (std::size_t i = 0; i < values.size(); ++i) {
        post[i] = 1.0 / (1.0 + std::exp(log_ratio[i] + lw));
        ll += detail::log_sum_exp(std::log(w1) + log_ratio[i], std::log1p(-w1));
    }
    out.w1 = w1;
    out.loglik = ll;
    return out;
}

enum class Direction { under, over, automatic };

/// Component 1 is the true-scale component, component 2 the misreported one.
struct LabeledMixture {
    MixtureParams params;
    double q = 1.0;
    double omega = 0.0;
    /// The input components were swapped to reach this labeling.
    bool swapped = false;

    /// Re-orients posteriors of the unlabeled fit to P(misreported).
    std::vector<double> orient(std::vector<double> posterior) const {
        if (swapped)
            for (double& p : posterior) p = 1.0 - p;
        return posterior;
    }
};

inline MixtureParams swap_components(const MixtureParams& mp) { return {mp.w2(), mp.m2, mp.m1, mp.s2, mp.s1}; }

/// Assigns the misreported label. q = m_misreported / m_true and omega is the
/// misreported weight. `under` forces q < 1, `over` q > 1; `automatic` picks
/// the assignment whose mean ratio best agrees with its sd ratio.
inline LabeledMixture label_components(const MixtureParams& mp, Direction direction) {
    if (mp.m1 == mp.m2 && mp.s1 == mp.s2)
        throw NonIdentifiable("mixture components are identical; q and omega are not identifiable");

    auto candidate = [](const MixtureParams& c, bool swapped) {
        LabeledMixture l;
        l.params = c;
        l.swapped = swapped;
        l.omega = c.w2();
        l.q = c.m2 / c.m1;
        return l;
    };
    auto mean_defined = [](const MixtureParams& c) { return std::abs(c.m1) >= 1e-8 * c.s1; };

    const MixtureParams as_is = mp;
    const MixtureParams flipped = swap_components(mp);
    const bool ok_as_is = mean_defined(as_is), ok_flipped = mean_defined(flipped);

    LabeledMixture chosen;
    switch (direction) {
        case Direction::under:
        case Direction::over: {
            // Under-reporting: the misreported component has the smaller |mean|.
            const bool second_smaller = std::abs(mp.m2) < std::abs(mp.m1) ||
                                        (std::abs(mp.m2) == std::abs(mp.m1) && mp.s2 < mp.s1);
            const bool keep = (direction == Direction::under) == second_smaller;
            chosen = keep ? candidate(as_is, false) : candidate(flipped, true);
            if (!mean_defined(chosen.params))
                throw NonIdentifiable("true-scale component mean is ~0; q is undefined from the means");
            break;
        }
        case Direction::automatic: {
            if (!ok_as_is && !ok_flipped)
                throw NonIdentifiable("both component means are ~0; q is undefined from the means");
            auto mismatch = [](const MixtureParams& c) { return std::abs(c.m2 / c.m1 - c.s2 / c.s1); };
            if (!ok_as_is) chosen = candidate(flipped, true);
            else if (!ok_flipped) chosen = candidate(as_is, false);
            else chosen = mismatch(flipped) < mismatch(as_is) ? candidate(flipped, true) : candidate(as_is, false);
            break;
        }
    }
    return chosen;
}

}  // namespace misrep
