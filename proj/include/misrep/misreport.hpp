#pragma once

// Latent ARMA process observed through random multiplicative misreporting:
//
//   Y_t = X_t      with probability 1 - omega
//   Y_t = q X_t    with probability omega
//
// Forward simulation, closed-form moments of Y, and the iterative estimator
// that alternates between a hard split of the series into true-scale and
// misreported observations and a weight-only mixture refit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "misrep/arma.hpp"
#include "misrep/arma_fit.hpp"
#include "misrep/error.hpp"
#include "misrep/mixture.hpp"
#include "misrep/rng.hpp"
#include "misrep/series.hpp"

namespace misrep {

struct MisreportModel {
    ArmaParams arma;
    double q = 1.0;
    double omega = 0.0;

    /// omega in {0, 1} or q == 1: q and omega cannot be recovered from data.
    bool non_identifiable() const noexcept { return omega <= 0.0 || omega >= 1.0 || q == 1.0; }
};

inline Validation validate(const MisreportModel& m) {
    if (!(m.q > 0.0) || !std::isfinite(m.q)) return {false, "misreporting intensity q must be positive"};
    if (!(m.omega >= 0.0 && m.omega <= 1.0)) return {false, "misreporting frequency omega must lie in [0, 1]"};
    return validate(m.arma);
}

inline void require_valid(const MisreportModel& m) {
    if (auto v = validate(m); !v) throw InvalidArgument("invalid misreport model: " + v.diagnostic);
}

struct ObservedSample {
    Series y;
    Series x;
    std::vector<int> z;
};

/// Latent path from stream 0 of the seed, indicators from stream 1.
inline ObservedSample simulate_observed(const MisreportModel& m, std::size_t n, std::uint64_t seed) {
    require_valid(m);
    ObservedSample s;
    s.x = simulate(m.arma, n, derive_seed(seed, 0));
    auto eng = make_engine(derive_seed(seed, 1));
    std::bernoulli_distribution flip(m.omega);
    s.z.resize(n);
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n; ++t) {
        s.z[t] = flip(eng) ? 1 : 0;
        y[t] = s.z[t] ? m.q * s.x[t] : s.x[t];
    }
    s.y = Series(std::move(y));
    return s;
}

/// Latent variance used inside the observed-moment formulas.
enum class LatentVariance {
    /// sigma2 (1 + sum theta^2) / (1 - sum alpha^2)
    closed_form,
    /// gamma_X(0) from the autocovariance recursion
    exact,
};

inline double latent_variance(const ArmaParams& a, LatentVariance mode) {
    return mode == LatentVariance::exact ? stationary_variance_exact(a) : stationary_variance_closed_form(a);
}

/// E(Y) = mu_eps / (1 - sum alpha) * (1 - omega + q omega).
inline double observed_mean(const MisreportModel& m) {
    require_valid(m);
    return m.arma.process_mean() * (1.0 - m.omega + m.q * m.omega);
}

/// V(Y) = (V(X) + E(X)^2)(1 + omega (q^2 - 1)) - E(X)^2 (1 - omega + q omega)^2.
/// With exact_latent the exact V(X) replaces the closed-form expression.
inline double observed_variance(const MisreportModel& m, bool exact_latent = false) {
    require_valid(m);
    const double vx = latent_variance(m.arma, exact_latent ? LatentVariance::exact : LatentVariance::closed_form);
    const double ex2 = m.arma.process_mean() * m.arma.process_mean();
    const double scale_mean = 1.0 - m.omega + m.q * m.omega;
    return (vx + ex2) * (1.0 + m.omega * (m.q * m.q - 1.0)) - ex2 * scale_mean * scale_mean;
}

/// Printed forms of the damping-factor denominator. `general` squares the
/// latent mean mu_eps / (1 - sum alpha); `ar1_printed` reproduces the AR(1)
/// expansion whose first mean term is mu_eps^2 / (1 - alpha^2) and is only
/// defined for p = 1, r = 0.
enum class DenominatorForm { general, ar1_printed };

struct DampingOptions {
    LatentVariance latent = LatentVariance::exact;
    DenominatorForm form = DenominatorForm::general;
};

/// c with rho_Y(k) = c rho_X(k) for every k >= 1.
inline double acf_damping_factor(const MisreportModel& m, const DampingOptions& opt = {}) {
    require_valid(m);
    const double a = 1.0 - m.omega + m.q * m.omega;
    const double b = 1.0 + m.omega * (m.q * m.q - 1.0);
    if (opt.form == DenominatorForm::ar1_printed) {
        if (m.arma.p() != 1 || m.arma.r() != 0)
            throw InvalidArgument("the printed AR(1) damping form needs an AR(1) latent process");
        const double al = m.arma.alpha[0], s2 = m.arma.sigma2_eps, mu = m.arma.mu_eps;
        const double g = 1.0 - al * al;
        const double den = g * ((s2 / g + mu * mu / g) * b - a * a * mu * mu / ((1.0 - al) * (1.0 - al)));
        return a * a * s2 / den;
    }
    const double vx = latent_variance(m.arma, opt.latent);
    const double ex2 = m.arma.process_mean() * m.arma.process_mean();
    const double vy = (vx + ex2) * b - ex2 * a * a;
    if (!(vy > 0.0)) throw InvalidArgument("observed variance is not positive");
    return vx * a * a / vy;
}

/// x_t = y_t where z_t = 0 and y_t / q where z_t = 1; missing stays missing.
inline Series reconstruct(const Series& y, double q, const std::vector<int>& z_hat) {
    if (!(q > 0.0)) throw InvalidArgument("reconstruction needs q > 0");
    if (z_hat.size() != y.size()) throw InvalidArgument("indicator and series lengths differ");
    std::vector<double> x(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) x[t] = z_hat[t] ? y[t] / q : y[t];
    return y.with_values(std::move(x));
}

struct EstimateOptions {
    Direction direction = Direction::under;
    double tolerance = 1e-6;
    std::size_t max_iterations = 100;
    EmOptions mixture;
    FitOptions arma;
};

struct TraceEntry {
    std::size_t iteration = 0;
    double q = 0.0;
    double omega = 0.0;
    std::vector<double> alpha;
    std::vector<double> theta;
    /// Squared distance to the previous iterate (infinite for the first).
    double distance = std::numeric_limits<double>::infinity();
};

struct FitResult {
    MisreportModel model;
    /// P(misreported) per position; NaN where y is missing.
    Responsibilities responsibilities;
    std::vector<int> z_hat;
    Series x_hat;
    std::vector<TraceEntry> trace;
    bool converged = false;
    std::size_t iterations = 0;
    bool no_misreporting_detected = false;
    std::vector<std::string> warnings;
    /// Initial mixture estimates.
    double q_initial = 1.0;
    double omega_initial = 0.0;
    /// Final ARMA fit of the reconstructed series.
    ArmaFit latent_fit;
};

inline constexpr double q_min = 1e-3;
inline constexpr double q_max = 1e3;

namespace detail {

inline std::vector<int> threshold(const std::vector<double>& post) {
    std::vector<int> z(post.size(), 0);
    for (std::size_t i = 0; i < post.size(); ++i) z[i] = !is_missing(post[i]) && post[i] >= 0.5 ? 1 : 0;
    return z;
}

/// Spread posteriors over observed positions back to series positions.
inline std::vector<double> scatter(const Series& y, const std::vector<double>& post_obs) {
    std::vector<double> out(y.size(), missing_value);
    std::size_t k = 0;
    for (std::size_t t = 0; t < y.size(); ++t)
        if (!is_missing(y[t])) out[t] = post_obs[k++];
    return out;
}

inline double squared_distance(const TraceEntry& a, const TraceEntry& b) {
    double d = (a.q - b.q) * (a.q - b.q) + (a.omega - b.omega) * (a.omega - b.omega);
    for (std::size_t j = 0; j < a.alpha.size(); ++j) d += (a.alpha[j] - b.alpha[j]) * (a.alpha[j] - b.alpha[j]);
    for (std::size_t j = 0; j < a.theta.size(); ++j) d += (a.theta[j] - b.theta[j]) * (a.theta[j] - b.theta[j]);
    return d;
}

}  // namespace detail

/// Iterative estimation of (ARMA, q, omega):
///  (i)   unconstrained two-component mixture on the marginal of y gives
///        initial q, omega and posteriors;
///  (ii)  split y by the hard indicators into a true-scale and a misreported
///        series (complementary entries missing), fit ARMA(p, r) to each and
///        set q to the ratio of fitted process means;
///  (iii) refit the mixture weight with components pinned to the step-(ii)
///        means and standard deviations, refresh posteriors;
///  (iv)  repeat (ii)-(iii) until the squared change of (q, omega, alpha,
///        theta) drops below the tolerance;
///  (v)   reconstruct the latent series and fit ARMA(p, r) to it.
inline FitResult estimate(const Series& y, ArmaOrder order, const EstimateOptions& opt = {}) {
    check_series(y);
    const std::vector<double> obs = y.observed();
    if (obs.size() < 30) throw DataError("estimation needs at least 30 observed values, got " + std::to_string(obs.size()));
    if (!(opt.tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (opt.max_iterations == 0) throw InvalidArgument("max_iterations must be at least 1");
    const std::size_t min_sub = std::max(order.p, order.r) + 5;

    FitResult res;

    // (i)
    const MixtureFit mix = em_fit(obs, opt.mixture);
    const double aic_mix = 10.0 - 2.0 * mix.loglik;
    const double aic_single = 4.0 - 2.0 * single_normal_loglik(obs);
    if (aic_mix - aic_single > 2.0) {
        res.no_misreporting_detected = true;
        res.warnings.push_back("no misreporting detected: a single normal fits the marginal better by AIC");
        res.latent_fit = fit(y, order, opt.arma);
        res.model = {res.latent_fit.params, 1.0, 0.0};
        res.responsibilities.posterior = detail::scatter(y, std::vector<double>(obs.size(), 0.0));
        res.z_hat.assign(y.size(), 0);
        res.x_hat = y;
        res.converged = true;
        return res;
    }
    const LabeledMixture lab = label_components(mix.params, opt.direction);
    if (!(lab.q > 0.0)) throw NonIdentifiable("initial q estimate is not positive (" + std::to_string(lab.q) + ")");
    res.q_initial = std::clamp(lab.q, q_min, q_max);
    res.omega_initial = std::clamp(lab.omega, weight_floor, 1.0 - weight_floor);
    std::vector<double> post = detail::scatter(y, lab.orient(mix.responsibilities.posterior));

    TraceEntry prev{0, res.q_initial, res.omega_initial, {}, {}, std::numeric_limits<double>::infinity()};
    std::optional<TraceEntry> best;
    std::vector<double> best_post;

    for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
        // (ii)
        const std::vector<int> z = detail::threshold(post);
        std::vector<double> v_true(y.values), v_mis(y.values);
        std::size_t n_true = 0, n_mis = 0;
        for (std::size_t t = 0; t < y.size(); ++t) {
            if (is_missing(y[t])) continue;
            if (z[t]) {
                v_true[t] = missing_value;
                ++n_mis;
            } else {
                v_mis[t] = missing_value;
                ++n_true;
            }
        }
        if (n_true < min_sub || n_mis < min_sub) {
            res.warnings.push_back("omega at the boundary: too few observations in one class; model is non-identifiable");
            break;
        }
        const ArmaFit fit_true = fit(y.with_values(std::move(v_true)), order, opt.arma);
        const ArmaFit fit_mis = fit(y.with_values(std::move(v_mis)), order, opt.arma);
        const double q_raw = fit_mis.process_mean / fit_true.process_mean;
        if (!(q_raw > 0.0) || !std::isfinite(q_raw))
            throw NonIdentifiable("estimated q is not positive (" + std::to_string(q_raw) + "); aborting");

        TraceEntry cur;
        cur.iteration = it;
        cur.q = std::clamp(q_raw, q_min, q_max);
        const double wt = static_cast<double>(n_true), wm = static_cast<double>(n_mis);
        cur.alpha.resize(order.p);
        cur.theta.resize(order.r);
        for (std::size_t j = 0; j < order.p; ++j)
            cur.alpha[j] = (wt * fit_true.params.alpha[j] + wm * fit_mis.params.alpha[j]) / (wt + wm);
        for (std::size_t j = 0; j < order.r; ++j)
            cur.theta[j] = (wt * fit_true.params.theta[j] + wm * fit_mis.params.theta[j]) / (wt + wm);

        // (iii)
        const MixtureComponents comps{fit_true.process_mean, std::sqrt(stationary_variance_exact(fit_true.params)),
                                      fit_mis.process_mean, std::sqrt(stationary_variance_exact(fit_mis.params))};
        const WeightFit wf = em_fit_weights_only(obs, comps, 1.0 - prev.omega);
        cur.omega = std::clamp(1.0 - wf.w1, weight_floor, 1.0 - weight_floor);
        post = detail::scatter(y, wf.responsibilities.posterior);

        // (iv)
        if (it > 1) cur.distance = detail::squared_distance(cur, prev);
        res.trace.push_back(cur);
        res.iterations = it;
        if (!best || cur.distance <= best->distance) {
            best = cur;
            best_post = post;
        }
        prev = cur;
        if (cur.distance < opt.tolerance) {
            res.converged = true;
            break;
        }
    }
    if (!best) {
        // No iteration completed: fall back to the initial mixture split.
        best = prev;
        best_post = post;
    }
    if (!res.converged && res.warnings.empty())
        res.warnings.push_back("no convergence within " + std::to_string(opt.max_iterations) + " iterations");

    // (v)
    res.model.q = best->q;
    res.model.omega = best->omega;
    res.responsibilities.posterior = best_post;
    res.z_hat = detail::threshold(best_post);
    res.x_hat = reconstruct(y, res.model.q, res.z_hat);
    res.latent_fit = fit(res.x_hat, order, opt.arma);
    res.model.arma = res.latent_fit.params;
    if (res.model.omega <= 2.0 * weight_floor || res.model.omega >= 1.0 - 2.0 * weight_floor)
        res.warnings.push_back("omega at the boundary: the latent ARMA model is non-identifiable");
    return res;
}

}  // namespace misrep
