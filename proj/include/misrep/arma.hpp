#pragma once

// Gaussian ARMA(p, r) processes with non-zero innovation mean:
//
//   X_t = a_1 X_{t-1} + ... + a_p X_{t-p} + e_t + t_1 e_{t-1} + ... + t_r e_{t-r},
//   e_t ~ N(mu_eps, sigma2_eps) i.i.d.
//
// The MA terms act on the centred innovations e_t - mu_eps, i.e. mu_eps is
// the intercept of the recursion and the process mean is mu_eps / (1 - sum a)
// whatever r is. For pure AR models this is the same process.
//
// Representation, root checks, exact second-order theory and simulation.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "misrep/error.hpp"
#include "misrep/rng.hpp"
#include "misrep/series.hpp"

namespace misrep {

struct ArmaOrder {
    std::size_t p = 0;
    std::size_t r = 0;

    friend bool operator==(const ArmaOrder&, const ArmaOrder&) = default;
};

struct ArmaParams {
    std::vector<double> alpha;  // AR coefficients
    std::vector<double> theta;  // MA coefficients
    double mu_eps = 0.0;
    double sigma2_eps = 1.0;

    std::size_t p() const noexcept { return alpha.size(); }
    std::size_t r() const noexcept { return theta.size(); }
    ArmaOrder order() const noexcept { return {p(), r()}; }

    double ar_sum() const noexcept {
        double s = 0.0;
        for (double a : alpha) s += a;
        return s;
    }

    /// Stationary mean mu_eps / (1 - sum alpha).
    double process_mean() const noexcept { return mu_eps / (1.0 - ar_sum()); }
};

struct Validation {
    bool ok = true;
    std::string diagnostic;

    explicit operator bool() const noexcept { return ok; }
};

namespace detail {

inline constexpr double unit_root_tol = 1e-10;

/// Levinson step-down of the polynomial 1 - c_1 z - ... - c_k z^k. Returns the
/// reflection coefficients (last first in computation, stored by order). Stops
/// at the first coefficient with |k| >= 1 and returns the partial list; the
/// caller inspects the last element.
inline std::vector<double> step_down(std::span<const double> coef) {
    std::vector<double> cur(coef.begin(), coef.end());
    std::vector<double> refl(cur.size(), 0.0);
    for (std::size_t k = cur.size(); k-- > 0;) {
        const double kk = cur[k];
        refl[k] = kk;
        if (!(std::abs(kk) < 1.0)) {
            refl.erase(refl.begin(), refl.begin() + static_cast<std::ptrdiff_t>(k));
            return refl;  // truncated: the first entry is the offending one
        }
        const double denom = 1.0 - kk * kk;
        std::vector<double> next(k);
        for (std::size_t j = 0; j < k; ++j) next[j] = (cur[j] + kk * cur[k - 1 - j]) / denom;
        cur = std::move(next);
    }
    return refl;
}

/// Inverse of step_down: coefficients of 1 - c_1 z - ... from reflection
/// coefficients in (-1, 1). The result is always stationary.
inline std::vector<double> step_up(std::span<const double> refl) {
    std::vector<double> c;
    c.reserve(refl.size());
    for (std::size_t k = 0; k < refl.size(); ++k) {
        std::vector<double> next(k + 1);
        for (std::size_t j = 0; j < k; ++j) next[j] = c[j] - refl[k] * c[k - 1 - j];
        next[k] = refl[k];
        c = std::move(next);
    }
    return c;
}

/// Root check for 1 - c_1 z - ... - c_k z^k. Returns "" when every root lies
/// strictly outside the unit circle.
inline std::string root_problem(std::span<const double> coef) {
    for (double c : coef)
        if (!std::isfinite(c)) return "non-finite coefficient";
    if (coef.empty()) return {};
    const auto refl = step_down(coef);
    const double worst = refl.front();
    if (refl.size() == coef.size() && std::abs(worst) < 1.0) {
        bool all_inside = true;
        for (double k : refl) all_inside = all_inside && std::abs(k) < 1.0;
        if (all_inside) return {};
    }
    if (std::abs(std::abs(worst) - 1.0) <= unit_root_tol) return "root on unit circle";
    return "root inside unit circle";
}

inline std::vector<double> negated(std::span<const double> v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
    return out;
}

}  // namespace detail

/// Stationarity of the AR polynomial and invertibility of the MA polynomial.
inline Validation validate(const ArmaParams& params) {
    if (!(params.sigma2_eps > 0.0) || !std::isfinite(params.sigma2_eps))
        return {false, "innovation variance must be positive"};
    if (!std::isfinite(params.mu_eps)) return {false, "innovation mean must be finite"};
    if (auto ar = detail::root_problem(params.alpha); !ar.empty()) return {false, "AR " + ar};
    if (auto ma = detail::root_problem(detail::negated(params.theta)); !ma.empty()) return {false, "MA " + ma};
    return {};
}

inline void require_valid(const ArmaParams& params) {
    if (auto v = validate(params); !v) throw InvalidArgument("invalid ARMA parameters: " + v.diagnostic);
}

/// MA(infinity) weights psi_0..psi_count-1.
inline std::vector<double> psi_weights(const ArmaParams& params, std::size_t count) {
    std::vector<double> psi(count, 0.0);
    for (std::size_t j = 0; j < count; ++j) {
        double v = j == 0 ? 1.0 : (j <= params.r() ? params.theta[j - 1] : 0.0);
        for (std::size_t i = 1; i <= std::min(j, params.p()); ++i) v += params.alpha[i - 1] * psi[j - i];
        psi[j] = v;
    }
    return psi;
}

/// Exact autocovariances gamma(0..max_lag) from the ARMA difference equations.
inline std::vector<double> autocovariance(const ArmaParams& params, std::size_t max_lag) {
    require_valid(params);
    const std::size_t p = params.p();
    const std::size_t r = params.r();
    const std::size_t m = std::max(p, r) + 1;
    const auto psi = psi_weights(params, r + 1);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        A(ki, ki) += 1.0;
        for (std::size_t j = 1; j <= p; ++j) {
            const std::size_t lag = k >= j ? k - j : j - k;
            A(ki, static_cast<Eigen::Index>(lag)) -= params.alpha[j - 1];
        }
        double rhs = 0.0;
        for (std::size_t j = k; j <= r; ++j) rhs += (j == 0 ? 1.0 : params.theta[j - 1]) * psi[j - k];
        b(ki) = params.sigma2_eps * rhs;
    }
    const Eigen::VectorXd g = A.colPivHouseholderQr().solve(b);

    std::vector<double> gamma(std::max(max_lag + 1, m));
    for (std::size_t k = 0; k < m; ++k) gamma[k] = g(static_cast<Eigen::Index>(k));
    for (std::size_t k = m; k < gamma.size(); ++k) {
        double v = 0.0;
        for (std::size_t j = 1; j <= p; ++j) v += params.alpha[j - 1] * gamma[k - j];
        gamma[k] = v;
    }
    gamma.resize(max_lag + 1);
    return gamma;
}

inline std::vector<double> theoretical_acf(const ArmaParams& params, std::size_t max_lag) {
    auto gamma = autocovariance(params, max_lag);
    const double g0 = gamma[0];
    for (double& g : gamma) g /= g0;
    gamma[0] = 1.0;
    return gamma;
}

inline double stationary_variance_exact(const ArmaParams& params) { return autocovariance(params, 0)[0]; }

/// sigma2 (1 + sum theta^2) / (1 - sum alpha^2). Equals the exact variance for
/// pure AR(1) and pure MA(r) processes; an approximation otherwise.
inline double stationary_variance_closed_form(const ArmaParams& params) {
    double num = 1.0;
    for (double t : params.theta) num += t * t;
    double den = 1.0;
    for (double a : params.alpha) den -= a * a;
    return params.sigma2_eps * num / den;
}

inline std::size_t default_burn_in(const ArmaParams& params) { return 500 + 50 * (params.p() + params.r()); }

/// n consecutive values of a realization after discarding burn_in values.
/// mu_eps enters as the intercept of the recursion: the current innovation
/// has mean mu_eps, the lagged MA terms use centred innovations, so the
/// process mean is mu_eps / (1 - sum alpha) for every (p, r). The recursion
/// starts at that mean.
inline Series simulate(const ArmaParams& params, std::size_t n, std::uint64_t seed, std::size_t burn_in) {
    require_valid(params);
    if (n == 0) throw InvalidArgument("simulation length must be at least 1");
    const std::size_t p = params.p();
    const std::size_t r = params.r();
    const std::size_t total = n + burn_in;
    const double mean = params.process_mean();

    auto eng = make_engine(seed);
    std::normal_distribution<double> noise(params.mu_eps, std::sqrt(params.sigma2_eps));

    // Ring buffers of the last p values and last r innovations.
    std::vector<double> xs(p, mean), es(r, 0.0);
    std::vector<double> out;
    out.reserve(n);
    std::size_t xpos = 0, epos = 0;
    for (std::size_t t = 0; t < total; ++t) {
        const double e = noise(eng);
        double x = e;
        for (std::size_t i = 1; i <= p; ++i) x += params.alpha[i - 1] * xs[(xpos + p - i) % p];
        for (std::size_t k = 1; k <= r; ++k) x += params.theta[k - 1] * es[(epos + r - k) % r];
        if (p > 0) {
            xs[xpos] = x;
            xpos = (xpos + 1) % p;
        }
        if (r > 0) {
            es[epos] = e - params.mu_eps;
            epos = (epos + 1) % r;
        }
        if (t >= burn_in) out.push_back(x);
    }
    return Series(std::move(out));
}

inline Series simulate(const ArmaParams& params, std::size_t n, std::uint64_t seed) {
    return simulate(params, n, seed, default_burn_in(params));
}

}  // namespace misrep
