#pragma once

// Exact Gaussian maximum likelihood for ARMA(p, r) with a deterministic mean
// (intercept plus optional trend regressors). The likelihood is evaluated by a
// Kalman filter on the state-space form of the ARMA process, initialised from
// the stationary state covariance; at missing observations the measurement
// update is skipped. Regression coefficients and the innovation variance are
// profiled out by GLS, so the optimizer only searches the ARMA coefficients,
// which are mapped from R^{p+r} through partial autocorrelations to stay
// stationary and invertible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "misrep/acf.hpp"
#include "misrep/arma.hpp"
#include "misrep/error.hpp"
#include "misrep/optimize.hpp"
#include "misrep/series.hpp"

namespace misrep {

struct FitOptions {
    /// Deterministic regressor columns (each of the series' length) in
    /// addition to the intercept.
    std::vector<std::vector<double>> regressors;
    bool include_intercept = true;
    NelderMeadOptions optimizer{0.2, 1e-8, 1e-7, 500};
};

struct ArmaFit {
    ArmaParams params;
    double process_mean = 0.0;
    double loglik = 0.0;
    double aic = 0.0;
    Series residuals;
    /// Intercept first (when included), then the trend regressors.
    std::vector<double> regression_coefficients;
    std::size_t n_observed = 0;
    bool converged = false;
    /// A partial autocorrelation ended within 1e-3 of +-1.
    bool at_boundary = false;
    std::size_t iterations = 0;
    /// Log-likelihood after each optimizer iteration.
    std::vector<double> trace;

    std::size_t free_parameters() const noexcept {
        return params.p() + params.r() + regression_coefficients.size() + 1;
    }
};

namespace detail {

struct Profile {
    double loglik = -std::numeric_limits<double>::infinity();
    double sigma2 = 0.0;
    std::vector<double> beta;
    std::vector<double> innovations;  // NaN where the observation is missing
};

/// Stationary covariance of the state (unit innovation variance).
inline bool initial_state_covariance(std::span<const double> phi, std::span<const double> rvec, std::vector<double>& P) {
    const std::size_t m = phi.size();
    P.assign(m * m, 0.0);
    if (m == 1) {
        const double d = 1.0 - phi[0] * phi[0];
        if (!(d > 0.0)) return false;
        P[0] = rvec[0] * rvec[0] / d;
        return true;
    }
    const auto mm = static_cast<Eigen::Index>(m * m);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        T(static_cast<Eigen::Index>(i), 0) = phi[i];
        if (i + 1 < m) T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = 1.0;
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(mm, mm);
    for (Eigen::Index a = 0; a < T.rows(); ++a)
        for (Eigen::Index b = 0; b < T.cols(); ++b)
            if (T(a, b) != 0.0) K.block(a * T.rows(), b * T.rows(), T.rows(), T.rows()) -= T(a, b) * T;
    Eigen::VectorXd rhs(mm);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) rhs(static_cast<Eigen::Index>(i * m + j)) = rvec[i] * rvec[j];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
    const Eigen::VectorXd vecP = lu.solve(rhs);
    for (Eigen::Index i = 0; i < mm; ++i) {
        if (!std::isfinite(vecP(i))) return false;
        P[static_cast<std::size_t>(i)] = vecP(i);
    }
    return P[0] > 0.0;
}

/// Profile log-likelihood: GLS regression coefficients and the innovation
/// variance are concentrated out. `X` holds regressor columns.
inline Profile profile_likelihood(std::span<const double> y, const std::vector<std::vector<double>>& X,
                                  std::span<const double> alpha, std::span<const double> theta,
                                  bool want_innovations) {
    Profile out;
    const std::size_t n = y.size();
    const std::size_t p = alpha.size(), r = theta.size();
    const std::size_t m = std::max(p, r + 1);
    const std::size_t k = X.size();

    std::vector<double> phi(m, 0.0), rv(m, 0.0);
    for (std::size_t i = 0; i < p; ++i) phi[i] = alpha[i];
    rv[0] = 1.0;
    for (std::size_t i = 0; i < r; ++i) rv[i + 1] = theta[i];

    std::vector<double> P;
    if (!initial_state_covariance(phi, rv, P)) return out;

    const std::size_t cols = k + 1;  // column 0 is y, then regressors
    std::vector<double> a(cols * m, 0.0), Kg(m), TP(m * m), Pn(m * m), v(cols);
    std::vector<double> S(cols * cols, 0.0);
    std::vector<double> stored;
    if (want_innovations) stored.assign(n * cols, std::numeric_limits<double>::quiet_NaN());
    double sum_log_f = 0.0;
    std::size_t n_obs = 0;

    auto propagate_cov = [&](bool observed, double F) {
        // TP = T * P
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                TP[i * m + j] = phi[i] * P[j] + (i + 1 < m ? P[(i + 1) * m + j] : 0.0);
        // Pn = TP * T' + R R' - K K' F
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                double s = TP[i * m] * phi[j] + (j + 1 < m ? TP[i * m + j + 1] : 0.0) + rv[i] * rv[j];
                if (observed) s -= Kg[i] * Kg[j] * F;
                Pn[i * m + j] = s;
            }
        P.swap(Pn);
    };

    for (std::size_t t = 0; t < n; ++t) {
        const bool observed = !is_missing(y[t]);
        double F = 0.0;
        if (observed) {
            F = P[0];
            if (!(F > 0.0) || !std::isfinite(F)) return out;
            const double inv_f = 1.0 / F;
            v[0] = y[t] - a[0];
            for (std::size_t c = 1; c < cols; ++c) v[c] = X[c - 1][t] - a[c * m];
            for (std::size_t c1 = 0; c1 < cols; ++c1)
                for (std::size_t c2 = 0; c2 <= c1; ++c2) S[c1 * cols + c2] += v[c1] * v[c2] * inv_f;
            if (want_innovations)
                for (std::size_t c = 0; c < cols; ++c) stored[t * cols + c] = v[c];
            sum_log_f += std::log(F);
            ++n_obs;
            for (std::size_t i = 0; i < m; ++i) Kg[i] = (phi[i] * P[0] + (i + 1 < m ? P[(i + 1) * m] : 0.0)) * inv_f;
        }
        for (std::size_t c = 0; c < cols; ++c) {
            double* ac = &a[c * m];
            const double a0 = ac[0];
            for (std::size_t i = 0; i < m; ++i) {
                double nv = phi[i] * a0 + (i + 1 < m ? ac[i + 1] : 0.0);
                if (observed) nv += Kg[i] * v[c];
                ac[i] = nv;
            }
        }
        propagate_cov(observed, F);
    }
    if (n_obs == 0) return out;

    double rss = S[0];
    std::vector<double> beta(k, 0.0);
    if (k > 0) {
        Eigen::MatrixXd Sxx(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        Eigen::VectorXd Sxy(static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) {
            Sxy(static_cast<Eigen::Index>(i)) = S[(i + 1) * cols];
            for (std::size_t j = 0; j <= i; ++j) {
                const double s = S[(i + 1) * cols + (j + 1)];
                Sxx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
                Sxx(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
            }
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(Sxx);
        if (ldlt.info() != Eigen::Success) return out;
        const Eigen::VectorXd b = ldlt.solve(Sxy);
        for (std::size_t i = 0; i < k; ++i) beta[i] = b(static_cast<Eigen::Index>(i));
        rss -= Sxy.dot(b);
    }
    if (!(rss > 0.0)) return out;

    const double nn = static_cast<double>(n_obs);
    out.sigma2 = rss / nn;
    out.loglik = -0.5 * nn * (std::log(2.0 * std::numbers::pi * out.sigma2) + 1.0) - 0.5 * sum_log_f;
    out.beta = std::move(beta);
    if (want_innovations) {
        out.innovations.assign(n, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t t = 0; t < n; ++t) {
            if (is_missing(y[t])) continue;
            double e = stored[t * cols];
            for (std::size_t j = 0; j < k; ++j) e -= stored[t * cols + j + 1] * out.beta[j];
            out.innovations[t] = e;
        }
    }
    return out;
}

inline constexpr double max_reflection = 1.0 - 1e-7;

struct Coefficients {
    std::vector<double> alpha, theta, ar_refl, ma_refl;
};

/// Unconstrained vector -> stationary AR and invertible MA coefficients.
inline Coefficients from_unconstrained(std::span<const double> u, std::size_t p, std::size_t r) {
    Coefficients c;
    c.ar_refl.resize(p);
    c.ma_refl.resize(r);
    for (std::size_t i = 0; i < p; ++i) c.ar_refl[i] = std::clamp(std::tanh(u[i]), -max_reflection, max_reflection);
    for (std::size_t i = 0; i < r; ++i) c.ma_refl[i] = std::clamp(std::tanh(u[p + i]), -max_reflection, max_reflection);
    c.alpha = step_up(c.ar_refl);
    c.theta = negated(step_up(c.ma_refl));
    return c;
}

inline std::vector<double> to_unconstrained(std::span<const double> alpha, std::span<const double> theta) {
    std::vector<double> u;
    auto push = [&](std::span<const double> coef) {
        if (coef.empty()) return;
        auto refl = step_down(coef);
        if (refl.size() != coef.size()) refl.assign(coef.size(), 0.0);
        for (double k : refl) u.push_back(std::atanh(std::clamp(k, -0.99, 0.99)));
    };
    push(alpha);
    push(negated(theta));
    return u;
}

/// Observed-row OLS residuals of y on the regressor columns.
inline std::vector<double> ols_residuals(std::span<const double> y, const std::vector<std::vector<double>>& X) {
    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t < y.size(); ++t)
        if (!is_missing(y[t])) rows.push_back(t);
    std::vector<double> res(y.begin(), y.end());
    if (X.empty() || rows.size() <= X.size()) return res;
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(X.size()));
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        b(static_cast<Eigen::Index>(i)) = y[rows[i]];
        for (std::size_t j = 0; j < X.size(); ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = X[j][rows[i]];
    }
    const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(b);
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (is_missing(y[t])) continue;
        double fit = 0.0;
        for (std::size_t j = 0; j < X.size(); ++j) fit += X[j][t] * beta(static_cast<Eigen::Index>(j));
        res[t] = y[t] - fit;
    }
    return res;
}

/// Method-of-moments starting coefficients: Yule-Walker for the AR part, the
/// MA(1) moment inversion for pure MA models, zeros otherwise.
inline std::vector<double> moment_start(std::span<const double> resid, std::size_t p, std::size_t r) {
    std::vector<double> alpha(p, 0.0), theta(r, 0.0);
    const std::size_t lags = std::max(p, std::size_t{1});
    std::vector<double> rho;
    try {
        rho = sample_autocorrelation(resid, lags);
    } catch (const DataError&) {
        return to_unconstrained(alpha, theta);
    }
    if (p > 0) {
        Eigen::MatrixXd R(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
        Eigen::VectorXd b(static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < p; ++i) {
            b(static_cast<Eigen::Index>(i)) = rho[i + 1];
            for (std::size_t j = 0; j < p; ++j)
                R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rho[i > j ? i - j : j - i];
        }
        const Eigen::VectorXd a = R.colPivHouseholderQr().solve(b);
        for (std::size_t i = 0; i < p; ++i) alpha[i] = a(static_cast<Eigen::Index>(i));
        if (!root_problem(alpha).empty()) std::fill(alpha.begin(), alpha.end(), 0.0);
    } else if (r > 0) {
        const double r1 = std::clamp(rho[1], -0.49, 0.49);
        if (std::abs(r1) > 1e-8) theta[0] = (1.0 - std::sqrt(1.0 - 4.0 * r1 * r1)) / (2.0 * r1);
    }
    return to_unconstrained(alpha, theta);
}

struct Standardized {
    std::vector<double> y;
    double center = 0.0;
    double scale = 1.0;
};

inline Standardized standardize(std::span<const double> y, bool center) {
    std::vector<double> obs;
    obs.reserve(y.size());
    for (double v : y)
        if (!is_missing(v)) obs.push_back(v);
    Standardized s;
    s.center = center ? stats::mean(obs) : 0.0;
    double ss = 0.0;
    for (double v : obs) ss += (v - s.center) * (v - s.center);
    s.scale = std::sqrt(ss / static_cast<double>(obs.size()));
    if (!(s.scale > 0.0)) throw DataError("series has zero variance; ARMA likelihood undefined");
    s.y.resize(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) s.y[t] = is_missing(y[t]) ? y[t] : (y[t] - s.center) / s.scale;
    return s;
}

inline std::vector<std::vector<double>> design_columns(std::size_t n, const FitOptions& opt) {
    std::vector<std::vector<double>> X;
    if (opt.include_intercept) X.emplace_back(n, 1.0);
    for (const auto& col : opt.regressors) {
        if (col.size() != n) throw InvalidArgument("regressor length differs from series length");
        for (double v : col)
            if (!std::isfinite(v)) throw InvalidArgument("regressors must be finite");
        X.push_back(col);
    }
    return X;
}

}  // namespace detail

/// Profile log-likelihood of the data at fixed ARMA coefficients, maximized
/// over the regression coefficients and the innovation variance.
inline double profile_loglik(const Series& y, std::span<const double> alpha, std::span<const double> theta,
                             const FitOptions& opt = {}) {
    const auto X = detail::design_columns(y.size(), opt);
    return detail::profile_likelihood(y.values, X, alpha, theta, false).loglik;
}

inline ArmaFit fit(const Series& y, ArmaOrder order, const FitOptions& opt = {}) {
    check_series(y);
    const std::size_t p = order.p, r = order.r;
    const std::size_t n_obs = y.observed_count();
    if (n_obs < std::max(p, r) + 5)
        throw DataError("ARMA(" + std::to_string(p) + "," + std::to_string(r) + ") fit needs at least " +
                        std::to_string(std::max(p, r) + 5) + " observed values, got " + std::to_string(n_obs));
    const auto X = detail::design_columns(y.size(), opt);
    const auto std_y = detail::standardize(y.values, opt.include_intercept);

    auto objective = [&](const std::vector<double>& u) {
        const auto c = detail::from_unconstrained(u, p, r);
        return -detail::profile_likelihood(std_y.y, X, c.alpha, c.theta, false).loglik;
    };

    std::vector<double> start = detail::moment_start(detail::ols_residuals(std_y.y, X), p, r);
    const std::vector<double> zero(p + r, 0.0);
    if (objective(zero) < objective(start)) start = zero;

    OptimResult best = nelder_mead(objective, start, opt.optimizer);
    std::size_t iterations = best.iterations;
    std::vector<double> trace = best.trace;
    if (p + r > 0) {
        NelderMeadOptions again = opt.optimizer;
        again.initial_step = 0.05;
        OptimResult second = nelder_mead(objective, best.x, again);
        iterations += second.iterations;
        trace.insert(trace.end(), second.trace.begin(), second.trace.end());
        if (second.value <= best.value) best = std::move(second);
    }

    const auto c = detail::from_unconstrained(best.x, p, r);
    const auto prof = detail::profile_likelihood(std_y.y, X, c.alpha, c.theta, true);
    if (!std::isfinite(prof.loglik)) throw DataError("ARMA likelihood is not finite at the optimum");

    const double s = std_y.scale;
    ArmaFit out;
    out.params.alpha = c.alpha;
    out.params.theta = c.theta;
    out.params.sigma2_eps = prof.sigma2 * s * s;
    out.regression_coefficients.resize(prof.beta.size());
    for (std::size_t j = 0; j < prof.beta.size(); ++j) out.regression_coefficients[j] = s * prof.beta[j];
    if (opt.include_intercept) out.regression_coefficients[0] += std_y.center;

    double mean_sum = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t)
        for (std::size_t j = 0; j < X.size(); ++j) mean_sum += X[j][t] * out.regression_coefficients[j];
    out.process_mean = opt.include_intercept && opt.regressors.empty()
                           ? out.regression_coefficients[0]
                           : mean_sum / static_cast<double>(y.size());
    out.params.mu_eps = out.process_mean * (1.0 - out.params.ar_sum());

    const double shift = static_cast<double>(n_obs) * std::log(s);
    out.loglik = prof.loglik - shift;
    out.aic = 2.0 * static_cast<double>(out.free_parameters()) - 2.0 * out.loglik;
    std::vector<double> resid(prof.innovations);
    for (double& e : resid) e *= s;
    out.residuals = y.with_values(std::move(resid));
    out.n_observed = n_obs;
    out.converged = best.converged;
    out.iterations = iterations;
    for (double v : trace) out.trace.push_back(-v - shift);
    for (double k : c.ar_refl) out.at_boundary = out.at_boundary || std::abs(k) > 0.999;
    for (double k : c.ma_refl) out.at_boundary = out.at_boundary || std::abs(k) > 0.999;
    return out;
}

/// Asymptotic standard errors of (alpha..., theta...) from the observed
/// information of the profile likelihood (central-difference Hessian). NaN
/// entries mean the Hessian was not negative definite.
inline std::vector<double> coefficient_standard_errors(const Series& y, const ArmaFit& f, const FitOptions& opt = {}) {
    const std::size_t p = f.params.p(), r = f.params.r();
    const std::size_t k = p + r;
    std::vector<double> se(k, std::numeric_limits<double>::quiet_NaN());
    if (k == 0) return se;
    std::vector<double> x(f.params.alpha);
    x.insert(x.end(), f.params.theta.begin(), f.params.theta.end());

    const auto X = detail::design_columns(y.size(), opt);
    const auto std_y = detail::standardize(y.values, opt.include_intercept);
    auto ll = [&](const std::vector<double>& z) {
        std::span<const double> zs(z);
        const std::span<const double> a = zs.first(p), t = zs.subspan(p);
        if (!detail::root_problem(a).empty() || !detail::root_problem(detail::negated(t)).empty())
            return std::numeric_limits<double>::quiet_NaN();
        return detail::profile_likelihood(std_y.y, X, a, t, false).loglik;
    };

    const double h = 1e-4;
    const double f0 = ll(x);
    Eigen::MatrixXd H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            double val;
            if (i == j) {
                auto xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                val = (ll(xp) - 2.0 * f0 + ll(xm)) / (h * h);
            } else {
                auto xpp = x, xpm = x, xmp = x, xmm = x;
                xpp[i] += h, xpp[j] += h;
                xpm[i] += h, xpm[j] -= h;
                xmp[i] -= h, xmp[j] += h;
                xmm[i] -= h, xmm[j] -= h;
                val = (ll(xpp) - ll(xpm) - ll(xmp) + ll(xmm)) / (4.0 * h * h);
            }
            if (!std::isfinite(val)) return se;
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = val;
            H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = val;
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(-H);
    if (llt.info() != Eigen::Success) return se;
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
    for (std::size_t i = 0; i < k; ++i) se[i] = std::sqrt(cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    return se;
}

/// Deterministic regressors: polynomial trend in t/n up to `degree` and
/// `harmonics` sine/cosine pairs of the given period. No intercept column.
inline std::vector<std::vector<double>> trend_regressors(std::size_t n, unsigned degree, double period = 0.0,
                                                         unsigned harmonics = 0) {
    std::vector<std::vector<double>> cols;
    for (unsigned d = 1; d <= degree; ++d) {
        std::vector<double> c(n);
        for (std::size_t t = 0; t < n; ++t) c[t] = std::pow(static_cast<double>(t) / static_cast<double>(n), d);
        cols.push_back(std::move(c));
    }
    if (harmonics > 0 && !(period > 1.0)) throw InvalidArgument("seasonal period must exceed 1");
    for (unsigned j = 1; j <= harmonics; ++j) {
        std::vector<double> s(n), c(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double w = 2.0 * std::numbers::pi * j * static_cast<double>(t) / period;
            s[t] = std::sin(w);
            c[t] = std::cos(w);
        }
        cols.push_back(std::move(s));
        cols.push_back(std::move(c));
    }
    return cols;
}

}  // namespace misrep
