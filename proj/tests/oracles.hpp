#pragma once

// Reference computations used as independent oracles by the tests. They are
// deliberately naive (truncated sums, dense matrices) and share no code
// with the library beyond the parameter structs.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "misrep/arma.hpp"

namespace oracle {

/// MA(infinity) weights by direct recursion psi_j = theta_j + sum_i alpha_i psi_{j-i}.
inline std::vector<double> psi(const misrep::ArmaParams& a, std::size_t count) {
    std::vector<double> w(count, 0.0);
    for (std::size_t j = 0; j < count; ++j) {
        double v = j == 0 ? 1.0 : (j <= a.theta.size() ? a.theta[j - 1] : 0.0);
        for (std::size_t i = 1; i <= a.alpha.size() && i <= j; ++i) v += a.alpha[i - 1] * w[j - i];
        w[j] = v;
    }
    return w;
}

/// gamma(k) = sigma2 sum_j psi_j psi_{j+k}, truncated once terms are negligible.
inline std::vector<double> autocovariance(const misrep::ArmaParams& a, std::size_t max_lag, std::size_t terms = 4000) {
    const auto w = psi(a, terms + max_lag + 1);
    std::vector<double> g(max_lag + 1, 0.0);
    for (std::size_t k = 0; k <= max_lag; ++k)
        for (std::size_t j = 0; j < terms; ++j) g[k] += w[j] * w[j + k];
    for (double& v : g) v *= a.sigma2_eps;
    return g;
}

/// Exact Gaussian log-likelihood of the observed entries at fixed (alpha,
/// theta), maximized over a constant mean and the innovation variance, by a
/// dense covariance matrix. Missing entries (NaN) are dropped.
inline double profile_loglik_dense(const std::vector<double>& y, const std::vector<double>& alpha,
                                   const std::vector<double>& theta) {
    misrep::ArmaParams a{alpha, theta, 0.0, 1.0};
    const auto g = oracle::autocovariance(a, y.size());
    std::vector<std::size_t> idx;
    for (std::size_t t = 0; t < y.size(); ++t)
        if (!std::isnan(y[t])) idx.push_back(t);
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd G(n, n);
    Eigen::VectorXd v(n), one = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = y[idx[i]];
        for (Eigen::Index j = 0; j < n; ++j) {
            const std::size_t lag = idx[i] > idx[j] ? idx[i] - idx[j] : idx[j] - idx[i];
            G(i, j) = g[lag];
        }
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(G);
    const Eigen::VectorXd Gi1 = llt.solve(one);
    const double m = Gi1.dot(v) / Gi1.dot(one);
    const Eigen::VectorXd r = v - m * one;
    const double s2 = r.dot(llt.solve(r)) / static_cast<double>(n);
    double logdet = 0.0;
    const Eigen::MatrixXd L = llt.matrixL();
    for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));
    const double nn = static_cast<double>(n);
    return -0.5 * nn * (std::log(2.0 * std::numbers::pi * s2) + 1.0) - 0.5 * logdet;
}

/// Full Gaussian log-likelihood at given parameters (no profiling).
inline double loglik_dense(const std::vector<double>& y, const misrep::ArmaParams& a) {
    const auto g = oracle::autocovariance(a, y.size());
    const auto n = static_cast<Eigen::Index>(y.size());
    const double mean = a.mu_eps / (1.0 - a.ar_sum());
    Eigen::MatrixXd G(n, n);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r(i) = y[static_cast<std::size_t>(i)] - mean;
        for (Eigen::Index j = 0; j < n; ++j) G(i, j) = g[static_cast<std::size_t>(std::abs(i - j))];
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(G);
    double logdet = 0.0;
    const Eigen::MatrixXd L = llt.matrixL();
    for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));
    return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + r.dot(llt.solve(r)));
}

/// Random stationary, invertible ARMA with p, r <= 2 built from roots
/// outside the unit circle (|root| >= 1.25), so no library validation is used.
inline misrep::ArmaParams random_arma(std::mt19937_64& eng, std::size_t p, std::size_t r) {
    std::uniform_real_distribution<double> inv_root(-0.8, 0.8);
    auto poly = [&](std::size_t order) {
        // coefficients c of prod (1 - z/root) = 1 - c1 z - c2 z^2
        std::vector<double> c;
        if (order == 1) c = {inv_root(eng)};
        if (order == 2) {
            const double a = inv_root(eng), b = inv_root(eng);
            c = {a + b, -a * b};
        }
        return c;
    };
    std::uniform_real_distribution<double> mu(-3.0, 3.0), s2(0.2, 4.0);
    misrep::ArmaParams out;
    out.alpha = poly(p);
    auto ma = poly(r);
    for (double& v : ma) v = -v;  // 1 + theta1 z + theta2 z^2
    out.theta = ma;
    out.mu_eps = mu(eng);
    out.sigma2_eps = s2(eng);
    return out;
}

}  // namespace oracle
