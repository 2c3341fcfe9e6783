#pragma once

// Evidence of misreporting from the sample ACF. For an AR(1) latent process
// the observed ACF is c alpha^k, so log rho_Y(k) = log c + k log alpha is
// linear in k; an intercept significantly different from zero (c != 1)
// points to misreporting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "misrep/acf.hpp"
#include "misrep/arma.hpp"
#include "misrep/error.hpp"
#include "misrep/series.hpp"

namespace misrep {

struct AcfEstimate {
    std::vector<std::size_t> lags;
    std::vector<double> rho;
    std::size_t n = 0;
};

struct DetectionReport {
    double intercept = 0.0;
    double slope = 0.0;
    double intercept_se = 0.0;
    double slope_se = 0.0;
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::vector<std::size_t> lags_used;
    std::vector<double> log_rho;
    bool verdict = false;
    /// False when the log-linear ACF model does not describe the latent
    /// structure (not AR(1), or a fitted slope implying alpha outside (0, 1)).
    bool applicable = true;
    std::string note;
};

struct DetectOptions {
    double significance = 0.05;
    /// Latent structure assumed by the caller; only AR(1) supports a verdict.
    ArmaOrder latent{1, 0};
};

inline std::size_t default_max_lag(std::size_t n) { return std::min<std::size_t>(10, n / 4); }

inline AcfEstimate sample_acf(const Series& y, std::size_t max_lag) {
    check_series(y);
    if (2 * max_lag >= y.size())
        throw InvalidArgument("max_lag must be below half the series length");
    AcfEstimate est;
    est.n = y.size();
    est.rho = sample_autocorrelation(y.values, max_lag);
    est.lags.resize(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) est.lags[k] = k;
    return est;
}

/// OLS of log rho(k) on k over lags 1, 2, ... up to the first non-positive
/// autocorrelation, with a two-sided t-test of the intercept.
inline DetectionReport log_acf_regression(const AcfEstimate& acf, const DetectOptions& opt = {}) {
    DetectionReport rep;
    for (std::size_t i = 0; i < acf.lags.size(); ++i) {
        if (acf.lags[i] == 0) continue;
        if (!(acf.rho[i] > 0.0)) break;
        rep.lags_used.push_back(acf.lags[i]);
        rep.log_rho.push_back(std::log(acf.rho[i]));
    }
    const std::size_t L = rep.lags_used.size();
    if (L < 3) throw DataError("insufficient positive autocorrelation for AR(1) log-regression");

    double kbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        kbar += static_cast<double>(rep.lags_used[i]);
        ybar += rep.log_rho[i];
    }
    kbar /= static_cast<double>(L);
    ybar /= static_cast<double>(L);
    double sxx = 0.0, sxy = 0.0, sum_k2 = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        const double k = static_cast<double>(rep.lags_used[i]);
        sxx += (k - kbar) * (k - kbar);
        sxy += (k - kbar) * (rep.log_rho[i] - ybar);
        sum_k2 += k * k;
    }
    rep.slope = sxy / sxx;
    rep.intercept = ybar - rep.slope * kbar;
    double rss = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        const double e = rep.log_rho[i] - rep.intercept - rep.slope * static_cast<double>(rep.lags_used[i]);
        rss += e * e;
    }
    const double df = static_cast<double>(L - 2);
    const double s2 = rss / df;
    rep.intercept_se = std::sqrt(s2 * sum_k2 / (static_cast<double>(L) * sxx));
    rep.slope_se = std::sqrt(s2 / sxx);

    if (rep.intercept_se > 0.0) {
        rep.t_statistic = rep.intercept / rep.intercept_se;
        const boost::math::students_t dist(df);
        rep.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(rep.t_statistic))), 0.0, 1.0);
    } else {
        // Exact fit: the intercept is known without error.
        rep.t_statistic = rep.intercept == 0.0 ? 0.0 : std::copysign(INFINITY, rep.intercept);
        rep.p_value = rep.intercept == 0.0 ? 1.0 : 0.0;
    }

    if (!(opt.latent == ArmaOrder{1, 0})) {
        rep.applicable = false;
        rep.note = "diagnostic not applicable: the log-ACF regression assumes an AR(1) latent process";
    } else if (!(rep.slope < 0.0)) {
        rep.applicable = false;
        rep.note = "diagnostic not applicable: fitted slope implies alpha outside (0, 1)";
    }
    rep.verdict = rep.applicable && rep.p_value < opt.significance;
    return rep;
}

}  // namespace misrep
