// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "misrep/misrep.hpp"

using namespace misrep;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

/// Mean and its batch-means standard error.
struct BatchMean {
    double mean = 0.0;
    double se = 0.0;
};

BatchMean batch_mean(const std::vector<double>& v, std::size_t batches = 1000) {
    const std::size_t len = v.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += v[i];
        means[b] = s / static_cast<double>(len);
    }
    return {stats::mean(means), stats::sample_sd(means) / std::sqrt(static_cast<double>(batches))};
}

// AR(1), MA(1), ARMA(1,1) with coefficients 0.5, mu_eps = 1, sigma2 = 1,
// crossed with q, omega in {0.3, 0.5, 0.7}.
std::vector<MisreportModel> moment_grid() {
    const std::vector<ArmaParams> latent{{{0.5}, {}, 1.0, 1.0}, {{}, {0.5}, 1.0, 1.0}, {{0.5}, {0.5}, 1.0, 1.0}};
    std::vector<MisreportModel> g;
    for (const auto& a : latent)
        for (double q : {0.3, 0.5, 0.7})
            for (double w : {0.3, 0.5, 0.7}) g.push_back({a, q, w});
    return g;
}

struct MomentRun {
    std::vector<std::string> labels;
    std::vector<double> mean_z, var_z, damping_err;
};

const MomentRun& moment_runs() {
    static const MomentRun run = [] {
        MomentRun r;
        const std::size_t n = 1000000;
        std::uint64_t seed = 1000;
        for (const auto& m : moment_grid()) {
            const auto s = simulate_observed(m, n, seed++);
            const BatchMean bm = batch_mean(s.y.values);
            std::vector<double> sq(n);
            for (std::size_t t = 0; t < n; ++t) sq[t] = (s.y[t] - bm.mean) * (s.y[t] - bm.mean);
            const BatchMean bv = batch_mean(sq);
            r.labels.push_back(fmt("p=%zu r=%zu q=%.1f w=%.1f", m.arma.p(), m.arma.r(), m.q, m.omega));
            r.mean_z.push_back((bm.mean - observed_mean(m)) / bm.se);
            r.var_z.push_back((bv.mean - observed_variance(m, true)) / bv.se);
            const double ry = sample_autocorrelation(s.y.values, 1)[1];
            const double rx = sample_autocorrelation(s.x.values, 1)[1];
            r.damping_err.push_back(ry / rx - acf_damping_factor(m));
        }
        return r;
    }();
    return run;
}

Outcome c1_moments() {
    const auto& r = moment_runs();
    double worst = 0.0;
    std::string where;
    for (std::size_t i = 0; i < r.labels.size(); ++i)
        for (double z : {r.mean_z[i], r.var_z[i]})
            if (std::abs(z) > worst) {
                worst = std::abs(z);
                where = r.labels[i];
            }
    return {worst <= 3.0, fmt("27 models, n=1e6: largest |error|/SE = %.2f (%s), limit 3", worst, where.c_str())};
}

Outcome c2_damping() {
    const auto& r = moment_runs();
    double worst = 0.0;
    std::string where;
    for (std::size_t i = 0; i < r.labels.size(); ++i)
        if (std::abs(r.damping_err[i]) > worst) {
            worst = std::abs(r.damping_err[i]);
            where = r.labels[i];
        }
    return {worst <= 0.01, fmt("27 models: largest |rho_Y(1)/rho_X(1) - c| = %.4f (%s), limit 0.01", worst, where.c_str())};
}

// The AR(1) setting of criteria 3 and 4, shared by both.
GridSpec ar1_setting(std::size_t replicates, std::size_t bootstrap, std::uint64_t seed) {
    GridSpec s;
    s.structures = {{1, 0}};
    s.alpha_values = {0.5};
    s.q_values = {0.3};
    s.omega_values = {0.5};
    s.mu_eps = 5.0;
    s.sigma2_eps = 1.0;
    s.n = 1000;
    s.replicates = replicates;
    s.bootstrap_replicates = bootstrap;
    s.seed = seed;
    return s;
}

const StudyResult& estimation_run() {
    static const StudyResult r = run_grid(ar1_setting(50, 100, 2024));
    return r;
}

const MetricsRow* find_row(const std::vector<MetricsRow>& rows, Estimator e, const std::string& param, std::size_t n = 0) {
    for (const auto& r : rows)
        if (r.estimator == e && r.parameter == param && (n == 0 || r.n == n)) return &r;
    return nullptr;
}

Outcome c3_recovery() {
    const auto& rows = estimation_run().rows;
    const auto* a = find_row(rows, Estimator::misreport, "alpha1");
    const auto* q = find_row(rows, Estimator::misreport, "q");
    const auto* w = find_row(rows, Estimator::misreport, "omega");
    const bool ok = a->count == 50 && a->bias <= 0.03 && q->bias <= 0.02 && w->bias <= 0.02;
    return {ok, fmt("50 replicates (%zu ok): bias alpha %.4f (<= 0.03), q %.4f, omega %.4f (<= 0.02)", a->count, a->bias,
                    q->bias, w->bias)};
}

Outcome c4_contrast() {
    const auto& rows = estimation_run().rows;
    const auto* m = find_row(rows, Estimator::misreport, "alpha1");
    const auto* s = find_row(rows, Estimator::standard, "alpha1");
    const bool ok = s->bias >= 5.0 * m->bias && m->coverage >= 0.85 && s->coverage <= 0.30;
    return {ok, fmt("alpha bias standard %.4f vs misreport %.4f (ratio %.1f, need >= 5); coverage misreport %.1f%% "
                    "(>= 85%%) vs standard %.1f%% (<= 30%%)",
                    s->bias, m->bias, s->bias / m->bias, 100 * m->coverage, 100 * s->coverage)};
}

Outcome c5_sample_size() {
    GridSpec s = ar1_setting(30, 100, 77);
    s.q_values = {0.3, 0.5, 0.7};
    const auto res = sample_size_sweep(s, {50, 1000});
    bool ail_ok = true;
    double cov50 = 0.0, cov1000 = 0.0;
    std::string ail;
    for (const char* p : {"alpha1", "q", "omega"}) {
        const auto* a = find_row(res.rows, Estimator::misreport, p, 50);
        const auto* b = find_row(res.rows, Estimator::misreport, p, 1000);
        ail_ok = ail_ok && a->ail > b->ail;
        ail += fmt(" %s %.3f/%.3f", p, a->ail, b->ail);
        cov50 += a->coverage / 3.0;
        cov1000 += b->coverage / 3.0;
    }
    const bool ok = ail_ok && cov1000 - cov50 >= 0.10;
    return {ok, fmt("AIL n=50/n=1000:%s; mean coverage %.1f%% vs %.1f%% (gap %.1f points, need >= 10)", ail.c_str(),
                    100 * cov50, 100 * cov1000, 100 * (cov1000 - cov50))};
}

Outcome c6_detection() {
    const MisreportModel null_model{{{0.5}, {}, 1.0, 1.0}, 1.0, 0.0};
    const MisreportModel mis{{{0.5}, {}, 1.0, 1.0}, 0.3, 0.5};
    auto rate = [](const MisreportModel& m, std::uint64_t base, double& mean_icpt) {
        int rej = 0, used = 0;
        double icpt = 0.0;
        for (int i = 0; i < 200; ++i) {
            const auto s = simulate_observed(m, 1000, base + static_cast<std::uint64_t>(i));
            try {
                const auto rep = log_acf_regression(sample_acf(s.y, default_max_lag(1000)));
                rej += rep.verdict;
                icpt += rep.intercept;
                ++used;
            } catch (const DataError&) {
                // no usable lags: no rejection
            }
        }
        mean_icpt = icpt / used;
        return rej / 200.0;
    };
    double icpt_null = 0.0, icpt_mis = 0.0;
    const double size = rate(null_model, 50000, icpt_null);
    const double power = rate(mis, 60000, icpt_mis);
    const double log_c = std::log(acf_damping_factor(mis));
    const bool ok = size <= 0.15 && power >= 0.70 && std::abs(icpt_mis - log_c) <= 0.1;
    return {ok, fmt("rejection omega=0 %.1f%% (<= 15%%), misreported %.1f%% (>= 70%%); mean intercept %.3f vs log c %.3f "
                    "(within 0.1)",
                    100 * size, 100 * power, icpt_mis, log_c)};
}

Outcome c7_invariants() {
    std::mt19937_64 eng(7007);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int em_bad = 0, rt_bad = 0, sc_bad = 0, pc_bad = 0, det_bad = 0, sc_done = 0;

    for (int i = 0; i < 100; ++i) {
        // EM monotonicity from a random start
        std::normal_distribution<double> z;
        std::vector<double> x(300);
        const double sep = 1.0 + 4.0 * u(eng);
        for (double& v : x) v = z(eng) + (u(eng) < 0.4 ? sep : 0.0);
        EmOptions eo;
        eo.restarts = 0;
        eo.init = MixtureParams{0.2 + 0.6 * u(eng), x[0], x[1], 0.5 + u(eng), 0.5 + u(eng)};
        const auto f = em_fit(x, eo);
        for (std::size_t k = 1; k < f.loglik_trace.size(); ++k) em_bad += f.loglik_trace[k] < f.loglik_trace[k - 1] - 1e-10;

        // reconstruction with the true indicators returns the latent series
        const MisreportModel m{{{0.2 + 0.6 * u(eng)}, {}, 4.0 + 4.0 * u(eng), 1.0}, 0.2 + 0.5 * u(eng), 0.3 + 0.4 * u(eng)};
        const auto s = simulate_observed(m, 400, 70000 + static_cast<std::uint64_t>(i));
        const Series back = reconstruct(s.y, m.q, s.z);
        for (std::size_t t = 0; t < back.size(); ++t)
            rt_bad += std::abs(back[t] - s.x[t]) > 4 * std::numeric_limits<double>::epsilon() * std::abs(s.x[t]);

        // estimate is scale equivariant and deterministic
        const double lam = std::exp(6 * u(eng) - 3);
        std::vector<double> ys = s.y.values;
        for (double& v : ys) v *= lam;
        try {
            const FitResult a = estimate(s.y, {1, 0}), b = estimate(Series(ys), {1, 0}), c = estimate(s.y, {1, 0});
            ++sc_done;
            sc_bad += std::abs(a.model.q - b.model.q) > 1e-6 || std::abs(a.model.omega - b.model.omega) > 1e-6 ||
                      std::abs(a.model.arma.alpha[0] - b.model.arma.alpha[0]) > 1e-6 ||
                      std::abs(b.model.arma.mu_eps / lam - a.model.arma.mu_eps) > 1e-6 * std::abs(a.model.arma.mu_eps);
            det_bad += a.model.q != c.model.q || a.model.arma.alpha != c.model.arma.alpha || a.z_hat != c.z_hat;
        } catch (const Error&) {
        }

        // percentile bounds are the 13th and 488th order statistics of 500 draws
        std::vector<double> d(500);
        for (double& v : d) v = z(eng);
        const auto ps = summarize_draws("x", 0.0, d, 0.95);
        std::sort(d.begin(), d.end());
        pc_bad += ps.ci_low != d[12] || ps.ci_high != d[487];
    }
    const bool ok = em_bad == 0 && rt_bad == 0 && sc_bad == 0 && pc_bad == 0 && det_bad == 0 && sc_done >= 95;
    return {ok, fmt("100 cases each: EM decreases %d, round-trip mismatches %d, scale-equivariance violations %d/%d, "
                    "percentile mismatches %d, nondeterministic fits %d",
                    em_bad, rt_bad, sc_bad, sc_done, pc_bad, det_bad)};
}

Outcome c8_nested_coverage() {
    const auto res = run_grid(ar1_setting(100, 200, 8080));
    const auto* a = find_row(res.rows, Estimator::misreport, "alpha1");
    const double cov = a->count ? a->coverage * static_cast<double>(a->count) / 100.0 : 0.0;
    return {cov >= 0.85, fmt("100 repetitions, B=200: alpha covered in %.0f%% (need >= 85%%; %zu fits failed)", 100 * cov,
                             a->failures)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"C1 moment formulas vs Monte Carlo", c1_moments},
        {"C2 ACF damping factor", c2_damping},
        {"C3 estimation recovery", c3_recovery},
        {"C4 contrast with the standard fit", c4_contrast},
        {"C5 sample-size direction", c5_sample_size},
        {"C6 detection calibration", c6_detection},
        {"C7 invariant suites", c7_invariants},
        {"C8 bootstrap nested coverage [slow]", c8_nested_coverage},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && !only.count(static_cast<int>(i) + 1)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s  %s: %s [%.0fs]\n", o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str(), sec);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
