#pragma once

// Monte Carlo harness: simulate misreported series over a parameter grid,
// fit them with the misreport estimator (bootstrap percentile intervals) and
// with a plain ARMA fit that ignores misreporting (Gaussian intervals from the
// observed information), and aggregate bias, interval length and coverage.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "misrep/arma_fit.hpp"
#include "misrep/bootstrap.hpp"
#include "misrep/misreport.hpp"
#include "misrep/parallel.hpp"
#include "misrep/rng.hpp"

namespace misrep {

struct GridSpec {
    std::vector<ArmaOrder> structures{{1, 0}, {0, 1}, {1, 1}};
    std::vector<double> alpha_values{0.3, 0.5, 0.7};
    std::vector<double> theta_values{0.3, 0.5, 0.7};
    std::vector<double> q_values{0.3, 0.5, 0.7};
    std::vector<double> omega_values{0.3, 0.5, 0.7};
    double mu_eps = 5.0;
    double sigma2_eps = 1.0;
    std::size_t n = 1000;
    std::size_t replicates = 50;
    std::size_t bootstrap_replicates = 100;
    double level = 0.95;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    EstimateOptions estimate;
};

struct GridPoint {
    std::size_t id = 0;
    MisreportModel truth;
};

struct SkippedPoint {
    MisreportModel truth;
    std::string reason;
};

struct Grid {
    std::vector<GridPoint> points;
    std::vector<SkippedPoint> skipped;
};

enum class Estimator { misreport, standard };

inline const char* to_string(Estimator e) { return e == Estimator::misreport ? "misreport" : "standard"; }

inline std::string structure_label(ArmaOrder o) {
    if (o.r == 0) return "AR(" + std::to_string(o.p) + ")";
    if (o.p == 0) return "MA(" + std::to_string(o.r) + ")";
    return "ARMA(" + std::to_string(o.p) + ", " + std::to_string(o.r) + ")";
}

struct ReplicateRecord {
    std::size_t point_id = 0;
    std::string structure;
    std::size_t n = 0;
    std::size_t replicate = 0;
    Estimator estimator = Estimator::misreport;
    std::string parameter;
    double truth = 0.0;
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    bool ok = false;
};

struct MetricsRow {
    std::string structure;  // "Standard " prefix for the naive estimator
    std::string parameter;
    Estimator estimator = Estimator::misreport;
    std::size_t n = 0;
    double bias = 0.0;      // mean |estimate - truth|
    double ail = 0.0;       // mean interval length
    double coverage = 0.0;  // fraction of intervals containing the truth
    std::size_t count = 0;  // successful replicates aggregated
    std::size_t failures = 0;
};

namespace detail {

inline void cartesian(const std::vector<double>& values, std::size_t k, std::vector<double>& cur,
                      const std::function<void(const std::vector<double>&)>& emit) {
    if (cur.size() == k) {
        emit(cur);
        return;
    }
    for (double v : values) {
        cur.push_back(v);
        cartesian(values, k, cur, emit);
        cur.pop_back();
    }
}

}  // namespace detail

/// Enumerates structures x coefficients x q x omega in a fixed order. Points
/// failing the ARMA root checks or with q = 1 / omega in {0, 1} are skipped
/// and reported. Ids depend only on the grid definition, not on n.
inline Grid enumerate_grid(const GridSpec& spec) {
    Grid g;
    std::size_t id = 0;
    for (const ArmaOrder& o : spec.structures) {
        std::vector<std::vector<double>> alphas, thetas;
        std::vector<double> cur;
        detail::cartesian(spec.alpha_values, o.p, cur, [&](const auto& v) { alphas.push_back(v); });
        detail::cartesian(spec.theta_values, o.r, cur, [&](const auto& v) { thetas.push_back(v); });
        for (const auto& a : alphas)
            for (const auto& t : thetas)
                for (double q : spec.q_values)
                    for (double w : spec.omega_values) {
                        MisreportModel m{{a, t, spec.mu_eps, spec.sigma2_eps}, q, w};
                        if (auto v = validate(m); !v) {
                            g.skipped.push_back({m, v.diagnostic});
                        } else if (m.non_identifiable()) {
                            g.skipped.push_back({m, "non-identifiable (q = 1 or omega in {0, 1})"});
                        } else {
                            g.points.push_back({id++, m});
                        }
                    }
    }
    return g;
}

inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t point_id, std::size_t replicate) {
    return derive_seed(derive_seed(master, point_id), replicate);
}

/// Records for one (grid point, replicate). Failures produce records with ok = false.
inline std::vector<ReplicateRecord> run_replicate(const GridSpec& spec, const GridPoint& pt, std::size_t replicate) {
    const MisreportModel& truth = pt.truth;
    const ArmaOrder order = truth.arma.order();
    const std::string label = structure_label(order);
    const std::uint64_t seed = replicate_seed(spec.seed, pt.id, replicate);
    const auto sample = simulate_observed(truth, spec.n, derive_seed(seed, 0));

    std::vector<ReplicateRecord> out;
    auto base = [&](Estimator e, std::string param, double t) {
        ReplicateRecord r;
        r.point_id = pt.id;
        r.structure = label;
        r.n = spec.n;
        r.replicate = replicate;
        r.estimator = e;
        r.parameter = std::move(param);
        r.truth = t;
        return r;
    };

    // Parameters reported for the misreport estimator.
    std::vector<std::pair<std::string, double>> targets;
    for (std::size_t j = 0; j < order.p; ++j) targets.emplace_back("alpha" + std::to_string(j + 1), truth.arma.alpha[j]);
    for (std::size_t j = 0; j < order.r; ++j) targets.emplace_back("theta" + std::to_string(j + 1), truth.arma.theta[j]);
    const std::size_t n_coef = targets.size();
    targets.emplace_back("q", truth.q);
    targets.emplace_back("omega", truth.omega);

    {
        std::vector<ReplicateRecord> recs;
        for (const auto& [name, t] : targets) recs.push_back(base(Estimator::misreport, name, t));
        try {
            const FitResult fr = estimate(sample.y, order, spec.estimate);
            if (fr.converged) {
                BootstrapOptions bo;
                bo.replicates = spec.bootstrap_replicates;
                bo.seed = derive_seed(seed, 1);
                bo.level = spec.level;
                bo.estimate = spec.estimate;
                const BootstrapSummary bs = parametric_bootstrap(fr, spec.n, bo);
                if (bs.replicates_converged >= 2) {
                    for (auto& r : recs) {
                        const ParameterSummary* ps = bs.find(r.parameter);
                        r.estimate = ps->point;
                        r.ci_low = ps->ci_low;
                        r.ci_high = ps->ci_high;
                        r.ok = std::isfinite(r.ci_low) && std::isfinite(r.ci_high);
                    }
                }
            }
        } catch (const Error&) {
        }
        out.insert(out.end(), recs.begin(), recs.end());
    }

    {
        std::vector<ReplicateRecord> recs;
        for (std::size_t j = 0; j < n_coef; ++j) recs.push_back(base(Estimator::standard, targets[j].first, targets[j].second));
        try {
            const ArmaFit af = fit(sample.y, order, spec.estimate.arma);
            const auto se = coefficient_standard_errors(sample.y, af, spec.estimate.arma);
            const double zq = boost::math::quantile(boost::math::normal(), (1.0 + spec.level) / 2.0);
            for (std::size_t j = 0; j < n_coef; ++j) {
                const double est = j < order.p ? af.params.alpha[j] : af.params.theta[j - order.p];
                recs[j].estimate = est;
                recs[j].ci_low = est - zq * se[j];
                recs[j].ci_high = est + zq * se[j];
                recs[j].ok = std::isfinite(se[j]);
            }
        } catch (const Error&) {
        }
        out.insert(out.end(), recs.begin(), recs.end());
    }
    return out;
}

/// Pools records by (structure, estimator, parameter, n), i.e. averages over
/// every grid point and replicate. Rows come out in first-appearance order.
inline std::vector<MetricsRow> aggregate(const std::vector<ReplicateRecord>& records) {
    using Key = std::tuple<std::string, int, std::string, std::size_t>;
    std::map<Key, std::size_t> index;
    std::vector<MetricsRow> rows;
    for (const auto& r : records) {
        const Key key{r.structure, static_cast<int>(r.estimator), r.parameter, r.n};
        auto it = index.find(key);
        if (it == index.end()) {
            MetricsRow row;
            row.structure = (r.estimator == Estimator::standard ? "Standard " : "") + r.structure;
            row.parameter = r.parameter;
            row.estimator = r.estimator;
            row.n = r.n;
            it = index.emplace(key, rows.size()).first;
            rows.push_back(row);
        }
        MetricsRow& row = rows[it->second];
        if (!r.ok) {
            ++row.failures;
            continue;
        }
        ++row.count;
        row.bias += std::abs(r.estimate - r.truth);
        row.ail += r.ci_high - r.ci_low;
        row.coverage += (r.ci_low <= r.truth && r.truth <= r.ci_high) ? 1.0 : 0.0;
    }
    for (auto& row : rows) {
        if (row.count == 0) {
            row.bias = row.ail = row.coverage = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double c = static_cast<double>(row.count);
        row.bias /= c;
        row.ail /= c;
        row.coverage /= c;
    }
    return rows;
}

struct StudyResult {
    std::vector<MetricsRow> rows;
    std::vector<ReplicateRecord> records;
    std::vector<SkippedPoint> skipped;
};

inline StudyResult run_grid(const GridSpec& spec) {
    if (spec.replicates == 0) throw InvalidArgument("replicates must be at least 1");
    if (spec.n < 30) throw InvalidArgument("series length must be at least 30");
    const Grid grid = enumerate_grid(spec);
    const std::size_t tasks = grid.points.size() * spec.replicates;
    std::vector<std::vector<ReplicateRecord>> per_task(tasks);
    parallel_for(tasks, spec.threads, [&](std::size_t i) {
        per_task[i] = run_replicate(spec, grid.points[i / spec.replicates], i % spec.replicates);
    });
    StudyResult res;
    res.skipped = grid.skipped;
    for (auto& v : per_task) res.records.insert(res.records.end(), v.begin(), v.end());
    res.rows = aggregate(res.records);
    return res;
}

/// run_grid at each series length with the same master seed.
inline StudyResult sample_size_sweep(GridSpec spec, const std::vector<std::size_t>& lengths = {50, 100, 500, 1000}) {
    StudyResult all;
    for (std::size_t n : lengths) {
        spec.n = n;
        StudyResult r = run_grid(spec);
        all.records.insert(all.records.end(), r.records.begin(), r.records.end());
        all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
        if (all.skipped.empty()) all.skipped = r.skipped;
    }
    return all;
}

}  // namespace misrep
