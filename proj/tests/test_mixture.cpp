#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "misrep/mixture.hpp"

using namespace misrep;

namespace {

std::vector<double> two_normals(std::size_t n, double w2, double m1, double s1, double m2, double s2, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::bernoulli_distribution pick(w2);
    std::normal_distribution<double> a(m1, s1), b(m2, s2);
    std::vector<double> x(n);
    for (double& v : x) v = pick(eng) ? b(eng) : a(eng);
    return x;
}

// Direct evaluation of the two-component density, no log-space tricks.
double naive_loglik(const std::vector<double>& x, const MixtureParams& mp) {
    auto pdf = [](double v, double m, double s) {
        return std::exp(-0.5 * (v - m) * (v - m) / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
    };
    double ll = 0.0;
    for (double v : x) ll += std::log(mp.w1 * pdf(v, mp.m1, mp.s1) + mp.w2() * pdf(v, mp.m2, mp.s2));
    return ll;
}

MixtureParams sorted_by_mean(MixtureParams mp) { return mp.m1 <= mp.m2 ? mp : swap_components(mp); }

}  // namespace

TEST(EmFit, SeparatedComponentsRecovered) {
    const auto x = two_normals(2000, 0.5, 0.0, 1.0, 10.0, 1.0, 1);
    const MixtureFit f = em_fit(x);
    const MixtureParams mp = sorted_by_mean(f.params);
    EXPECT_NEAR(mp.m1, 0.0, 0.15);
    EXPECT_NEAR(mp.m2, 10.0, 0.15);
    EXPECT_NEAR(mp.w1, 0.5, 0.04);
    EXPECT_TRUE(f.converged);
    EXPECT_NEAR(f.loglik, naive_loglik(x, f.params), 1e-8 * std::abs(f.loglik));
}

TEST(EmFit, NestsSingleNormal) {
    const auto x = two_normals(500, 0.0, 3.0, 2.0, 0.0, 1.0, 2);
    const MixtureFit f = em_fit(x);
    EXPECT_GE(f.loglik, single_normal_loglik(x) - 1e-9);
}

TEST(EmFit, EqualInitialComponentsDoNotCrash) {
    const auto x = two_normals(400, 0.3, 0.0, 1.0, 4.0, 1.0, 3);
    EmOptions opt;
    opt.init = MixtureParams{0.5, 1.0, 1.0, 1.0, 1.0};
    MixtureFit f;
    ASSERT_NO_THROW(f = em_fit(x, opt));
    EXPECT_TRUE(std::isfinite(f.loglik));
    // random restarts escape the symmetric point
    EXPECT_GT(std::abs(f.params.m1 - f.params.m2), 1.0);
}

TEST(EmFit, PreconditionErrors) {
    EXPECT_THROW(em_fit(std::vector<double>(5, 1.0)), InvalidArgument);
    EXPECT_THROW(em_fit(std::vector<double>(20, 1.0)), InvalidArgument);
}

TEST(EmFit, CollapsedRunsAreDiscarded) {
    // half the data sits on one exact value: a component can shrink onto it
    std::vector<double> x = two_normals(200, 0.0, 0.0, 1.0, 0.0, 1.0, 4);
    for (std::size_t i = 0; i < 100; ++i) x[i] = 2.5;
    MixtureFit f;
    try {
        f = em_fit(x);
        EXPECT_TRUE(std::isfinite(f.loglik));
    } catch (const DegenerateMixture& e) {
        EXPECT_NE(std::string(e.what()).find("collapsed"), std::string::npos);
    }
}

TEST(WeightsOnly, RecoversWeight) {
    const auto x = two_normals(3000, 0.75, 0.0, 1.0, 10.0, 1.0, 5);
    const WeightFit w = em_fit_weights_only(x, {0.0, 1.0, 10.0, 1.0});
    EXPECT_NEAR(1.0 - w.w1, 0.75, 0.03);
}

TEST(WeightsOnly, BoundaryIsClamped) {
    std::vector<double> x(50);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.01 * static_cast<double>(i % 5);
    const WeightFit w = em_fit_weights_only(x, {0.0, 1.0, 50.0, 1.0});
    EXPECT_DOUBLE_EQ(w.w1, 1.0 - weight_floor);
}

TEST(WeightsOnly, EquidistantPointHasEvenPosterior) {
    const MixtureParams mp{0.5, 0.0, 4.0, 2.0, 2.0};
    EXPECT_DOUBLE_EQ(posterior(2.0, mp), 0.5);
}

TEST(WeightsOnly, IdenticalComponentsNotIdentifiable) {
    const auto x = two_normals(50, 0.5, 0.0, 1.0, 0.0, 1.0, 6);
    try {
        em_fit_weights_only(x, {1.0, 2.0, 1.0, 2.0});
        FAIL() << "expected NonIdentifiable";
    } catch (const NonIdentifiable& e) {
        EXPECT_NE(std::string(e.what()).find("omega = 1"), std::string::npos);
    }
}

TEST(LabelComponents, ConsistentRatiosUnderAuto) {
    const MixtureParams mp{0.6, 2.0, 0.5, 1.0, 0.25};
    const auto l = label_components(mp, Direction::automatic);
    EXPECT_DOUBLE_EQ(l.q, 0.25);
    EXPECT_DOUBLE_EQ(l.omega, 0.4);
    EXPECT_FALSE(l.swapped);
}

TEST(LabelComponents, AutoPicksTheBetterAgreeingAssignment) {
    // mean ratio 0.25 vs sd ratio 0.3 one way, 4 vs 3.33 the other
    const MixtureParams mp{0.6, 2.0, 0.5, 1.0, 0.3};
    EXPECT_DOUBLE_EQ(label_components(mp, Direction::automatic).q, 0.25);
    const auto f = label_components(swap_components(mp), Direction::automatic);
    EXPECT_DOUBLE_EQ(f.q, 0.25);
    EXPECT_TRUE(f.swapped);
    EXPECT_DOUBLE_EQ(f.omega, 0.4);
}

TEST(LabelComponents, DocumentedIncidenceFit) {
    // true-scale mean 0.629, misreported mean 0.152 with weight 0.760
    const MixtureParams mp{0.240, 0.629, 0.152, 0.3, 0.07};
    const auto l = label_components(mp, Direction::under);
    EXPECT_NEAR(l.q, 0.242, 5e-4);
    EXPECT_NEAR(l.omega, 0.760, 1e-12);
}

TEST(LabelComponents, DirectionForcesSideOfOne) {
    const MixtureParams mp{0.5, 1.0, 3.0, 1.0, 3.0};
    EXPECT_LT(label_components(mp, Direction::under).q, 1.0);
    EXPECT_GT(label_components(mp, Direction::over).q, 1.0);
}

TEST(LabelComponents, Errors) {
    EXPECT_THROW(label_components({0.5, 1.0, 1.0, 1.0, 1.0}, Direction::automatic), NonIdentifiable);
    EXPECT_THROW(label_components({0.5, 1e-12, 0.5, 1.0, 1.0}, Direction::over), NonIdentifiable);
}

// Property: the observed-data log-likelihood never decreases across EM iterations.
TEST(EmProperty, LoglikNonDecreasing) {
    std::mt19937_64 eng(1001);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 120; ++i) {
        const auto x = two_normals(150 + i, 0.1 + 0.8 * u(eng), 5 * u(eng), 0.3 + u(eng), 5 * u(eng), 0.3 + 2 * u(eng),
                                   2000 + i);
        EmOptions opt;
        opt.seed = 3000 + i;
        opt.restarts = 0;
        opt.init = MixtureParams{0.2 + 0.6 * u(eng), x[0], x[1], 0.5 + u(eng), 0.5 + u(eng)};
        const MixtureFit f = em_fit(x, opt);
        for (std::size_t k = 1; k < f.loglik_trace.size(); ++k)
            EXPECT_GE(f.loglik_trace[k], f.loglik_trace[k - 1] - 1e-10) << i << ' ' << k;
    }
}

// Property: P(component 1) + P(component 2) = 1 for every value.
TEST(EmProperty, ResponsibilitiesSumToOne) {
    std::mt19937_64 eng(1002);
    std::uniform_real_distribution<double> u(-10.0, 10.0), s(0.1, 5.0), w(0.01, 0.99);
    for (int i = 0; i < 200; ++i) {
        const MixtureParams mp{w(eng), u(eng), u(eng), s(eng), s(eng)};
        for (int j = 0; j < 20; ++j) {
            const double x = 2.0 * u(eng);
            const double p2 = posterior(x, mp), p1 = posterior(x, swap_components(mp));
            EXPECT_GE(p2, 0.0);
            EXPECT_LE(p2, 1.0);
            EXPECT_NEAR(p1 + p2, 1.0, 4 * std::numeric_limits<double>::epsilon());
        }
    }
}

// Property: rescaling the data rescales means and sds and leaves weights,
// responsibilities and q unchanged.
TEST(EmProperty, ScaleEquivariance) {
    std::mt19937_64 eng(1003);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int degenerate = 0;
    for (int i = 0; i < 100; ++i) {
        const double m = 2 + 5 * u(eng), q = 0.2 + 0.6 * u(eng);
        const auto x = two_normals(300, 0.3 + 0.4 * u(eng), m, 1.0, q * m, q, 4000 + i);
        const double lam = std::exp(8 * u(eng) - 4);
        std::vector<double> xs(x);
        for (double& v : xs) v *= lam;
        EmOptions opt;
        opt.seed = 5000 + i;
        MixtureFit a, b;
        try {
            a = em_fit(x, opt);
        } catch (const DegenerateMixture&) {
            // near-unimodal draw: the rescaled data must fail the same way
            EXPECT_THROW(em_fit(xs, opt), DegenerateMixture) << i;
            ++degenerate;
            continue;
        }
        b = em_fit(xs, opt);
        EXPECT_NEAR(b.params.w1, a.params.w1, 1e-8);
        EXPECT_NEAR(b.params.m1 / lam, a.params.m1, 1e-8 * (1 + std::abs(a.params.m1)));
        EXPECT_NEAR(b.params.m2 / lam, a.params.m2, 1e-8 * (1 + std::abs(a.params.m2)));
        EXPECT_NEAR(b.params.s1 / lam, a.params.s1, 1e-8 * a.params.s1);
        EXPECT_NEAR(b.params.s2 / lam, a.params.s2, 1e-8 * a.params.s2);
        for (std::size_t t = 0; t < x.size(); ++t)
            EXPECT_NEAR(b.responsibilities.posterior[t], a.responsibilities.posterior[t], 1e-8);
        EXPECT_NEAR(label_components(b.params, Direction::under).q, label_components(a.params, Direction::under).q, 1e-8);
    }
    EXPECT_LE(degenerate, 5);
}

// Property: pinning em_fit's components reproduces em_fit's weight.
TEST(EmProperty, WeightOnlyFixedPoint) {
    std::mt19937_64 eng(1004);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const auto x = two_normals(250, 0.2 + 0.6 * u(eng), 0.0, 1.0, 3 + 3 * u(eng), 0.5 + u(eng), 6000 + i);
        EmOptions opt;
        opt.seed = 7000 + i;
        opt.tolerance = 1e-15;
        opt.max_iterations = 20000;
        const MixtureFit f = em_fit(x, opt);
        const MixtureParams& mp = f.params;
        const WeightFit w = em_fit_weights_only(x, {mp.m1, mp.s1, mp.m2, mp.s2}, 0.5, 100000);
        EXPECT_NEAR(w.w1, mp.w1, 1e-6) << i;
        double mean_post = 0.0;
        for (double p : w.responsibilities.posterior) mean_post += p;
        EXPECT_NEAR(1.0 - w.w1, mean_post / static_cast<double>(x.size()), 1e-9) << i;
    }
}
