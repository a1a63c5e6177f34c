#include <gtest/gtest.h>

#include <cmath>

#include "glbandit/glm.hpp"
#include "test_util.hpp"

using namespace glbandit;
using glbandit::testing::simpson;

namespace {

const GlmFamily logit = make_family(Link::logistic);
const GlmFamily lin = make_family(Link::linear);
const GlmFamily pois = make_family(Link::poisson, 50.0);

long double sigmoid_ld(long double x) { return 1.0L / (1.0L + std::exp(-x)); }

}  // namespace

TEST(Mean, Examples) {
    EXPECT_DOUBLE_EQ(mean(logit, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(mean(lin, 3.7), 3.7);
    EXPECT_NEAR(mean(logit, 1.0), static_cast<double>(sigmoid_ld(1.0L)), 1e-15);
    EXPECT_NEAR(mean(logit, 1.0), 0.731059, 1e-6);
}

TEST(Mean, MatchesExtendedPrecisionAcrossRange) {
    for (double x = -40.0; x <= 40.0; x += 0.37) {
        const long double s = sigmoid_ld(x);
        EXPECT_NEAR(mean(logit, x), static_cast<double>(s), 1e-15 * std::max(1.0, static_cast<double>(s)));
        EXPECT_NEAR(mean_derivative(logit, x), static_cast<double>(s * (1 - s)), 1e-16);
    }
}

TEST(MeanDerivative, Examples) {
    EXPECT_DOUBLE_EQ(mean_derivative(logit, 0.0), 0.25);
    EXPECT_DOUBLE_EQ(mean_derivative(lin, -5.0), 1.0);
    EXPECT_NEAR(mean_derivative(pois, 2.0), 7.389056, 1e-6);
}

TEST(MeanDerivative, MatchesFiniteDifferences) {
    for (const GlmFamily* f : {&logit, &lin, &pois}) {
        for (double x = -4.0; x <= 4.0; x += 0.5) {
            const double h = 1e-5;
            const double fd = (mean(*f, x + h) - mean(*f, x - h)) / (2 * h);
            EXPECT_NEAR(mean_derivative(*f, x), fd, 1e-8 * std::max(1.0, std::abs(fd)));
            const double fd2 = (mean_derivative(*f, x + h) - mean_derivative(*f, x - h)) / (2 * h);
            EXPECT_NEAR(mean_second_derivative(*f, x), fd2, 1e-7 * std::max(1.0, std::abs(fd2)));
        }
    }
}

TEST(MeanDerivative, SelfConcordanceHoldsOnGrid) {
    for (const GlmFamily* f : {&logit, &pois, &lin})
        for (double x = -30.0; x <= 30.0; x += 0.01)
            EXPECT_LE(std::abs(mean_second_derivative(*f, x)), mean_derivative(*f, x) * (1 + 1e-12));
}

TEST(LogPartition, Examples) {
    EXPECT_DOUBLE_EQ(log_partition(lin, 2.0), 2.0);
    EXPECT_NEAR(log_partition(logit, 0.0), std::log(2.0), 1e-15);
    EXPECT_NEAR(log_partition(logit, 50.0), 50.0, 1e-12);
    EXPECT_NEAR(log_partition(logit, -50.0), std::exp(-50.0), 1e-30);
    EXPECT_TRUE(std::isfinite(log_partition(logit, 800.0)));
}

TEST(LogPartition, DerivativeIsMean) {
    for (const GlmFamily* f : {&logit, &lin, &pois})
        for (double x = -5.0; x <= 5.0; x += 0.25) {
            const double h = 1e-5;
            const double fd = (log_partition(*f, x + h) - log_partition(*f, x - h)) / (2 * h);
            EXPECT_NEAR(fd, mean(*f, x), 1e-8 * std::max(1.0, std::abs(fd)));
        }
}

TEST(CMu, GridMinimisationOracle) {
    const double S = 6.0;
    double best = 1.0;
    const int n = 1000000;
    for (int i = 0; i <= n; ++i) best = std::min(best, mean_derivative(logit, -S + 2 * S * i / n));
    EXPECT_NEAR(compute_c_mu(logit, S), best, 1e-15);
    EXPECT_NEAR(compute_c_mu(logit, S), 2.4665e-3, 1e-7);
    // The c^-1 ~ exp(S) reading of the experiment section: roughly 400.
    EXPECT_NEAR(1.0 / compute_c_mu(logit, S), 405.4, 0.5);
    EXPECT_DOUBLE_EQ(compute_c_mu(lin, 10.0), 1.0);
    EXPECT_NEAR(compute_c_mu(pois, 2.0), 0.135335, 1e-6);
    EXPECT_THROW(compute_c_mu(logit, 0.0), std::invalid_argument);
}

TEST(KMu, Examples) {
    EXPECT_DOUBLE_EQ(compute_k_mu(logit, 3.0), 0.25);
    EXPECT_DOUBLE_EQ(compute_k_mu(lin, 3.0), 1.0);
    EXPECT_NEAR(compute_k_mu(pois, 1.0), 2.718282, 1e-6);
    for (double S : {0.5, 2.0, 6.0}) EXPECT_LE(compute_c_mu(logit, S), compute_k_mu(logit, S));
}

TEST(AlphaSlope, Examples) {
    EXPECT_DOUBLE_EQ(alpha_slope(logit, 0.0, 0.0), 0.25);
    EXPECT_DOUBLE_EQ(alpha_slope(lin, -1.0, 7.0), 1.0);
    const double q = simpson([](double v) { return mean_derivative(logit, 2.0 * v); }, 0.0, 1.0);
    EXPECT_NEAR(alpha_slope(logit, 0.0, 2.0), q, 1e-10);
    EXPECT_NEAR(alpha_slope(logit, 0.0, 2.0), 0.190399, 1e-6);
}

TEST(AlphaSlope, QuadratureOracleOnRandomPairs) {
    Rng rng(11);
    std::uniform_real_distribution<double> u(-15.0, 15.0);
    for (int i = 0; i < 300; ++i) {
        const double z1 = u(rng), z2 = u(rng);
        for (const GlmFamily* f : {&logit, &pois}) {
            const double q = simpson([&](double v) { return mean_derivative(*f, z1 + v * (z2 - z1)); }, 0.0, 1.0, 4000);
            const double a = alpha_slope(*f, z1, z2);
            EXPECT_NEAR(a, q, 1e-9 * std::max(1.0, q));
            EXPECT_EQ(a, alpha_slope(*f, z2, z1));
        }
    }
}

TEST(AlphaSlope, ContinuousAtZeroGap) {
    EXPECT_NEAR(alpha_slope(logit, 1.3, 1.3 + 1e-12), mean_derivative(logit, 1.3), 1e-10);
    EXPECT_NEAR(alpha_slope(pois, -0.4, -0.4 + 1e-12), mean_derivative(pois, -0.4), 1e-10);
}

TEST(SampleReward, Bernoulli) {
    Rng rng(3);
    double ones = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ones += sample_reward(logit, 0.0, rng);
    EXPECT_NEAR(ones / n, 0.5, 0.01);  // 3 sigma ~ 0.0047
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_reward(logit, 50.0, rng), 1.0);
}

TEST(SampleReward, LinearMeanAndSupport) {
    Rng rng(4);
    const int n = 100000;
    double s = 0;
    for (int i = 0; i < n; ++i) {
        const double r = sample_reward(lin, 0.3, rng);
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, 1.0);
        s += r;
    }
    EXPECT_NEAR(s / n, 0.3, 0.005);
}

TEST(SampleReward, ClippedGaussianQuadratureOracle) {
    // E[clip(N(0, 0.1), 0, 1)] = integral of x phi(x) over [0, 1] + P(X > 1).
    const double sigma = lin.noise_sigma;
    const auto phi = [&](double x) { return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2 * M_PI)); };
    const double expected = simpson([&](double x) { return x * phi(x); }, 0.0, 1.0, 20000) +
                            0.5 * std::erfc(1.0 / (sigma * std::sqrt(2.0)));
    Rng rng(5);
    const int n = 200000;
    double s = 0, s2 = 0;
    int truncated = 0;
    for (int i = 0; i < n; ++i) {
        const RewardDraw d = sample_reward_detailed(lin, 0.0, rng);
        s += d.value;
        s2 += d.value * d.value;
        truncated += d.truncated;
    }
    const double m = s / n;
    const double se = std::sqrt((s2 / n - m * m) / n);
    EXPECT_NEAR(m, expected, 4 * se);
    EXPECT_NEAR(static_cast<double>(truncated) / n, 0.5, 0.01);
}

TEST(SampleReward, PoissonCappedAtM) {
    const GlmFamily small = make_family(Link::poisson, 3.0);
    Rng rng(6);
    for (int i = 0; i < 2000; ++i) EXPECT_LE(sample_reward(small, 2.5, rng), 3.0);
}

TEST(SampleReward, Deterministic) {
    for (const GlmFamily* f : {&logit, &lin, &pois}) {
        Rng a(9), b(9);
        for (int i = 0; i < 200; ++i) EXPECT_EQ(sample_reward(*f, 0.7, a), sample_reward(*f, 0.7, b));
    }
}

TEST(Family, Validation) {
    EXPECT_THROW(make_family(Link::poisson), ConfigError);
    EXPECT_THROW(family_from_name("probit"), ConfigError);
    EXPECT_EQ(family_from_name("logistic").link, Link::logistic);
    EXPECT_EQ(make_family(Link::logistic).reward_bound_m, 1.0);
    EXPECT_THROW(make_bounds(logit, -1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(make_bounds(logit, 1.0, 0.0), std::invalid_argument);
    const ModelBounds b = make_bounds(logit, 6.0, 2.0);
    EXPECT_EQ(b.lambda, 2.0);
    EXPECT_EQ(b.k_mu, 0.25);
}
