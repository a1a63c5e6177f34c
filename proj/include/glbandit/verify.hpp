#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glbandit/design.hpp"
#include "glbandit/glm.hpp"

namespace glbandit {

struct VerifyReport {
    std::string check;
    std::size_t instances = 0;
    std::size_t violations = 0;
    double worst_margin = 0.0;  // min over instances of (bound - observed); negative on violation
    bool pass = false;
    // Monte Carlo checks only
    double rate = 0.0;
    double allowed_rate = 0.0;
    std::string note;
};

std::string to_json(const VerifyReport& report);
std::string to_json(const std::vector<VerifyReport>& reports);

/// One weighted self-normalized tail instance: S = sum_s w_s eps_s a_s, H = sum_s w_s^2 sigma_s^2 a_s a_s^T + lambda_last I,
/// bound = sqrt(lambda_last)/(2 m w_last) + (2 m w_last/sqrt(lambda_last)) (log(det(H)^{1/2}/(delta lambda_last^{d/2})) + d log 2).
/// Weights must be positive and nondecreasing; `w_last` is the last weight.
struct TailEvaluation {
    double statistic = 0.0;  // ||S||_{H^-1}
    double bound = 0.0;
};
TailEvaluation weighted_tail(const std::vector<Vector>& actions, const std::vector<double>& noise,
                             const std::vector<double>& variance, const std::vector<double>& weights,
                             double lambda_last, double m, double delta);

struct ConcentrationTrial {
    std::size_t d = 2;
    std::size_t t = 200;             // evaluation round; t - 1 observations
    ForgettingScheme scheme = ForgettingScheme::discount(0.9);
    std::size_t lookback = 0;        // discount: D (0 means all t - 1); window: taken from the scheme
    std::vector<double> custom_weights;  // used when the scheme is `none`; must have t - 1 entries
    double lambda = 1.0;
    double m = 1.0;
    double delta = 0.05;
    std::size_t n_trials = 2000;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Empirical violation rate of the concentration corollary; passes if rate <= delta + 3 sqrt(delta (1 - delta) / n).
VerifyReport mc_concentration(const ConcentrationTrial& trial);

struct GridSpec {
    double lo = -20.0;
    double hi = 20.0;
    double step = 0.01;         // z1 grid
    double partner_step = 0.1;  // z2 grid
    std::size_t random_pairs = 10000;
    std::uint64_t seed = 1;
};

struct SelfConcordanceValues {
    double chord;
    double lower;
    double upper;
    double alt_lower;
};
SelfConcordanceValues self_concordance_values(const GlmFamily& family, double z1, double z2);

VerifyReport check_self_concordance(const GlmFamily& family, const GridSpec& grid = {});

/// G(theta1, theta2) >= (1 + 2S)^-1 H(theta_i) for both schemes and both i.
VerifyReport check_matrix_domination(const GlmFamily& family, double S, std::size_t n_instances,
                                     std::uint64_t seed = 1);

VerifyReport check_determinant_bounds(std::size_t n_instances, std::uint64_t seed = 1);

struct EllipticalSides {
    double lhs;
    double rhs;
};
/// Sum of ||a_t||^2_{V_t^-1} with ridge lambda and its bound, for a discount or window scheme.
EllipticalSides elliptical_sides(const std::vector<Vector>& actions, const ForgettingScheme& scheme, double lambda);

VerifyReport check_elliptical(ForgettingScheme::Kind scheme, std::size_t n_instances, std::uint64_t seed = 1);

/// ||g(theta_hat) - g(theta*)||_{G~^-1} <= sqrt(1 + S) rho + rho^2 / sqrt(lambda) on simulated stationary stretches.
VerifyReport check_deviation_chain(std::size_t n_stretches, std::uint64_t seed = 1);

/// Root of X^2 - A X - B against the bound A + sqrt(B) on random (A, B).
VerifyReport check_deviation_quadratic(std::size_t n_instances, std::uint64_t seed = 1);

/// Suites: lemmas, concentration, deviation, all. `trials` is instances (lemmas) or Monte Carlo trials.
std::vector<VerifyReport> run_suite(const std::string& suite, std::size_t trials, std::uint64_t seed);

}  // namespace glbandit
