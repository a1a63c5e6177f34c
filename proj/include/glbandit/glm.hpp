#pragma once

#include <string>
#include <string_view>

#include "glbandit/types.hpp"

namespace glbandit {

enum class Link { logistic, poisson, linear };

std::string_view to_string(Link link);
Link link_from_string(std::string_view name);

/// Canonical exponential family with reward support [0, reward_bound_m].
struct GlmFamily {
    Link link = Link::logistic;
    double reward_bound_m = 1.0;
    bool self_concordant = true;
    double noise_sigma = 0.1;  // linear link only
};

/// logistic: m = 1. poisson: `reward_cap` is mandatory. linear: m defaults to 1.
GlmFamily make_family(Link link, double reward_cap = 0.0);
GlmFamily family_from_name(std::string_view name, double reward_cap = 0.0);

/// Admissible-set constants shared by the estimator and the confidence widths.
struct ModelBounds {
    double S = 1.0;
    double c_mu = 1.0;
    double k_mu = 1.0;
    double lambda = 1.0;

    void validate() const;
};

ModelBounds make_bounds(const GlmFamily& family, double S, double lambda);

double mean(const GlmFamily& family, double x);
double mean_derivative(const GlmFamily& family, double x);
double mean_second_derivative(const GlmFamily& family, double x);
double log_partition(const GlmFamily& family, double x);

/// inf of the mean derivative over [-S, S]. Closed forms per link:
/// logistic is symmetric and decreasing in |x| so the infimum sits at S,
/// poisson is increasing so it sits at -S, linear is constant.
double compute_c_mu(const GlmFamily& family, double S);

/// sup of the mean derivative over [-S, S].
double compute_k_mu(const GlmFamily& family, double S);

/// Chord slope (mu(z2) - mu(z1)) / (z2 - z1), i.e. the average of the mean
/// derivative along the segment; mu'(z1) when z1 == z2. Symmetric bit-for-bit.
double alpha_slope(const GlmFamily& family, double z1, double z2);

struct RewardDraw {
    double value = 0.0;
    bool truncated = false;
};

/// Bernoulli for logistic, Poisson(e^x) capped at m for poisson, N(x, sigma) clipped to [0, m] for linear.
RewardDraw sample_reward_detailed(const GlmFamily& family, double x, Rng& rng);

inline double sample_reward(const GlmFamily& family, double x, Rng& rng) {
    return sample_reward_detailed(family, x, rng).value;
}

}  // namespace glbandit
