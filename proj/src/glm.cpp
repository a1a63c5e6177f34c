#include "glbandit/glm.hpp"

#include <algorithm>
#include <cmath>

namespace glbandit {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

std::string_view to_string(Link link) {
    switch (link) {
        case Link::logistic: return "logistic";
        case Link::poisson: return "poisson";
        case Link::linear: return "linear";
    }
    return "logistic";
}

Link link_from_string(std::string_view name) {
    if (name == "logistic") return Link::logistic;
    if (name == "poisson") return Link::poisson;
    if (name == "linear") return Link::linear;
    throw ConfigError("family", "unknown family '" + std::string(name) +
                                    "' (expected logistic | poisson | linear)");
}

GlmFamily make_family(Link link, double reward_cap) {
    GlmFamily f;
    f.link = link;
    switch (link) {
        case Link::logistic:
            f.reward_bound_m = 1.0;
            f.self_concordant = true;
            break;
        case Link::poisson:
            if (!(reward_cap > 0.0) || !std::isfinite(reward_cap))
                throw ConfigError("reward_cap", "poisson family needs a positive finite reward_cap");
            f.reward_bound_m = reward_cap;
            f.self_concordant = true;
            break;
        case Link::linear:
            f.reward_bound_m = reward_cap > 0.0 ? reward_cap : 1.0;
            // mu'' = 0, so |mu''| <= mu' holds trivially.
            f.self_concordant = true;
            break;
    }
    return f;
}

GlmFamily family_from_name(std::string_view name, double reward_cap) {
    return make_family(link_from_string(name), reward_cap);
}

void ModelBounds::validate() const {
    if (!(S > 0.0)) throw std::invalid_argument("ModelBounds: S must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("ModelBounds: lambda must be positive");
    if (!(c_mu > 0.0) || !(c_mu <= k_mu))
        throw std::invalid_argument("ModelBounds: need 0 < c_mu <= k_mu");
}

ModelBounds make_bounds(const GlmFamily& family, double S, double lambda) {
    ModelBounds b;
    b.S = S;
    b.lambda = lambda;
    b.c_mu = compute_c_mu(family, S);
    b.k_mu = compute_k_mu(family, S);
    b.validate();
    return b;
}

double mean(const GlmFamily& family, double x) {
    switch (family.link) {
        case Link::logistic: return sigmoid(x);
        case Link::poisson: return std::exp(x);
        case Link::linear: return x;
    }
    return 0.0;
}

double mean_derivative(const GlmFamily& family, double x) {
    switch (family.link) {
        case Link::logistic: return sigmoid(x) * sigmoid(-x);
        case Link::poisson: return std::exp(x);
        case Link::linear: return 1.0;
    }
    return 0.0;
}

double mean_second_derivative(const GlmFamily& family, double x) {
    switch (family.link) {
        case Link::logistic: return sigmoid(x) * sigmoid(-x) * (sigmoid(-x) - sigmoid(x));
        case Link::poisson: return std::exp(x);
        case Link::linear: return 0.0;
    }
    return 0.0;
}

double log_partition(const GlmFamily& family, double x) {
    switch (family.link) {
        case Link::logistic: return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
        case Link::poisson: return std::exp(x);
        case Link::linear: return 0.5 * x * x;
    }
    return 0.0;
}

double compute_c_mu(const GlmFamily& family, double S) {
    if (!(S > 0.0)) throw std::invalid_argument("compute_c_mu: S must be positive");
    switch (family.link) {
        case Link::logistic: return mean_derivative(family, S);
        case Link::poisson: return std::exp(-S);
        case Link::linear: return 1.0;
    }
    return 1.0;
}

double compute_k_mu(const GlmFamily& family, double S) {
    if (!(S > 0.0)) throw std::invalid_argument("compute_k_mu: S must be positive");
    switch (family.link) {
        case Link::logistic: return 0.25;
        case Link::poisson: return std::exp(S);
        case Link::linear: return 1.0;
    }
    return 1.0;
}

double alpha_slope(const GlmFamily& family, double z1, double z2) {
    const double lo = std::min(z1, z2);
    const double hi = std::max(z1, z2);
    const double gap = hi - lo;
    if (gap == 0.0) return mean_derivative(family, lo);
    switch (family.link) {
        case Link::logistic:
            // sigma(hi) - sigma(lo) = sigma(lo) * sigma(-hi) * expm1(hi - lo), free of cancellation.
            if (gap < 30.0) return sigmoid(lo) * sigmoid(-hi) * std::expm1(gap) / gap;
            return (sigmoid(hi) - sigmoid(lo)) / gap;
        case Link::poisson:
            return std::exp(lo) * std::expm1(gap) / gap;
        case Link::linear:
            return 1.0;
    }
    return 0.0;
}

RewardDraw sample_reward_detailed(const GlmFamily& family, double x, Rng& rng) {
    const double m = family.reward_bound_m;
    switch (family.link) {
        case Link::logistic: {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            return {u(rng) < sigmoid(x) ? 1.0 : 0.0, false};
        }
        case Link::poisson: {
            std::poisson_distribution<long long> pois(std::exp(x));
            const double k = static_cast<double>(pois(rng));
            if (k > m) return {m, true};
            return {k, false};
        }
        case Link::linear: {
            std::normal_distribution<double> noise(x, family.noise_sigma);
            const double raw = noise(rng);
            return {std::clamp(raw, 0.0, m), raw < 0.0 || raw > m};
        }
    }
    return {};
}

}  // namespace glbandit
