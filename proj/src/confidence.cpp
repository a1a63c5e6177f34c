#include "glbandit/confidence.hpp"

#include <algorithm>
#include <cmath>

namespace glbandit {

void ConfidenceParams::validate() const {
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta", "must lie in (0, 1]");
    if (T < 1) throw ConfigError("horizon", "must be at least 1");
    if (d < 1) throw ConfigError("dim", "must be at least 1");
    if (!(lambda > 0.0)) throw ConfigError("lambda", "must be positive");
    if (!(m > 0.0)) throw ConfigError("reward_bound", "must be positive");
    if (!(k_mu > 0.0) || !(c_mu > 0.0)) throw ConfigError("family", "mean-derivative bounds must be positive");
    if (!(S > 0.0)) throw ConfigError("S", "must be positive");
    if (!(bonus_scale > 0.0)) throw ConfigError("bonus_scale", "must be positive");
    scheme.validate();
}

ConfidenceParams make_confidence(const GlmFamily& family, const ModelBounds& bounds, std::size_t T, std::size_t d,
                                 double delta, const ForgettingScheme& scheme, double bonus_scale) {
    ConfidenceParams p;
    p.delta = delta;
    p.T = T;
    p.d = d;
    p.lambda = bounds.lambda;
    p.m = family.reward_bound_m;
    p.k_mu = bounds.k_mu;
    p.c_mu = bounds.c_mu;
    p.S = bounds.S;
    p.scheme = scheme;
    p.bonus_scale = bonus_scale;
    p.validate();
    return p;
}

double rho(const ConfidenceParams& p, std::size_t t) {
    if (t < 1) throw std::invalid_argument("rho: t must be at least 1");
    const double sl = std::sqrt(p.lambda);
    const double d = static_cast<double>(p.d);
    const double T = static_cast<double>(p.T);
    const double head = sl / (2.0 * p.m) + (2.0 * p.m / sl) * std::log(T / p.delta) +
                        (2.0 * p.m / sl) * d * std::log(2.0);
    double samples = 0.0;
    switch (p.scheme.kind) {
        case ForgettingScheme::Kind::discount: {
            const double g = p.scheme.gamma;
            if (!(g < 1.0)) throw ConfigError("gamma", "discount factor must be below 1");
            samples = (1.0 - 1.0 / (T * T)) / (1.0 - g * g);
            break;
        }
        case ForgettingScheme::Kind::window:
            samples = static_cast<double>(std::min(t, p.scheme.tau));
            break;
        case ForgettingScheme::Kind::none:
            samples = static_cast<double>(t);
            break;
    }
    return head + (d * p.m / sl) * std::log1p(p.k_mu * samples / (d * p.lambda));
}

double s_bar(const ConfidenceParams& p) {
    if (p.scheme.kind != ForgettingScheme::Kind::discount) return p.S;
    const double g = p.scheme.gamma;
    if (!(g < 1.0)) throw ConfigError("gamma", "discount factor must be below 1");
    return p.S + (2.0 * p.S * p.k_mu + p.m) / (static_cast<double>(p.T) * p.lambda * (1.0 - g));
}

double beta_formula(double k_mu, double lambda, double sbar, double rho_value) {
    const double inner = 1.0 + sbar + std::sqrt((1.0 + sbar) / lambda) * rho_value + rho_value * rho_value / lambda;
    return k_mu * std::sqrt(lambda) * std::pow(inner, 1.5);
}

double beta(const ConfidenceParams& p, std::size_t t) { return beta_formula(p.k_mu, p.lambda, s_bar(p), rho(p, t)); }

double beta_refined(const ConfidenceParams& p, std::size_t t) {
    return p.k_mu * std::sqrt(1.0 + 2.0 * p.S) * (std::sqrt(p.lambda) * p.S + rho(p, t));
}

double bonus(const ConfidenceParams& p, double beta_value, const DesignState& design,
             const Eigen::Ref<const Vector>& a) {
    return p.bonus_scale * (beta_value / std::sqrt(p.c_mu)) * design.inv_norm(a);
}

double solve_deviation_quadratic(double A, double B) {
    if (!(A >= 0.0) || !(B >= 0.0)) throw std::invalid_argument("solve_deviation_quadratic: A, B must be nonnegative");
    return 0.5 * (A + std::sqrt(A * A + 4.0 * B));
}

}  // namespace glbandit
