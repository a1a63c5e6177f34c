#pragma once

#include <cstddef>

#include "glbandit/design.hpp"
#include "glbandit/glm.hpp"

namespace glbandit {

struct ConfidenceParams {
    double delta = 0.01;
    std::size_t T = 1;
    std::size_t d = 1;
    double lambda = 1.0;
    double m = 1.0;
    double k_mu = 1.0;
    double c_mu = 1.0;
    double S = 1.0;
    ForgettingScheme scheme;
    double bonus_scale = 1.0;

    void validate() const;
};

ConfidenceParams make_confidence(const GlmFamily& family, const ModelBounds& bounds, std::size_t T, std::size_t d,
                                 double delta, const ForgettingScheme& scheme, double bonus_scale = 1.0);

/// Radius of the self-normalized concentration event.
/// discount: uses the horizon form with (1 - T^-2); window: min(t, tau) samples; none: t samples.
double rho(const ConfidenceParams& p, std::size_t t);

/// S plus the non-stationarity bias (discount only).
double s_bar(const ConfidenceParams& p);

/// k sqrt(lambda) (1 + sbar + sqrt((1 + sbar)/lambda) rho + rho^2/lambda)^{3/2}
double beta_formula(double k_mu, double lambda, double sbar, double rho_value);

double beta(const ConfidenceParams& p, std::size_t t);

/// k sqrt(1 + 2S) (sqrt(lambda) S + rho); valid when ||theta_hat|| <= S.
double beta_refined(const ConfidenceParams& p, std::size_t t);

/// bonus_scale * beta_value / sqrt(c_mu) * ||a||_{V^-1}
double bonus(const ConfidenceParams& p, double beta_value, const DesignState& design,
             const Eigen::Ref<const Vector>& a);

/// Nonnegative root of X^2 - A X - B = 0.
double solve_deviation_quadratic(double A, double B);

}  // namespace glbandit
