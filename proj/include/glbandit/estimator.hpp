#pragma once

#include <cstddef>
#include <optional>

#include "glbandit/design.hpp"
#include "glbandit/glm.hpp"
#include "glbandit/history.hpp"

namespace glbandit {

/// Drops the prefix whose discount weight gamma^age falls below eps_w. Returns the number dropped.
/// eps_w <= 0 keeps everything.
std::size_t truncate_negligible(HistoryBuffer& history, double gamma, double eps_w);

/// Data part of the weighted negative log-likelihood, sum_s w_s (b(a_s^T theta) - r_s a_s^T theta),
/// with its gradient and Hessian. `reward_moment` is sum_s w_s r_s a_s.
struct LikelihoodSums {
    double objective = 0.0;
    Vector gradient;
    Matrix hessian;
    Vector reward_moment;
};

LikelihoodSums likelihood_sums(const HistoryBuffer& history, const GlmFamily& family,
                               const ForgettingScheme& scheme, const Eigen::Ref<const Vector>& theta);

double mle_objective(const HistoryBuffer& history, const GlmFamily& family, const ForgettingScheme& scheme,
                     double lambda, const Eigen::Ref<const Vector>& theta);
/// sum_s w_s (mu(a_s^T theta) - r_s) a_s + lambda theta
Vector mle_gradient(const HistoryBuffer& history, const GlmFamily& family, const ForgettingScheme& scheme,
                    double lambda, const Eigen::Ref<const Vector>& theta);
/// sum_s w_s mu'(a_s^T theta) a_s a_s^T + lambda I
Matrix mle_hessian(const HistoryBuffer& history, const GlmFamily& family, const ForgettingScheme& scheme,
                   double lambda, const Eigen::Ref<const Vector>& theta);

struct NewtonOptions {
    double relative_tolerance = 1e-8;
    int max_iterations = 100;
    int max_halvings = 60;
};

struct MleSolution {
    Vector theta_hat;
    double grad_norm = 0.0;
    double objective = 0.0;
    int newton_iters = 0;
    bool converged = false;
    bool inside_theta = true;  // ||theta_hat|| <= S; diagnostic only, no projection is applied
};

/// Unique minimiser of the regularised weighted negative log-likelihood by damped Newton
/// (halving the step until the objective decreases). Stops when
/// ||grad|| <= tol * max(1, ||sum_s w_s r_s a_s||) or after max_iterations.
/// Throws NumericError when the objective stops being finite.
MleSolution solve_mle(const HistoryBuffer& history, const GlmFamily& family, const ForgettingScheme& scheme,
                      double lambda, double S, const std::optional<Vector>& warm_start = std::nullopt,
                      const NewtonOptions& options = {});

/// Keeps the history and the likelihood sums at the current iterate so that a new round
/// starts from updated sums instead of a fresh sweep. Window schemes keep only the last
/// tau observations; discount schemes truncate weights below eps_w.
class MleTracker {
public:
    MleTracker(const GlmFamily& family, const ForgettingScheme& scheme, double lambda, double S,
               std::size_t dim, double truncation_eps = 1e-12, NewtonOptions options = {});

    /// Appends (a, r), evicts/truncates as the scheme requires and re-solves from the previous
    /// iterate. Returns the action that left the window, if any.
    std::optional<Vector> observe(const Eigen::Ref<const Vector>& a, double reward);

    const MleSolution& solution() const noexcept { return solution_; }
    const HistoryBuffer& history() const noexcept { return history_; }
    const ForgettingScheme& scheme() const noexcept { return scheme_; }
    double lambda() const noexcept { return lambda_; }

private:
    void add_term(const double* a, double reward, double weight);
    void solve();

    GlmFamily family_;
    ForgettingScheme scheme_;
    double lambda_;
    double S_;
    double truncation_eps_;
    NewtonOptions options_;
    HistoryBuffer history_;
    LikelihoodSums sums_;  // at solution_.theta_hat
    MleSolution solution_;
    std::size_t rounds_since_sweep_ = 0;
};

}  // namespace glbandit
