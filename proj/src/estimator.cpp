#include "glbandit/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace glbandit {

namespace {

struct TermValues {
    double b;
    double mu;
    double dmu;
};

inline TermValues logistic_term(double z) {
    const double e = std::exp(-std::abs(z));
    const double inv = 1.0 / (1.0 + e);
    return {std::max(z, 0.0) + std::log1p(e), z >= 0.0 ? inv : e * inv, e * inv * inv};
}

inline TermValues poisson_term(double z) {
    const double ez = std::exp(z);
    return {ez, ez, ez};
}

inline TermValues linear_term(double z) { return {0.5 * z * z, z, 1.0}; }

inline TermValues term_for(Link link, double z) {
    switch (link) {
        case Link::logistic: return logistic_term(z);
        case Link::poisson: return poisson_term(z);
        case Link::linear: return linear_term(z);
    }
    return {0.0, 0.0, 0.0};
}

// Index range and weight recursion for a scheme applied to `n` stored entries.
struct WeightPlan {
    std::size_t first;
    double decay;  // weight multiplier per step back in time
};

WeightPlan plan_for(const ForgettingScheme& scheme, std::size_t n) {
    switch (scheme.kind) {
        case ForgettingScheme::Kind::discount: return {0, scheme.gamma};
        case ForgettingScheme::Kind::window: return {n > scheme.tau ? n - scheme.tau : 0, 1.0};
        case ForgettingScheme::Kind::none: return {0, 1.0};
    }
    return {0, 1.0};
}

template <int D, TermValues (*Term)(double)>
void sweep(const HistoryBuffer& h, std::size_t dim_runtime, const WeightPlan& plan, const double* theta,
           LikelihoodSums& out) {
    const std::size_t d = D > 0 ? static_cast<std::size_t>(D) : dim_runtime;
    double obj = 0.0;
    double grad[8] = {};
    double moment[8] = {};
    double hess[64] = {};
    std::vector<double> grad_dyn, moment_dyn, hess_dyn;
    double* g = grad;
    double* mo = moment;
    double* hs = hess;
    if (d > 8) {
        grad_dyn.assign(d, 0.0);
        moment_dyn.assign(d, 0.0);
        hess_dyn.assign(d * d, 0.0);
        g = grad_dyn.data();
        mo = moment_dyn.data();
        hs = hess_dyn.data();
    }
    const std::size_t n = h.size();
    double w = 1.0;
    for (std::size_t idx = n; idx-- > plan.first;) {
        const double* a = h.action_data(idx);
        const double r = h.reward(idx);
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) z += a[j] * theta[j];
        const TermValues tv = Term(z);
        obj += w * (tv.b - r * z);
        const double gc = w * (tv.mu - r);
        const double hc = w * tv.dmu;
        const double mc = w * r;
        for (std::size_t j = 0; j < d; ++j) {
            g[j] += gc * a[j];
            mo[j] += mc * a[j];
            const double haj = hc * a[j];
            for (std::size_t k = j; k < d; ++k) hs[j * d + k] += haj * a[k];
        }
        w *= plan.decay;
    }
    const auto di = static_cast<Eigen::Index>(d);
    out.objective = obj;
    out.gradient = Eigen::Map<const Vector>(g, di);
    out.reward_moment = Eigen::Map<const Vector>(mo, di);
    out.hessian.resize(di, di);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j; k < d; ++k) {
            out.hessian(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = hs[j * d + k];
            out.hessian(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = hs[j * d + k];
        }
}

template <TermValues (*Term)(double)>
void sweep_dispatch(const HistoryBuffer& h, const WeightPlan& plan, const double* theta, LikelihoodSums& out) {
    switch (h.dim()) {
        case 1: sweep<1, Term>(h, 1, plan, theta, out); break;
        case 2: sweep<2, Term>(h, 2, plan, theta, out); break;
        case 3: sweep<3, Term>(h, 3, plan, theta, out); break;
        case 4: sweep<4, Term>(h, 4, plan, theta, out); break;
        default: sweep<0, Term>(h, h.dim(), plan, theta, out); break;
    }
}

struct Totals {
    double objective;
    Vector gradient;
};

Totals totals(const LikelihoodSums& sums, const Vector& theta, double lambda) {
    return {sums.objective + 0.5 * lambda * theta.squaredNorm(), sums.gradient + lambda * theta};
}

// Damped Newton from (theta, sums); both are advanced to the final iterate.
MleSolution newton(const HistoryBuffer& history, const GlmFamily& family, const ForgettingScheme& scheme,
                   double lambda, double S, Vector& theta, LikelihoodSums& sums, const NewtonOptions& options) {
    const double tol = options.relative_tolerance * std::max(1.0, sums.reward_moment.norm());
    Totals cur = totals(sums, theta, lambda);
    if (!std::isfinite(cur.objective)) throw NumericError("solve_mle: non-finite objective", theta);

    MleSolution sol;
    for (;;) {
        const double gnorm = cur.gradient.norm();
        if (gnorm <= tol) {
            sol.converged = true;
            break;
        }
        if (sol.newton_iters >= options.max_iterations) break;
        Matrix hess = sums.hessian;
        hess.diagonal().array() += lambda;
        const Vector step = hess.llt().solve(cur.gradient);

        double scale = 1.0;
        bool accepted = false;
        Vector trial;
        LikelihoodSums trial_sums;
        Totals trial_tot;
        for (int halving = 0; halving <= options.max_halvings; ++halving, scale *= 0.5) {
            trial = theta - scale * step;
            trial_sums = likelihood_sums(history, family, scheme, trial);
            trial_tot = totals(trial_sums, trial, lambda);
            if (!std::isfinite(trial_tot.objective)) {
                if (halving == options.max_halvings) throw NumericError("solve_mle: non-finite objective", trial);
                continue;
            }
            const bool decreased = trial_tot.objective < cur.objective;
            // Near the optimum objective differences drop below rounding; fall back to the gradient.
            const bool flat = trial_tot.objective <= cur.objective + 1e-12 * (1.0 + std::abs(cur.objective)) &&
                              trial_tot.gradient.norm() < gnorm;
            if (decreased || flat) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        theta = std::move(trial);
        sums = std::move(trial_sums);
        cur = std::move(trial_tot);
        ++sol.newton_iters;
    }
    sol.theta_hat = theta;
    sol.grad_norm = cur.gradient.norm();
    sol.objective = cur.objective;
    sol.inside_theta = theta.norm() <= S;
    return sol;
}

// Number of most recent entries whose weight gamma^age is at least eps_w.
std::size_t retained_count(double gamma, double eps_w) {
    if (eps_w > 1.0) return 0;
    auto k = static_cast<std::size_t>(std::floor(std::log(eps_w) / std::log(gamma)));
    while (k > 0 && std::pow(gamma, static_cast<double>(k)) < eps_w) --k;
    while (std::pow(gamma, static_cast<double>(k + 1)) >= eps_w) ++k;
    return k + 1;
}

}  // namespace

std::size_t truncate_negligible(HistoryBuffer& history, double gamma, double eps_w) {
    if (!(eps_w > 0.0) || history.empty()) return 0;
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("truncate_negligible: gamma must lie in (0, 1)");
    const std::size_t keep = retained_count(gamma, eps_w);
    if (history.size() <= keep) return 0;
    const std::size_t drop = history.size() - keep;
    history.drop_front(drop);
    return drop;
}

LikelihoodSums likelihood_sums(const HistoryBuffer& history, const GlmFamily& family,
                               const ForgettingScheme& scheme, const Eigen::Ref<const Vector>& theta) {
    if (static_cast<std::size_t>(theta.size()) != history.dim())
        throw std::invalid_argument("likelihood_sums: dimension mismatch");
    const Vector th = theta;
    const WeightPlan plan = plan_for(scheme, history.size());
    LikelihoodSums out;
    switch (family.link) {
        case Link::logistic: sweep_dispatch<logistic_term>(history, plan, th.data(), out); break;
        case Link::poisson: sweep_dispatch<poisson_term>(history, plan, th.data(), out); break;
        case Link::linear: sweep_dispatch<linear_term>(history, plan, th.data(), out); break;
    }
    return out;
}

double mle_objective(const HistoryBuffer& history, const GlmFamily& family, const ForgettingScheme& scheme,
                     double lambda, const Eigen::Ref<const Vector>& theta) {
    return likelihood_sums(history, family, scheme, theta).objective + 0.5 * lambda * theta.squaredNorm();
}

Vector mle_gradient(const HistoryBuffer& history, const GlmFamily& family, const ForgettingScheme& scheme,
                    double lambda, const Eigen::Ref<const Vector>& theta) {
    return likelihood_sums(history, family, scheme, theta).gradient + lambda * theta;
}

Matrix mle_hessian(const HistoryBuffer& history, const GlmFamily& family, const ForgettingScheme& scheme,
                   double lambda, const Eigen::Ref<const Vector>& theta) {
    Matrix h = likelihood_sums(history, family, scheme, theta).hessian;
    h.diagonal().array() += lambda;
    return h;
}

MleSolution solve_mle(const HistoryBuffer& history, const GlmFamily& family, const ForgettingScheme& scheme,
                      double lambda, double S, const std::optional<Vector>& warm_start,
                      const NewtonOptions& options) {
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_mle: lambda must be positive");
    scheme.validate();
    const auto d = static_cast<Eigen::Index>(history.dim());
    Vector theta = warm_start ? *warm_start : Vector::Zero(d);
    if (theta.size() != d) throw std::invalid_argument("solve_mle: warm start dimension mismatch");
    LikelihoodSums sums = likelihood_sums(history, family, scheme, theta);
    return newton(history, family, scheme, lambda, S, theta, sums, options);
}

MleTracker::MleTracker(const GlmFamily& family, const ForgettingScheme& scheme, double lambda, double S,
                       std::size_t dim, double truncation_eps, NewtonOptions options)
    : family_(family),
      scheme_(scheme),
      lambda_(lambda),
      S_(S),
      truncation_eps_(truncation_eps),
      options_(options),
      history_(dim, family.reward_bound_m) {
    if (!(lambda > 0.0)) throw std::invalid_argument("MleTracker: lambda must be positive");
    scheme.validate();
    const auto d = static_cast<Eigen::Index>(dim);
    solution_.theta_hat = Vector::Zero(d);
    solution_.inside_theta = true;
    solution_.converged = true;
    sums_.gradient = Vector::Zero(d);
    sums_.reward_moment = Vector::Zero(d);
    sums_.hessian = Matrix::Zero(d, d);
}

void MleTracker::add_term(const double* a, double reward, double weight) {
    const auto d = static_cast<Eigen::Index>(history_.dim());
    const Eigen::Map<const Vector> av(a, d);
    const double z = av.dot(solution_.theta_hat);
    const TermValues tv = term_for(family_.link, z);
    sums_.objective += weight * (tv.b - reward * z);
    sums_.gradient.noalias() += (weight * (tv.mu - reward)) * av;
    sums_.reward_moment.noalias() += (weight * reward) * av;
    sums_.hessian.noalias() += (weight * tv.dmu) * (av * av.transpose());
}

std::optional<Vector> MleTracker::observe(const Eigen::Ref<const Vector>& a, double reward) {
    history_.push(a, reward);
    std::optional<Vector> evicted;
    switch (scheme_.kind) {
        case ForgettingScheme::Kind::discount: {
            const double g = scheme_.gamma;
            sums_.objective *= g;
            sums_.gradient *= g;
            sums_.reward_moment *= g;
            sums_.hessian *= g;
            add_term(history_.action_data(history_.size() - 1), reward, 1.0);
            if (truncation_eps_ > 0.0) {
                const std::size_t n = history_.size();
                const std::size_t keep = retained_count(g, truncation_eps_);
                const std::size_t drop = n > keep ? n - keep : 0;
                for (std::size_t i = 0; i < drop; ++i)
                    add_term(history_.action_data(i), history_.reward(i),
                             -std::pow(g, static_cast<double>(n - 1 - i)));
                history_.drop_front(drop);
            }
            break;
        }
        case ForgettingScheme::Kind::window:
            add_term(history_.action_data(history_.size() - 1), reward, 1.0);
            if (history_.size() > scheme_.tau) {
                evicted = Vector(history_.action(0));
                add_term(history_.action_data(0), history_.reward(0), -1.0);
                history_.drop_front(1);
            }
            break;
        case ForgettingScheme::Kind::none:
            add_term(history_.action_data(history_.size() - 1), reward, 1.0);
            break;
    }
    if (++rounds_since_sweep_ >= 64) {
        sums_ = likelihood_sums(history_, family_, scheme_, solution_.theta_hat);
        rounds_since_sweep_ = 0;
    }
    solve();
    return evicted;
}

void MleTracker::solve() {
    Vector theta = solution_.theta_hat;
    solution_ = newton(history_, family_, scheme_, lambda_, S_, theta, sums_, options_);
    // an accepted step leaves sums_ from a full sweep
    if (solution_.newton_iters > 0) rounds_since_sweep_ = 0;
}

}  // namespace glbandit
