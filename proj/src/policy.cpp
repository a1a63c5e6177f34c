#include "glbandit/policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace glbandit {

namespace {

constexpr std::array<std::pair<PolicyKind, std::string_view>, 8> kKindNames{{
    {PolicyKind::DGlmUcb, "DGlmUcb"},
    {PolicyKind::SwGlmUcb, "SwGlmUcb"},
    {PolicyKind::LogUcb1Like, "LogUcb1Like"},
    {PolicyKind::GlmUcbLike, "GlmUcbLike"},
    {PolicyKind::DGlucbLike, "DGlucbLike"},
    {PolicyKind::KArmSwUcb, "KArmSwUcb"},
    {PolicyKind::Random, "Random"},
    {PolicyKind::OracleGreedy, "OracleGreedy"},
}};

constexpr std::size_t kWindowRebuildPeriod = 1024;

bool uses_sqrt_scaling(PolicyKind kind) {
    return kind == PolicyKind::DGlmUcb || kind == PolicyKind::SwGlmUcb || kind == PolicyKind::LogUcb1Like;
}

bool has_design(PolicyKind kind) { return uses_sqrt_scaling(kind) || kind == PolicyKind::GlmUcbLike || kind == PolicyKind::DGlucbLike; }

Vector solve_design(const DesignState& design, const Vector& r) {
    const auto L = design.cholesky_factor().triangularView<Eigen::Lower>();
    Vector y = L.solve(r);
    return design.cholesky_factor().transpose().triangularView<Eigen::Upper>().solve(y);
}

struct ProjectionObjective {
    const HistoryBuffer& history;
    const std::vector<double>& weights;
    const GlmFamily& family;
    const DesignState& design;
    Vector g0;

    Vector g(const Vector& theta) const {
        Vector out = Vector::Zero(theta.size());
        for (std::size_t i = 0; i < history.size(); ++i) {
            if (weights[i] == 0.0) continue;
            const auto a = history.action(i);
            out.noalias() += (weights[i] * mean(family, a.dot(theta))) * a;
        }
        return out;
    }

    // value and gradient of ||g(theta) - g0||^2_{V^-1}
    double eval(const Vector& theta, Vector* grad) const {
        const Vector r = g(theta) - g0;
        const Vector vr = solve_design(design, r);
        if (grad) {
            Vector jg = Vector::Zero(theta.size());
            for (std::size_t i = 0; i < history.size(); ++i) {
                if (weights[i] == 0.0) continue;
                const auto a = history.action(i);
                jg.noalias() += (weights[i] * mean_derivative(family, a.dot(theta)) * a.dot(vr)) * a;
            }
            *grad = 2.0 * jg;
        }
        return r.dot(vr);
    }
};

Vector ball_project(const Vector& theta, double S) {
    const double n = theta.norm();
    return n > S ? Vector(theta * (S / n)) : theta;
}

Vector projected_gradient(const ProjectionObjective& obj, Vector theta, double S, double* value) {
    Vector grad;
    double f = obj.eval(theta, &grad);
    double step = 1.0;
    for (int iter = 0; iter < 2000; ++iter) {
        bool moved = false;
        Vector cand;
        double fc = 0.0;
        while (step > 1e-30) {
            cand = ball_project(theta - step * grad, S);
            fc = obj.eval(cand, nullptr);
            if (fc <= f - (cand - theta).squaredNorm() / (2.0 * step)) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        const double delta = (cand - theta).norm();
        theta = std::move(cand);
        f = obj.eval(theta, &grad);
        step *= 2.0;
        if (delta <= 1e-13 * (1.0 + theta.norm())) break;
    }
    *value = f;
    return theta;
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "unknown";
}

PolicyKind policy_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kKindNames)
        if (n == name) return k;
    throw ConfigError("kind", "unknown policy kind '" + std::string(name) + "'");
}

ForgettingScheme::Kind required_scheme(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::DGlmUcb:
        case PolicyKind::DGlucbLike: return ForgettingScheme::Kind::discount;
        case PolicyKind::SwGlmUcb:
        case PolicyKind::KArmSwUcb: return ForgettingScheme::Kind::window;
        default: return ForgettingScheme::Kind::none;
    }
}

std::vector<double> scheme_weights(const HistoryBuffer& history, const ForgettingScheme& scheme) {
    const std::size_t n = history.size();
    std::vector<double> w(n, 1.0);
    if (scheme.kind == ForgettingScheme::Kind::discount) {
        double g = 1.0;
        for (std::size_t i = n; i-- > 0;) {
            w[i] = g;
            g *= scheme.gamma;
        }
    } else if (scheme.kind == ForgettingScheme::Kind::window && n > scheme.tau) {
        std::fill(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n - scheme.tau), 0.0);
    }
    return w;
}

Vector project_to_theta(const HistoryBuffer& history, const std::vector<double>& weights, const GlmFamily& family,
                        const DesignState& design, const Vector& theta_hat, double S, Rng& rng, int starts) {
    const double norm = theta_hat.norm();
    if (norm <= S) return theta_hat;
    if (weights.size() != history.size()) throw std::invalid_argument("project_to_theta: weight count mismatch");
    ProjectionObjective obj{history, weights, family, design, Vector()};
    obj.g0 = obj.g(theta_hat);

    const auto d = theta_hat.size();
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    Vector best;
    double best_value = std::numeric_limits<double>::infinity();
    for (int s = 0; s < std::max(starts, 1); ++s) {
        Vector start;
        if (s == 0) {
            start = theta_hat * (S / norm);
        } else {
            start.resize(d);
            for (Eigen::Index j = 0; j < d; ++j) start(j) = gauss(rng);
            const double r = S * std::pow(unif(rng), 1.0 / static_cast<double>(d));
            const double sn = start.norm();
            start = sn > 0.0 ? Vector(start * (r / sn)) : Vector::Zero(d);
        }
        double value = 0.0;
        Vector sol = projected_gradient(obj, std::move(start), S, &value);
        if (value < best_value) {
            best_value = value;
            best = std::move(sol);
        }
    }
    return best;
}

Policy::Policy(const PolicyConfig& cfg, const GlmFamily& family, const ModelBounds& bounds,
               const ConfidenceParams& conf, std::uint64_t seed)
    : cfg_(cfg), family_(family), bounds_(bounds), conf_(conf), rng_(make_stream(seed, 0x706f6c))
{
    bounds_.validate();
    conf_.validate();
    if (cfg.kind != PolicyKind::Random && cfg.kind != PolicyKind::OracleGreedy &&
        conf_.scheme.kind != required_scheme(cfg.kind))
        throw ConfigError("policies." + cfg_.name() + ".scheme",
                          std::string(to_string(cfg.kind)) + " requires a " +
                              ForgettingScheme{required_scheme(cfg.kind), 0.5, 1}.describe() + " scheme");
    if (has_design(cfg.kind)) {
        tracker_.emplace(family_, conf_.scheme, bounds_.lambda, bounds_.S, conf_.d);
        design_.emplace(conf_.d, bounds_.lambda / bounds_.c_mu);
    }
    if (cfg.kind == PolicyKind::KArmSwUcb && !(cfg.xi > 0.0 && cfg.karm_B > 0.0))
        throw ConfigError("policies." + cfg_.name(), "xi and B must be positive");
}

Vector Policy::theta_hat() const {
    return tracker_ ? tracker_->solution().theta_hat : Vector::Zero(static_cast<Eigen::Index>(conf_.d));
}

std::size_t Policy::select_action(std::span<const Vector> actions) {
    if (actions.empty()) throw std::invalid_argument("select_action: empty action set");
    for (const auto& a : actions)
        if (static_cast<std::size_t>(a.size()) != conf_.d) throw std::invalid_argument("select_action: dimension mismatch");
    last_ = Selection{};
    switch (cfg_.kind) {
        case PolicyKind::Random: {
            std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
            last_.index = pick(rng_);
            return last_.index;
        }
        case PolicyKind::OracleGreedy: {
            if (!theta_star_) throw std::logic_error("OracleGreedy: theta_star was not injected");
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < actions.size(); ++i) {
                const double v = mean(family_, actions[i].dot(*theta_star_));
                if (v > best) {
                    best = v;
                    last_.index = i;
                }
            }
            return last_.index;
        }
        case PolicyKind::KArmSwUcb: return select_karm(actions);
        default: return select_glb(actions);
    }
}

std::size_t Policy::select_glb(std::span<const Vector> actions) {
    const MleSolution& sol = tracker_->solution();
    const std::size_t round = t_ + 1;
    last_.mle_norm = sol.theta_hat.norm();
    last_.inside_theta = sol.inside_theta;

    double coef = 0.0;  // bonus = coef * ||a||_{V^-1}
    if (uses_sqrt_scaling(cfg_.kind)) {
        last_.beta = beta(conf_, round);
        last_.beta_refined = beta_refined(conf_, round);
        last_.used_refined = cfg_.refined_bonus && sol.inside_theta && last_.beta_refined < last_.beta;
        coef = (last_.used_refined ? last_.beta_refined : last_.beta) / std::sqrt(conf_.c_mu);
    } else {
        // c_mu^-1 scaling: k/c * rho
        const double r = rho(conf_, round);
        last_.beta = conf_.k_mu * r / std::sqrt(conf_.c_mu);
        coef = conf_.k_mu * r / conf_.c_mu;
    }
    coef *= conf_.bonus_scale;

    const Vector theta = (cfg_.projection && !sol.inside_theta) ? project_to_theta() : sol.theta_hat;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const double b = coef * design_->inv_norm(actions[i]);
        const double v = mean(family_, actions[i].dot(theta)) + b;
        if (v > best) {
            best = v;
            last_.index = i;
            last_.bonus = b;
        }
    }
    return last_.index;
}

double Policy::karm_index(std::size_t arm) const {
    if (arm >= karm_counts_.size()) throw std::out_of_range("karm_index: arm out of range");
    const std::size_t n = karm_counts_[arm];
    if (n == 0) return std::numeric_limits<double>::infinity();
    const double horizon = static_cast<double>(std::min(t_ + 1, conf_.scheme.tau));
    const double nn = static_cast<double>(n);
    return karm_sums_[arm] / nn + cfg_.karm_B * std::sqrt(cfg_.xi * std::log(horizon) / nn);
}

std::size_t Policy::select_karm(std::span<const Vector> actions) {
    if (karm_counts_.empty()) {
        karm_counts_.assign(actions.size(), 0);
        karm_sums_.assign(actions.size(), 0.0);
    } else if (karm_counts_.size() != actions.size()) {
        throw std::invalid_argument("KArmSwUcb: the arm set must stay fixed across rounds");
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const double v = karm_index(i);
        if (v > best) {
            best = v;
            last_.index = i;
        }
    }
    return last_.index;
}

void Policy::observe(const Eigen::Ref<const Vector>& a, double reward) {
    if (!(reward >= 0.0 && reward <= family_.reward_bound_m))
        throw std::invalid_argument("observe: reward outside [0, m]");
    if (cfg_.kind == PolicyKind::KArmSwUcb) {
        if (karm_counts_.empty()) throw std::logic_error("KArmSwUcb: observe before select_action");
        const std::size_t arm = last_.index;
        karm_window_.emplace_back(arm, reward);
        ++karm_counts_[arm];
        karm_sums_[arm] += reward;
        if (karm_window_.size() > conf_.scheme.tau) {
            const auto [old_arm, old_reward] = karm_window_.front();
            karm_window_.pop_front();
            --karm_counts_[old_arm];
            karm_sums_[old_arm] -= old_reward;
            // keep exact zeros so an emptied arm's mean never carries rounding residue
            if (karm_counts_[old_arm] == 0) karm_sums_[old_arm] = 0.0;
        }
    } else if (tracker_) {
        const std::optional<Vector> evicted = tracker_->observe(a, reward);
        design_->update(a, conf_.scheme, evicted ? &*evicted : nullptr);
        if (conf_.scheme.kind == ForgettingScheme::Kind::window && (t_ + 1) % kWindowRebuildPeriod == 0) {
            DesignState fresh = rebuild_direct(tracker_->history(), conf_.scheme, design_->ridge());
            design_->assign(fresh.matrix(), design_->rounds(), fresh.window_fill());
        }
    }
    ++t_;
}

Vector Policy::project_to_theta() const {
    if (!tracker_) return theta_hat();
    const MleSolution& sol = tracker_->solution();
    if (sol.theta_hat.norm() <= bounds_.S) return sol.theta_hat;
    // deterministic per round so repeated calls agree
    Rng rng = make_stream(t_, 0x70726f6a);
    const auto w = scheme_weights(tracker_->history(), conf_.scheme);
    return glbandit::project_to_theta(tracker_->history(), w, family_, *design_, sol.theta_hat, bounds_.S, rng);
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, const GlmFamily& family, const ModelBounds& bounds,
                                    const ConfidenceParams& conf, std::uint64_t seed) {
    return std::make_unique<Policy>(cfg, family, bounds, conf, seed);
}

}  // namespace glbandit
