#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glbandit/confidence.hpp"
#include "glbandit/design.hpp"
#include "glbandit/estimator.hpp"
#include "glbandit/glm.hpp"

namespace glbandit {

enum class PolicyKind { DGlmUcb, SwGlmUcb, LogUcb1Like, GlmUcbLike, DGlucbLike, KArmSwUcb, Random, OracleGreedy };

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

/// Forgetting scheme a kind runs with: LogUcb1Like/GlmUcbLike are stationary, the D-kinds discount,
/// SwGlmUcb and KArmSwUcb use a window. Random and OracleGreedy keep no statistics.
ForgettingScheme::Kind required_scheme(PolicyKind kind);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::DGlmUcb;
    std::string label;            // defaults to the kind name
    bool refined_bonus = true;    // substitute beta_refined when admissible and smaller
    bool projection = false;      // non-convex projection of theta_hat before the mean term
    double xi = 0.6;              // KArmSwUcb exploration constant
    double karm_B = 1.0;          // KArmSwUcb reward range bound

    std::string name() const { return label.empty() ? std::string(to_string(kind)) : label; }
    bool operator==(const PolicyConfig&) const = default;
};

/// Diagnostics of the most recent select_action call.
struct Selection {
    std::size_t index = 0;
    double bonus = 0.0;         // bonus of the chosen action
    double beta = 0.0;          // beta at this round (0 for kinds without one)
    double beta_refined = 0.0;
    bool used_refined = false;
    double mle_norm = 0.0;
    bool inside_theta = true;
};

class Policy {
public:
    Policy(const PolicyConfig& cfg, const GlmFamily& family, const ModelBounds& bounds, const ConfidenceParams& conf,
           std::uint64_t seed);

    std::size_t select_action(std::span<const Vector> actions);
    void observe(const Eigen::Ref<const Vector>& a, double reward);

    /// Needed by OracleGreedy only; other kinds ignore it.
    void set_theta_star(const Vector& theta_star) { theta_star_ = theta_star; }

    /// Approximate minimiser over ||theta|| <= S of ||sum_s w_s (mu(a_s^T theta) - mu(a_s^T theta_hat)) a_s||_{V^-1}.
    Vector project_to_theta() const;

    const Selection& last_selection() const noexcept { return last_; }
    const PolicyConfig& config() const noexcept { return cfg_; }
    const ConfidenceParams& confidence() const noexcept { return conf_; }
    std::size_t rounds() const noexcept { return t_; }
    Vector theta_hat() const;
    /// Null for Random, OracleGreedy and KArmSwUcb.
    const DesignState* design() const noexcept { return design_ ? &*design_ : nullptr; }
    const MleTracker* tracker() const noexcept { return tracker_ ? &*tracker_ : nullptr; }

    /// KArmSwUcb: windowed play counts and reward sums per arm.
    const std::vector<std::size_t>& karm_counts() const noexcept { return karm_counts_; }
    const std::vector<double>& karm_sums() const noexcept { return karm_sums_; }
    /// Index of arm i at the next round; +inf when unplayed inside the window.
    double karm_index(std::size_t arm) const;

private:
    bool is_glb() const noexcept { return design_.has_value(); }
    std::size_t select_glb(std::span<const Vector> actions);
    std::size_t select_karm(std::span<const Vector> actions);

    PolicyConfig cfg_;
    GlmFamily family_;
    ModelBounds bounds_;
    ConfidenceParams conf_;
    Rng rng_;
    std::size_t t_ = 0;
    std::optional<MleTracker> tracker_;
    std::optional<DesignState> design_;
    std::optional<Vector> theta_star_;
    Selection last_;

    std::vector<std::size_t> karm_counts_;
    std::vector<double> karm_sums_;
    std::deque<std::pair<std::size_t, double>> karm_window_;
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg, const GlmFamily& family, const ModelBounds& bounds,
                                    const ConfidenceParams& conf, std::uint64_t seed);

/// Free form of the projection step used by Policy::project_to_theta; `weights` aligns with `history`.
Vector project_to_theta(const HistoryBuffer& history, const std::vector<double>& weights, const GlmFamily& family,
                        const DesignState& design, const Vector& theta_hat, double S, Rng& rng, int starts = 8);

/// Weights the scheme assigns to the stored entries, oldest first.
std::vector<double> scheme_weights(const HistoryBuffer& history, const ForgettingScheme& scheme);

}  // namespace glbandit
