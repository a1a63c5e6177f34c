#pragma once

#include <cstdint>
#include <vector>

#include "glbandit/glm.hpp"

namespace glbandit {

struct Segment {
    std::size_t start = 1;  // first round (1-based) of the segment
    Vector theta;

    bool operator==(const Segment& o) const { return start == o.start && same_vector(theta, o.theta); }
};

struct ActionGenerator {
    enum class Kind { sphere, ball, fixed };

    Kind kind = Kind::sphere;
    std::size_t count = 50;
    std::vector<Vector> fixed;

    bool operator==(const ActionGenerator& o) const {
        return kind == o.kind && count == o.count && same_vectors(fixed, o.fixed);
    }
};

struct EnvironmentSpec {
    std::size_t d = 2;
    GlmFamily family;
    double S = 1.0;
    std::size_t T = 1;
    std::vector<Segment> segments;
    ActionGenerator actions;

    /// Segment starts strictly increase from 1, ||theta*|| <= S, fixed actions have norm <= 1.
    void validate() const;
    /// Number of breakpoints (segments - 1).
    std::size_t breakpoints() const noexcept { return segments.empty() ? 0 : segments.size() - 1; }
    /// Start round of the segment containing t.
    std::size_t segment_start(std::size_t t) const;
};

/// (r cos angle, r sin angle)
Vector polar(double radius, double angle);

const Vector& theta_star(const EnvironmentSpec& spec, std::size_t t);

struct RoundContext {
    std::size_t t = 0;
    std::vector<Vector> action_set;
    Vector theta_star;
    double oracle_mean = 0.0;
    std::size_t oracle_index = 0;
};

void sample_actions(const ActionGenerator& gen, std::size_t d, Rng& rng, std::vector<Vector>& out);

RoundContext round_context(const EnvironmentSpec& spec, std::size_t t, Rng& rng);

double reward(const EnvironmentSpec& spec, const Eigen::Ref<const Vector>& a, std::size_t t, Rng& rng);

/// One realisation of a spec. Action sets come from a sequential stream; the reward of round t is drawn
/// from an engine keyed by (seed, t), so identical actions at identical rounds receive identical rewards
/// whichever policy plays them.
class Environment {
public:
    Environment(EnvironmentSpec spec, std::uint64_t seed);

    const RoundContext& next_round();
    double reward(const Eigen::Ref<const Vector>& a) const;

    const EnvironmentSpec& spec() const noexcept { return spec_; }
    const RoundContext& current() const noexcept { return ctx_; }

private:
    EnvironmentSpec spec_;
    std::uint64_t seed_;
    Rng action_rng_;
    RoundContext ctx_;
};

}  // namespace glbandit
