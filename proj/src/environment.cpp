#include "glbandit/environment.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace glbandit {

namespace {

constexpr std::uint64_t kActionStream = 1;
constexpr std::uint64_t kRewardStream = 2;

}  // namespace

void EnvironmentSpec::validate() const {
    if (d < 1) throw ConfigError("environment.dim", "must be at least 1");
    if (!(S > 0.0)) throw ConfigError("environment.S", "must be positive");
    if (segments.empty()) throw ConfigError("environment.segments", "at least one segment is required");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::string at = "environment.segments[" + std::to_string(i) + "]";
        const Segment& s = segments[i];
        if (i == 0 && s.start != 1) throw ConfigError(at + ".start", "the first segment must start at round 1");
        if (i > 0 && s.start <= segments[i - 1].start)
            throw ConfigError(at + ".start", "segment starts must strictly increase");
        if (static_cast<std::size_t>(s.theta.size()) != d) throw ConfigError(at + ".theta", "wrong dimension");
        if (!s.theta.allFinite() || s.theta.norm() > S * (1.0 + 1e-12))
            throw ConfigError(at + ".theta", "||theta*|| exceeds S");
    }
    if (actions.kind == ActionGenerator::Kind::fixed) {
        if (actions.fixed.empty()) throw ConfigError("environment.actions.fixed", "must not be empty");
        for (const auto& a : actions.fixed)
            if (static_cast<std::size_t>(a.size()) != d || a.norm() > 1.0 + 1e-12)
                throw ConfigError("environment.actions.fixed", "actions need dimension d and norm <= 1");
    } else if (actions.count < 1) {
        throw ConfigError("environment.actions.count", "must be at least 1");
    }
}

std::size_t EnvironmentSpec::segment_start(std::size_t t) const {
    std::size_t start = 1;
    for (const auto& s : segments)
        if (s.start <= t) start = s.start;
    return start;
}

Vector polar(double radius, double angle) {
    Vector v(2);
    v << radius * std::cos(angle), radius * std::sin(angle);
    return v;
}

const Vector& theta_star(const EnvironmentSpec& spec, std::size_t t) {
    if (t < 1 || t > spec.T) throw std::out_of_range("theta_star: round " + std::to_string(t) + " outside [1, T]");
    const Segment* cur = &spec.segments.front();
    for (const auto& s : spec.segments) {
        if (s.start > t) break;
        cur = &s;
    }
    return cur->theta;
}

void sample_actions(const ActionGenerator& gen, std::size_t d, Rng& rng, std::vector<Vector>& out) {
    if (gen.kind == ActionGenerator::Kind::fixed) {
        out = gen.fixed;
        return;
    }
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    out.resize(gen.count);
    const auto di = static_cast<Eigen::Index>(d);
    for (auto& a : out) {
        a.resize(di);
        double n = 0.0;
        do {
            for (Eigen::Index j = 0; j < di; ++j) a(j) = gauss(rng);
            n = a.norm();
        } while (n == 0.0);
        double r = 1.0;
        if (gen.kind == ActionGenerator::Kind::ball) r = std::pow(unif(rng), 1.0 / static_cast<double>(d));
        a *= r / n;
    }
}

RoundContext round_context(const EnvironmentSpec& spec, std::size_t t, Rng& rng) {
    RoundContext ctx;
    ctx.t = t;
    ctx.theta_star = theta_star(spec, t);
    sample_actions(spec.actions, spec.d, rng, ctx.action_set);
    ctx.oracle_mean = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ctx.action_set.size(); ++i) {
        const double m = mean(spec.family, ctx.action_set[i].dot(ctx.theta_star));
        if (m > ctx.oracle_mean) {
            ctx.oracle_mean = m;
            ctx.oracle_index = i;
        }
    }
    return ctx;
}

double reward(const EnvironmentSpec& spec, const Eigen::Ref<const Vector>& a, std::size_t t, Rng& rng) {
    return sample_reward(spec.family, a.dot(theta_star(spec, t)), rng);
}

Environment::Environment(EnvironmentSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed), action_rng_(make_stream(seed, kActionStream)) {
    spec_.validate();
}

const RoundContext& Environment::next_round() {
    ctx_ = round_context(spec_, ctx_.t + 1, action_rng_);
    return ctx_;
}

double Environment::reward(const Eigen::Ref<const Vector>& a) const {
    Rng rng = make_stream(seed_, kRewardStream, ctx_.t);
    return glbandit::reward(spec_, a, ctx_.t, rng);
}

}  // namespace glbandit
