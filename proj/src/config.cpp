#include "glbandit/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace glbandit {

using nlohmann::json;

namespace {

/// Typed access to one json object with its path, rejecting keys nobody asked for.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    const json& raw(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }
    std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const char* key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        return v.get<double>();
    }
    std::size_t count(const char* key, std::size_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(at(key), "expected a nonnegative integer");
        return v.get<std::size_t>();
    }
    std::uint64_t u64(const char* key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ConfigError(at(key), "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }
    bool boolean(const char* key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v.get<bool>();
    }
    std::string string(const char* key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key().c_str()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Vector vector_from(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

json vector_to(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

GammaRule gamma_from(const json& j, const std::string& path) {
    GammaRule r;
    if (j.is_number()) {
        r.theorem = false;
        r.value = j.get<double>();
        return r;
    }
    Node n(j, path);
    const std::string rule = n.string("rule", "theorem");
    if (rule != "theorem") throw ConfigError(n.at("rule"), "expected \"theorem\" or a number");
    if (n.has("breakpoints")) r.breakpoints = n.count("breakpoints", 0);
    n.finish();
    return r;
}

json gamma_to(const GammaRule& r) {
    if (!r.theorem) return r.value;
    json j = {{"rule", "theorem"}};
    if (r.breakpoints) j["breakpoints"] = *r.breakpoints;
    return j;
}

TauRule tau_from(const json& j, const std::string& path) {
    TauRule r;
    if (j.is_number_integer()) {
        r.theorem = false;
        if (j.get<long long>() < 1) throw ConfigError(path, "window length must be at least 1");
        r.value = j.get<std::size_t>();
        return r;
    }
    Node n(j, path);
    const std::string rule = n.string("rule", "theorem");
    if (rule != "theorem") throw ConfigError(n.at("rule"), "expected \"theorem\" or an integer");
    if (n.has("breakpoints")) r.breakpoints = n.count("breakpoints", 0);
    n.finish();
    return r;
}

json tau_to(const TauRule& r) {
    if (!r.theorem) return r.value;
    json j = {{"rule", "theorem"}};
    if (r.breakpoints) j["breakpoints"] = *r.breakpoints;
    return j;
}

const char* action_kind_name(ActionGenerator::Kind k) {
    switch (k) {
        case ActionGenerator::Kind::sphere: return "sphere";
        case ActionGenerator::Kind::ball: return "ball";
        case ActionGenerator::Kind::fixed: return "fixed";
    }
    return "sphere";
}

json to_json(const ExperimentConfig& c) {
    json env = {{"family", c.family}, {"dim", c.d}, {"S", c.S}, {"horizon", c.T}};
    if (c.reward_cap > 0.0) env["reward_cap"] = c.reward_cap;
    env["noise_sigma"] = c.noise_sigma;
    json segs = json::array();
    for (const auto& s : c.segments) {
        json e = {{"start", s.start}};
        if (s.theta) e["theta"] = vector_to(*s.theta);
        if (s.polar) e["polar"] = {(*s.polar)[0], (*s.polar)[1]};
        segs.push_back(e);
    }
    env["segments"] = segs;
    json act = {{"kind", action_kind_name(c.actions.kind)}};
    if (c.actions.kind == ActionGenerator::Kind::fixed) {
        json vs = json::array();
        for (const auto& v : c.actions.fixed) vs.push_back(vector_to(v));
        act["vectors"] = vs;
    } else {
        act["count"] = c.actions.count;
    }
    env["actions"] = act;

    json pols = json::array();
    for (const auto& p : c.policies) {
        json e = {{"kind", std::string(to_string(p.policy.kind))}};
        if (!p.policy.label.empty()) e["label"] = p.policy.label;
        e["refined_bonus"] = p.policy.refined_bonus;
        e["projection"] = p.policy.projection;
        if (p.policy.kind == PolicyKind::KArmSwUcb) {
            e["xi"] = p.policy.xi;
            e["B"] = p.policy.karm_B;
        }
        if (p.gamma) e["gamma"] = gamma_to(*p.gamma);
        if (p.tau) e["tau"] = tau_to(*p.tau);
        if (p.bonus_scale) e["bonus_scale"] = *p.bonus_scale;
        pols.push_back(e);
    }
    json j = {{"name", c.name},
              {"environment", env},
              {"policies", pols},
              {"gamma", gamma_to(c.gamma)},
              {"tau", tau_to(c.tau)},
              {"delta", c.delta},
              {"bonus_scale", c.bonus_scale},
              {"reps", c.n_reps},
              {"seed", c.base_seed},
              {"output_dir", c.output_dir},
              {"parallelism", c.parallelism},
              {"write_traces", c.write_traces}};
    if (c.lambda.d_log_T) j["lambda"] = "d_log_T";
    else j["lambda"] = c.lambda.value;
    return j;
}

ExperimentConfig from_json(const json& root) {
    ExperimentConfig c;
    Node top(root, "");
    c.name = top.string("name", "");
    {
        if (!top.has("environment")) throw ConfigError("environment", "missing");
        Node env(top.raw("environment"), "environment");
        c.family = env.string("family", "logistic");
        c.reward_cap = env.number("reward_cap", 0.0);
        c.noise_sigma = env.number("noise_sigma", 0.1);
        c.d = env.count("dim", 2);
        c.S = env.number("S", 1.0);
        c.T = env.count("horizon", 1000);
        if (!env.has("segments")) throw ConfigError("environment.segments", "missing");
        const json& segs = env.raw("segments");
        if (!segs.is_array()) throw ConfigError("environment.segments", "expected an array");
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const std::string at = "environment.segments[" + std::to_string(i) + "]";
            Node sn(segs[i], at);
            SegmentEntry s;
            s.start = sn.count("start", 1);
            if (sn.has("theta")) s.theta = vector_from(sn.raw("theta"), at + ".theta");
            if (sn.has("polar")) {
                const Vector p = vector_from(sn.raw("polar"), at + ".polar");
                if (p.size() != 2) throw ConfigError(at + ".polar", "expected [radius, angle]");
                s.polar = std::array<double, 2>{p(0), p(1)};
            }
            if (s.theta.has_value() == s.polar.has_value())
                throw ConfigError(at, "give exactly one of theta or polar");
            sn.finish();
            c.segments.push_back(std::move(s));
        }
        if (env.has("actions")) {
            Node an(env.raw("actions"), "environment.actions");
            const std::string kind = an.string("kind", "sphere");
            if (kind == "sphere") c.actions.kind = ActionGenerator::Kind::sphere;
            else if (kind == "ball") c.actions.kind = ActionGenerator::Kind::ball;
            else if (kind == "fixed") c.actions.kind = ActionGenerator::Kind::fixed;
            else throw ConfigError("environment.actions.kind", "expected sphere, ball or fixed");
            if (c.actions.kind == ActionGenerator::Kind::fixed) {
                if (!an.has("vectors")) throw ConfigError("environment.actions.vectors", "missing");
                const json& vs = an.raw("vectors");
                if (!vs.is_array()) throw ConfigError("environment.actions.vectors", "expected an array");
                for (std::size_t i = 0; i < vs.size(); ++i)
                    c.actions.fixed.push_back(
                        vector_from(vs[i], "environment.actions.vectors[" + std::to_string(i) + "]"));
                c.actions.count = c.actions.fixed.size();
            } else {
                c.actions.count = an.count("count", 50);
            }
            an.finish();
        }
        env.finish();
    }
    if (!top.has("policies")) throw ConfigError("policies", "missing");
    const json& pols = top.raw("policies");
    if (!pols.is_array()) throw ConfigError("policies", "expected an array");
    for (std::size_t i = 0; i < pols.size(); ++i) {
        const std::string at = "policies[" + std::to_string(i) + "]";
        Node pn(pols[i], at);
        PolicyEntry e;
        if (!pn.has("kind")) throw ConfigError(at + ".kind", "missing");
        try {
            e.policy.kind = policy_kind_from_string(pn.string("kind", ""));
        } catch (const ConfigError& err) {
            throw ConfigError(at + ".kind", err.what());
        }
        e.policy.label = pn.string("label", "");
        e.policy.refined_bonus = pn.boolean("refined_bonus", true);
        e.policy.projection = pn.boolean("projection", false);
        e.policy.xi = pn.number("xi", e.policy.xi);
        e.policy.karm_B = pn.number("B", e.policy.karm_B);
        if (pn.has("gamma")) e.gamma = gamma_from(pn.raw("gamma"), at + ".gamma");
        if (pn.has("tau")) e.tau = tau_from(pn.raw("tau"), at + ".tau");
        if (pn.has("bonus_scale")) e.bonus_scale = pn.number("bonus_scale", 1.0);
        pn.finish();
        c.policies.push_back(std::move(e));
    }
    if (top.has("gamma")) c.gamma = gamma_from(top.raw("gamma"), "gamma");
    if (top.has("tau")) c.tau = tau_from(top.raw("tau"), "tau");
    if (top.has("lambda")) {
        const json& l = top.raw("lambda");
        if (l.is_string() && l.get<std::string>() == "d_log_T") {
            c.lambda.d_log_T = true;
        } else if (l.is_number()) {
            c.lambda.d_log_T = false;
            c.lambda.value = l.get<double>();
        } else {
            throw ConfigError("lambda", "expected \"d_log_T\" or a number");
        }
    }
    c.delta = top.number("delta", c.delta);
    c.bonus_scale = top.number("bonus_scale", c.bonus_scale);
    c.n_reps = top.count("reps", c.n_reps);
    c.base_seed = top.u64("seed", c.base_seed);
    c.output_dir = top.string("output_dir", c.output_dir);
    c.parallelism = top.count("parallelism", c.parallelism);
    c.write_traces = top.boolean("write_traces", c.write_traces);
    top.finish();
    return c;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

std::size_t gamma_breakpoints(const std::optional<std::size_t>& given, const ExperimentConfig& c) {
    return given ? *given : c.segments.size();
}

double evaluate_gamma(const GammaRule& r, const ExperimentConfig& c, const std::string& path) {
    double g = r.value;
    if (r.theorem) {
        const std::size_t b = gamma_breakpoints(r.breakpoints, c);
        if (b == 0) throw ConfigError(path + ".breakpoints", "the theorem rule needs at least one breakpoint");
        g = theorem_gamma(b, c.d, c.T);
    }
    if (!(g > 0.0 && g < 1.0)) throw ConfigError(path, "discount factor must lie in (0, 1)");
    return g;
}

std::size_t evaluate_tau(const TauRule& r, const ExperimentConfig& c, const std::string& path) {
    if (!r.theorem) return r.value;
    const std::size_t b = gamma_breakpoints(r.breakpoints, c);
    if (b == 0) throw ConfigError(path + ".breakpoints", "the theorem rule needs at least one breakpoint");
    return theorem_tau(b, c.d, c.T);
}

}  // namespace

double theorem_gamma(std::size_t breakpoints, std::size_t d, std::size_t T) {
    return 1.0 - std::pow(static_cast<double>(breakpoints) / (static_cast<double>(d) * static_cast<double>(T)), 2.0 / 3.0);
}

std::size_t theorem_tau(std::size_t breakpoints, std::size_t d, std::size_t T) {
    const double v = std::pow(static_cast<double>(d) * static_cast<double>(T) / static_cast<double>(breakpoints), 2.0 / 3.0);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(v - 1e-9)));
}

ResolvedExperiment resolve(const ExperimentConfig& c) {
    ResolvedExperiment r;
    GlmFamily family;
    try {
        family = family_from_name(c.family, c.reward_cap);
    } catch (const ConfigError& e) {
        throw ConfigError("environment." + e.field(), e.what());
    }
    if (!(c.noise_sigma > 0.0)) throw ConfigError("environment.noise_sigma", "must be positive");
    family.noise_sigma = c.noise_sigma;
    if (c.d < 1) throw ConfigError("environment.dim", "must be at least 1");
    if (c.T < 1) throw ConfigError("environment.horizon", "must be at least 1");
    if (!(c.S > 0.0)) throw ConfigError("environment.S", "must be positive");
    if (!(c.delta > 0.0 && c.delta <= 1.0)) throw ConfigError("delta", "must lie in (0, 1]");
    if (!(c.bonus_scale > 0.0)) throw ConfigError("bonus_scale", "must be positive");
    if (c.n_reps < 1) throw ConfigError("reps", "must be at least 1");
    if (c.policies.empty()) throw ConfigError("policies", "at least one policy is required");

    EnvironmentSpec& env = r.env;
    env.d = c.d;
    env.family = family;
    env.S = c.S;
    env.T = c.T;
    env.actions = c.actions;
    for (std::size_t i = 0; i < c.segments.size(); ++i) {
        const auto& s = c.segments[i];
        Segment seg;
        seg.start = s.start;
        if (s.polar) {
            if (c.d != 2) throw ConfigError("environment.segments[" + std::to_string(i) + "].polar", "polar form needs dim 2");
            seg.theta = polar((*s.polar)[0], (*s.polar)[1]);
        } else {
            seg.theta = *s.theta;
        }
        env.segments.push_back(std::move(seg));
    }
    env.validate();

    if (c.lambda.d_log_T) {
        if (c.T < 2) throw ConfigError("lambda", "d_log_T needs a horizon of at least 2");
        r.lambda = static_cast<double>(c.d) * std::log(static_cast<double>(c.T));
    } else {
        r.lambda = c.lambda.value;
    }
    if (!(r.lambda > 0.0)) throw ConfigError("lambda", "must be positive");
    const ModelBounds bounds = make_bounds(family, c.S, r.lambda);

    const bool needs_gamma = std::any_of(c.policies.begin(), c.policies.end(), [](const PolicyEntry& p) {
        return required_scheme(p.policy.kind) == ForgettingScheme::Kind::discount && !p.gamma;
    });
    const bool needs_tau = std::any_of(c.policies.begin(), c.policies.end(), [](const PolicyEntry& p) {
        return required_scheme(p.policy.kind) == ForgettingScheme::Kind::window && !p.tau;
    });
    if (needs_gamma) r.gamma = evaluate_gamma(c.gamma, c, "gamma");
    if (needs_tau) r.tau = evaluate_tau(c.tau, c, "tau");

    std::set<std::string> names;
    for (std::size_t i = 0; i < c.policies.size(); ++i) {
        const auto& e = c.policies[i];
        const std::string at = "policies[" + std::to_string(i) + "]";
        PolicySpec ps;
        ps.policy = e.policy;
        ps.bounds = bounds;
        if (!names.insert(ps.name()).second) throw ConfigError(at + ".label", "duplicate policy name " + ps.name());
        ForgettingScheme scheme;
        const bool stats = e.policy.kind != PolicyKind::Random && e.policy.kind != PolicyKind::OracleGreedy;
        switch (stats ? required_scheme(e.policy.kind) : ForgettingScheme::Kind::none) {
            case ForgettingScheme::Kind::discount:
                scheme = ForgettingScheme::discount(e.gamma ? evaluate_gamma(*e.gamma, c, at + ".gamma") : r.gamma);
                break;
            case ForgettingScheme::Kind::window:
                scheme = ForgettingScheme::window(e.tau ? evaluate_tau(*e.tau, c, at + ".tau") : r.tau);
                break;
            case ForgettingScheme::Kind::none: break;
        }
        if (e.policy.kind == PolicyKind::KArmSwUcb && c.actions.kind != ActionGenerator::Kind::fixed)
            throw ConfigError(at + ".kind", "KArmSwUcb needs a fixed action set");
        if (e.policy.kind == PolicyKind::KArmSwUcb && !(e.policy.xi > 0.0 && e.policy.karm_B > 0.0))
            throw ConfigError(at, "xi and B must be positive");
        const double scale = e.bonus_scale.value_or(c.bonus_scale);
        if (!(scale > 0.0)) throw ConfigError(at + ".bonus_scale", "must be positive");
        ps.conf = make_confidence(family, bounds, c.T, c.d, c.delta, scheme, scale);
        r.policies.push_back(std::move(ps));
    }
    return r;
}

std::string to_json_string(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ":" + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)),
                          std::string("parse error: ") + e.what());
    }
    return from_json(j);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string config_hash(const ExperimentConfig& cfg) {
    json j = to_json(cfg);
    j.erase("parallelism");
    j.erase("output_dir");
    const std::string text = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<SegmentEntry> sweep_segments(std::size_t breakpoints, std::size_t T, double S) {
    std::vector<SegmentEntry> out;
    const double step = 2.0 * std::numbers::pi / 3.0;
    for (std::size_t k = 0; k <= breakpoints; ++k) {
        SegmentEntry s;
        s.start = k == 0 ? 1 : 1 + (k * T) / (breakpoints + 1);
        s.polar = std::array<double, 2>{S, step * static_cast<double>(k + 1)};
        out.push_back(s);
    }
    return out;
}

std::vector<std::string> preset_names() { return {"figure2a", "figure2b", "stationary"}; }

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    c.family = "logistic";
    c.d = 2;
    c.actions.kind = ActionGenerator::Kind::sphere;
    c.actions.count = 50;
    c.lambda.d_log_T = true;
    c.base_seed = 1;
    c.output_dir = "out/" + name;
    const double a1 = 2.0 * std::numbers::pi / 3.0;
    const double a2 = 4.0 * std::numbers::pi / 3.0;
    if (name == "figure2a" || name == "figure2b") {
        c.S = name == "figure2a" ? 6.0 : 7.0;
        c.T = 8000;
        c.segments = {SegmentEntry{1, std::nullopt, std::array<double, 2>{c.S, a1}},
                      SegmentEntry{4000, std::nullopt, std::array<double, 2>{c.S, a2}}};
        c.gamma.theorem = true;
        c.gamma.breakpoints = 2;
        c.tau.theorem = true;
        c.tau.breakpoints = 2;
        c.delta = 0.01;
        c.bonus_scale = 0.2;
        c.n_reps = 200;
        for (const PolicyKind k : {PolicyKind::DGlmUcb, PolicyKind::LogUcb1Like, PolicyKind::GlmUcbLike,
                                   PolicyKind::DGlucbLike}) {
            PolicyEntry e;
            e.policy.kind = k;
            c.policies.push_back(e);
        }
        return c;
    }
    if (name == "stationary") {
        // optimism diagnostic: theory-scaled bonus, no breakpoint
        c.S = 6.0;
        c.T = 4000;
        c.segments = {SegmentEntry{1, std::nullopt, std::array<double, 2>{c.S, a1}}};
        c.gamma.theorem = true;
        c.gamma.breakpoints = 2;
        c.delta = 0.05;
        c.bonus_scale = 1.0;
        c.n_reps = 50;
        PolicyEntry e;
        e.policy.kind = PolicyKind::DGlmUcb;
        c.policies.push_back(e);
        return c;
    }
    throw ConfigError("preset", "unknown preset '" + name + "'");
}

}  // namespace glbandit
