#include "glbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace glbandit {

std::size_t optimism_lookback(const ForgettingScheme& scheme, std::size_t T) {
    switch (scheme.kind) {
        case ForgettingScheme::Kind::discount:
            return static_cast<std::size_t>(
                std::ceil(std::log(static_cast<double>(std::max<std::size_t>(T, 2))) / std::log(1.0 / scheme.gamma)));
        case ForgettingScheme::Kind::window: return scheme.tau;
        case ForgettingScheme::Kind::none: return 0;
    }
    return 0;
}

RegretTrace run_episode(const PolicySpec& spec, const EnvironmentSpec& env_spec, std::uint64_t seed) {
    RegretTrace trace;
    trace.meta.policy = spec.name();
    trace.meta.seed = seed;
    std::size_t round = 0;
    try {
        Environment env(env_spec, seed);
        auto policy = make_policy(spec.policy, env_spec.family, spec.bounds, spec.conf, seed);
        const std::size_t lookback = optimism_lookback(spec.conf.scheme, env_spec.T);
        trace.rounds.reserve(env_spec.T);
        double cum = 0.0;
        for (round = 1; round <= env_spec.T; ++round) {
            const RoundContext& ctx = env.next_round();
            policy->set_theta_star(ctx.theta_star);
            const std::size_t idx = policy->select_action(ctx.action_set);
            const Vector& a = ctx.action_set[idx];
            const double r = env.reward(a);
            const Selection sel = policy->last_selection();
            policy->observe(a, r);

            RoundRecord rec;
            rec.t = round;
            rec.chosen_index = idx;
            rec.inst_regret = std::max(0.0, ctx.oracle_mean - mean(env_spec.family, a.dot(ctx.theta_star)));
            cum += rec.inst_regret;
            rec.cum_regret = cum;
            rec.bonus = sel.bonus;
            rec.mle_norm = sel.mle_norm;
            rec.inside_theta = sel.inside_theta;
            const std::size_t seg = env_spec.segment_start(round);
            rec.optimism_eligible = seg == 1 || round >= seg + lookback;
            rec.optimism_violation = rec.optimism_eligible && rec.inst_regret > 2.0 * sel.bonus;
            rec.used_refined = sel.used_refined;
            rec.beta = sel.beta;
            rec.beta_refined = sel.beta_refined;
            trace.rounds.push_back(rec);
        }
    } catch (const EpisodeError&) {
        throw;
    } catch (const std::exception& e) {
        const std::size_t at = round > env_spec.T ? 0 : round;
        throw EpisodeError(spec.name() + " (seed " + std::to_string(seed) + ", round " + std::to_string(at) +
                               "): " + e.what(),
                           seed, at);
    }
    return trace;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::size_t default_parallelism() {
    if (const char* env = std::getenv("GLB_PARALLELISM")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

const PolicyResult& BatchResult::at(const std::string& name) const {
    for (const auto& p : policies)
        if (p.name == name) return p;
    throw std::out_of_range("BatchResult: no policy named " + name);
}

namespace {

RepSummary summarise(const RegretTrace& trace) {
    RepSummary s;
    s.seed = trace.meta.seed;
    s.final_regret = trace.total_regret();
    for (const auto& r : trace.rounds) {
        if (r.inside_theta) {
            ++s.inside_rounds;
            if (r.beta > 0.0 && r.beta_refined >= r.beta) ++s.refined_not_tighter;
        }
        if (r.used_refined) ++s.refined_rounds;
        if (r.optimism_eligible) {
            ++s.optimism_eligible;
            if (r.optimism_violation) ++s.optimism_violations;
        }
    }
    return s;
}

}  // namespace

BatchResult run_batch(const std::vector<PolicySpec>& policies, const EnvironmentSpec& env, std::size_t n_reps,
                      std::uint64_t base_seed, std::size_t parallelism) {
    if (n_reps < 1) throw std::invalid_argument("run_batch: n_reps must be at least 1");
    if (policies.empty()) throw std::invalid_argument("run_batch: no policies");
    env.validate();
    const std::size_t T = env.T;
    const std::size_t P = policies.size();

    // curves[p][r * T + t]
    std::vector<std::vector<double>> curves(P, std::vector<double>(n_reps * T));
    std::vector<std::vector<RepSummary>> summaries(P, std::vector<RepSummary>(n_reps));
    std::vector<RegretTrace> first(P);

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr error;
    std::size_t error_rep = n_reps;

    auto worker = [&] {
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= n_reps) return;
            {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (error && r > error_rep) return;
            }
            try {
                for (std::size_t p = 0; p < P; ++p) {
                    RegretTrace trace = run_episode(policies[p], env, base_seed + r);
                    double* row = curves[p].data() + r * T;
                    for (std::size_t t = 0; t < T; ++t) row[t] = trace.rounds[t].cum_regret;
                    summaries[p][r] = summarise(trace);
                    if (r == 0) first[p] = std::move(trace);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (r < error_rep) {
                    error_rep = r;
                    error = std::current_exception();
                }
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(parallelism, n_reps));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    BatchResult out;
    out.policies.resize(P);
    std::vector<double> column(n_reps);
    for (std::size_t p = 0; p < P; ++p) {
        PolicyResult& res = out.policies[p];
        res.name = policies[p].name();
        res.reps = std::move(summaries[p]);
        res.first_trace = std::move(first[p]);
        AggregateStats& st = res.stats;
        st.n_reps = n_reps;
        st.mean.resize(T);
        st.q25.resize(T);
        st.q75.resize(T);
        for (std::size_t t = 0; t < T; ++t) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n_reps; ++r) {
                column[r] = curves[p][r * T + t];
                sum += column[r];
            }
            st.mean[t] = sum / static_cast<double>(n_reps);
            st.q25[t] = quantile(column, 0.25);
            st.q75[t] = quantile(column, 0.75);
        }
    }
    return out;
}

}  // namespace glbandit
